// Copyright 2026 The abrlab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef ABRLAB_POLICY_HPP
#define ABRLAB_POLICY_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "abrlab/common.hpp"
#include "abrlab/simenv.hpp"

namespace abrlab::policy {

/// Weight-shared priority network. Every encoding i is scored by the same
/// MLP applied to (prediction, buffer, size_i); the scores are turned into
/// a distribution by a softmax over encodings, so one parameter vector
/// serves ladders of any length.
///
/// Layout of theta: for each layer, the row-major weight matrix
/// [out x in] followed by the bias vector [out]. Hidden layers use the
/// rectifier; the output layer is linear.
struct PolicyParams {
    std::vector<std::size_t> layers{3, 32, 32, 1};
    std::vector<double> theta;

    bool operator==(const PolicyParams&) const = default;
};

std::size_t parameter_count(std::span<const std::size_t> layers);

/// Throws std::invalid_argument unless layers are 3 -> ... -> 1 and theta
/// has the matching length with finite entries.
void validate(const PolicyParams& params);

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
PolicyParams init_params(std::vector<std::size_t> layers, std::uint64_t seed);

struct NormalizationSpec {
    double bandwidth = 10000.0;  ///< kbps
    double buffer = sim::kDefaultCapacity;  ///< seconds
    double size = 8600.0;  ///< kilobits, largest chunk of the training ladder

    bool operator==(const NormalizationSpec&) const = default;
    void validate() const;
};

std::vector<double> priorities(const PolicyParams& params, const NormalizationSpec& norm,
                               const sim::Observation& obs);

/// Softmax with max-subtraction.
std::vector<double> action_distribution(std::span<const double> priorities);

double entropy(std::span<const double> probs);

std::size_t sample_action(std::span<const double> probs, Rng& rng);

/// Accumulates sum_i upstream[i] * d q_i / d theta into grad.
void backprop_priorities(const PolicyParams& params, const NormalizationSpec& norm, const sim::Observation& obs,
                         std::span<const double> upstream, std::span<double> grad);

/// Adds advantage * grad log pi(action | obs) + entropy_weight * grad H(pi(. | obs))
/// to grad with a single forward pass per encoding. Returns H(pi(. | obs)).
double accumulate_step_gradient(const PolicyParams& params, const NormalizationSpec& norm,
                                const sim::Observation& obs, std::size_t action, double advantage,
                                double entropy_weight, std::span<double> grad);

/// Exact gradient of log pi(action | obs) with respect to theta.
std::vector<double> grad_log_prob(const PolicyParams& params, const NormalizationSpec& norm,
                                  const sim::Observation& obs, std::size_t action);

/// Samples from the policy's distribution.
sim::DecisionFn stochastic_decision(PolicyParams params, NormalizationSpec norm);
/// Picks the highest-priority encoding (lowest index on ties).
sim::DecisionFn greedy_decision(PolicyParams params, NormalizationSpec norm);

enum class HeuristicKind { rate_based, buffer_based };

struct HeuristicPolicySpec {
    HeuristicKind kind = HeuristicKind::rate_based;
    double rate_safety = 0.8;
    /// Seconds of buffer needed to select each rung. When empty, thresholds
    /// are spread linearly: rung 0 at 0 s, rung 1 at `reservoir`, the top
    /// rung at `cushion`.
    std::vector<double> buffer_thresholds;
    double reservoir = 5.0;
    double cushion = 20.0;
    /// Observations carry chunk sizes only; encoded rate = size / duration.
    double chunk_duration = 2.0;

    void validate() const;
};

std::vector<double> default_buffer_thresholds(std::size_t encodings, double reservoir, double cushion);

std::size_t heuristic_decide(const HeuristicPolicySpec& spec, const sim::Observation& obs);
sim::DecisionFn heuristic_decision(HeuristicPolicySpec spec);

struct LinearPolicyParams {
    double a = 0.0;  ///< kilobits per kbps of predicted bandwidth
    double b = 0.0;  ///< kilobits per second of buffer
    double c = 0.0;  ///< kilobits

    bool operator==(const LinearPolicyParams&) const = default;
    double intended(double prediction, double buffer) const noexcept { return a * prediction + b * buffer + c; }
};

/// Largest index with sizes[index] <= intended; 0 when none qualifies.
std::size_t max_size_below(std::span<const double> sizes, double intended);

std::size_t linear_decide(const LinearPolicyParams& params, const sim::Observation& obs);
sim::DecisionFn linear_decision(LinearPolicyParams params);

// Checkpoints. `#abrpolicy v1` holds layer sizes, normalization scales and
// theta; `#abrlinear v1` holds `a b c` on one line.
struct PolicyCheckpoint {
    PolicyParams params;
    NormalizationSpec norm;
};

void write_policy(std::ostream& out, const PolicyParams& params, const NormalizationSpec& norm);
void write_policy(const std::filesystem::path& path, const PolicyParams& params, const NormalizationSpec& norm);
PolicyCheckpoint read_policy(std::istream& in);
PolicyCheckpoint load_policy(const std::filesystem::path& path);

void write_linear(std::ostream& out, const LinearPolicyParams& params);
void write_linear(const std::filesystem::path& path, const LinearPolicyParams& params);
LinearPolicyParams read_linear(std::istream& in);
LinearPolicyParams load_linear(const std::filesystem::path& path);

}  // namespace abrlab::policy

#endif  // ABRLAB_POLICY_HPP
