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

#ifndef ABRLAB_TRAIN_HPP
#define ABRLAB_TRAIN_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "abrlab/policy.hpp"
#include "abrlab/simenv.hpp"
#include "abrlab/trace.hpp"

namespace abrlab::train {

/// r = w_b * (b / unit)^v_b - w_d * d^v_d + w_c * [d > 0]
///
/// w_c <= 0 so the indicator term penalizes each stall event.
struct RewardWeights {
    double w_b = 1.0;
    double w_d = 4.0;
    double w_c = -1.0;
    double v_b = 1.0;
    double v_d = 1.0;

    bool operator==(const RewardWeights&) const = default;
    void validate() const;
};

/// Bitrates enter the reward in megabits/second.
inline constexpr double kBitrateUnit = 1000.0;

double compute_reward(const sim::StepOutcome& outcome, const RewardWeights& w, double bitrate_unit = kBitrateUnit);

std::vector<double> step_rewards(const sim::Trajectory& trajectory, const RewardWeights& w);
double total_reward(const sim::Trajectory& trajectory, const RewardWeights& w);

/// Suffix sums: out[t] = sum_{t' >= t} rewards[t'].
std::vector<double> returns(std::span<const double> rewards);

/// Per-step mean of K >= 2 equal-length return sequences collected on the
/// same trace.
std::vector<double> input_dependent_baseline(std::span<const std::vector<double>> rollout_returns);

/// Per-step mean over every sequence long enough to reach that step,
/// regardless of which trace produced it.
std::vector<double> time_based_baseline(std::span<const std::vector<double>> rollout_returns);

enum class BaselineMode { input_dependent, time_based };

BaselineMode parse_baseline_mode(const std::string& name);
std::string to_string(BaselineMode mode);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t rollouts_per_trace = 8;
    std::size_t traces_per_iteration = 16;
    std::size_t iterations = 2000;
    double entropy_weight = 0.01;
    double entropy_decay = 0.7;
    std::size_t entropy_decay_every = 200;
    double grad_clip = 10.0;
    BaselineMode baseline = BaselineMode::input_dependent;
    std::vector<std::size_t> layers{3, 32, 32, 1};
    double capacity = sim::kDefaultCapacity;
    /// Holdout traces replayed each iteration for the learning curve.
    std::size_t curve_traces = 16;
    std::size_t workers = 1;
    std::uint64_t seed = 1;

    void validate() const;
    double entropy_weight_at(std::size_t iteration) const;
};

struct CurvePoint {
    std::size_t iteration = 0;
    double mean_reward = 0.0;
    double reward_std = 0.0;  ///< across curve traces
    double entropy = 0.0;     ///< mean per-step policy entropy

    bool operator==(const CurvePoint&) const = default;
};

struct LearningCurve {
    std::vector<CurvePoint> points;

    bool operator==(const LearningCurve&) const = default;
};

/// `iter mean_reward reward_std entropy`, tab separated, with a header row.
void write_curve(std::ostream& out, const LearningCurve& curve);
void write_curve(const std::filesystem::path& path, const LearningCurve& curve);

/// Trajectories paired with per-step advantages (return - baseline).
struct GradientBatch {
    std::vector<sim::Trajectory> trajectories;
    std::vector<std::vector<double>> advantages;
};

/// Advantages for groups of rollouts (one group per trace).
std::vector<std::vector<std::vector<double>>> compute_advantages(
    const std::vector<std::vector<sim::Trajectory>>& groups, const RewardWeights& w, BaselineMode mode);

/// Ascent direction: mean over trajectories of
///   sum_t [ A_t * grad log pi(a_t|s_t) + entropy_weight * grad H(pi(.|s_t)) ].
/// Summed in trajectory order, so the result is independent of `workers`.
std::vector<double> batch_gradient(const policy::PolicyParams& params, const policy::NormalizationSpec& norm,
                                   const GradientBatch& batch, double entropy_weight, std::size_t workers = 1);

/// One clipped gradient-ascent step. Throws std::runtime_error on a
/// non-finite gradient.
policy::PolicyParams policy_gradient_update(const policy::PolicyParams& params,
                                            const policy::NormalizationSpec& norm, const GradientBatch& batch,
                                            const TrainConfig& config, double entropy_weight);

/// Normalization for a trace set: size scale = largest nominal chunk size.
policy::NormalizationSpec default_normalization(const trace::TraceSet& traces, double capacity);

struct TrainResult {
    policy::PolicyParams params;
    policy::NormalizationSpec norm;
    LearningCurve curve;
};

/// Full REINFORCE loop over the train split. The learning curve replays a
/// fixed subset of holdout traces (train traces when the holdout is empty)
/// after each update.
TrainResult train(const trace::TraceSet& traces, const RewardWeights& w, const TrainConfig& config);

/// Same loop from explicit starting parameters.
TrainResult train(const trace::TraceSet& traces, const RewardWeights& w, const TrainConfig& config,
                  policy::PolicyParams initial, policy::NormalizationSpec norm);

/// Total reward of one session per trace, each trace with its own derived seed.
std::vector<double> session_rewards(const sim::DecisionFn& decision, const trace::TraceSet& traces,
                                    const RewardWeights& w, double capacity, std::uint64_t seed,
                                    std::size_t workers = 1);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> values);

}  // namespace abrlab::train

#endif  // ABRLAB_TRAIN_HPP
