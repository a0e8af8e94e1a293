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

#ifndef ABRLAB_SHAPING_HPP
#define ABRLAB_SHAPING_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "abrlab/gp.hpp"
#include "abrlab/train.hpp"
#include "abrlab/trace.hpp"

namespace abrlab::shaping {

enum class Scale { linear, log };

struct Dimension {
    double lower = 0.0;
    double upper = 1.0;
    Scale scale = Scale::linear;

    double to_unit(double v) const;
    double from_unit(double u) const;
};

/// Bounds for (w_b, w_d, w_c, v_b, v_d), in that order.
struct SearchSpace {
    std::array<Dimension, 5> dims{{
        {0.1, 10.0, Scale::log},
        {0.1, 50.0, Scale::log},
        {-5.0, 0.0, Scale::linear},
        {0.5, 2.0, Scale::linear},
        {0.5, 2.0, Scale::linear},
    }};

    void validate() const;
    Eigen::VectorXd to_unit(const train::RewardWeights& w) const;
    /// Inputs are clamped to the unit cube first.
    train::RewardWeights from_unit(const Eigen::VectorXd& u) const;
};

struct EvaluationRecord {
    std::size_t round = 0;  ///< 0 for the initial design
    train::RewardWeights w;
    double q_mean = 0.0;
    double q_se = 0.0;
    double l_mean = 0.0;
    double l_se = 0.0;
    std::size_t replicates = 0;
};

struct ShapingConfig {
    std::size_t initial_points = 64;
    std::size_t batch_size = 8;
    std::size_t rounds = 4;
    double constraint_ratio = 1.05;   ///< C
    double baseline_stall = 1.0;      ///< l_s, stall seconds per minute
    std::size_t mc_samples = 32;
    std::size_t candidates = 512;
    std::size_t local_candidates = 64;
    double local_scale = 0.05;        ///< perturbation sd on the unit cube
    std::size_t refine_starts = 3;
    std::size_t refine_evaluations = 120;
    std::size_t replicates = 3;
    std::size_t workers = 1;
    std::uint64_t seed = 1;
    GpFitOptions gp;

    void validate() const;
    double stall_threshold() const noexcept { return constraint_ratio * baseline_stall; }
};

/// Closed-form E[max(0, f - f_star)] for f ~ N(mean, variance).
double expected_improvement(double mean, double variance, double f_star);
double expected_improvement(const GpModel& gp, const Eigen::VectorXd& x, double f_star);

/// Standard normal CDF.
double normal_cdf(double z);

/// Quasi-random standard normal draws: `count` rows of `dims` columns from a
/// randomly shifted Sobol sequence.
Eigen::MatrixXd sobol_normals(std::size_t count, std::size_t dims, std::uint64_t seed);
/// `count` quasi-random points on the unit cube (randomly shifted Sobol).
std::vector<Eigen::VectorXd> sobol_points(std::size_t count, std::size_t dims, std::uint64_t seed);

/// Joint posterior samples of the latent (q, l) values at the observed inputs,
/// kept fixed while the acquisition is scored and maximized.
class NeiSampler {
public:
    NeiSampler(const GpModel& gp_q, const GpModel& gp_l, double threshold, std::size_t samples, std::uint64_t seed);

    /// Monte Carlo NEI: per sample, the incumbent is the best sampled q among
    /// observed points whose sampled l is within the threshold (or, when none
    /// is, the q of the point with the smallest sampled l); the candidate
    /// score is EI on q times P(l <= threshold) under the sample-conditioned
    /// posterior, averaged over samples.
    double score(const Eigen::VectorXd& x) const;

    std::size_t samples() const noexcept { return incumbents_.size(); }
    const std::vector<double>& incumbents() const noexcept { return incumbents_; }

private:
    const GpModel* gp_q_;
    const GpModel* gp_l_;
    double threshold_;
    Eigen::MatrixXd fq_;  // samples x points
    Eigen::MatrixXd fl_;
    std::vector<double> incumbents_;
};

/// NEI score for each candidate (unit-cube inputs).
std::vector<double> nei_acquisition(const GpModel& gp_q, const GpModel& gp_l, std::span<const Eigen::VectorXd> candidates,
                                    const ShapingConfig& config, std::uint64_t seed);

/// Greedy batch of `config.batch_size` distinct unit-cube points. Each pick
/// maximizes NEI over quasi-random and local candidates followed by
/// Nelder-Mead refinement, then is fantasized at its posterior mean.
std::vector<Eigen::VectorXd> propose_batch(const GpModel& gp_q, const GpModel& gp_l,
                                           std::span<const EvaluationRecord> data, const SearchSpace& space,
                                           const ShapingConfig& config, std::uint64_t seed);

struct Measurement {
    double q = 0.0;  ///< mean selected bitrate, kbps
    double l = 0.0;  ///< stall seconds per minute
};

/// One replicate of the (train, evaluate) pipeline at `w` with `seed`.
using BlackBox = std::function<Measurement(const train::RewardWeights& w, std::uint64_t seed)>;

struct ShapingResult {
    std::vector<EvaluationRecord> records;
    std::vector<std::size_t> pareto;          ///< indices into records
    std::optional<std::size_t> feasible_best;  ///< highest q_mean with l_mean <= C l_s
    double threshold = 0.0;
};

/// Called after every completed round (0 = initial design).
using RoundCallback = std::function<void(std::size_t round, std::span<const EvaluationRecord> records)>;

ShapingResult optimize_rewards(const BlackBox& black_box, const SearchSpace& space, const ShapingConfig& config,
                               const RoundCallback& on_round = {});

/// Non-dominated records: maximize q_mean, minimize l_mean.
std::vector<std::size_t> pareto_front(std::span<const EvaluationRecord> records);
std::optional<std::size_t> feasible_best(std::span<const EvaluationRecord> records, double threshold);

/// Black box that trains with train_config (seeded per replicate) and
/// measures (q, l) of the stochastic policy on the holdout split.
BlackBox training_black_box(trace::TraceSet traces, train::TrainConfig train_config);

/// Stall rate of the rate-based heuristic on the holdout split, the l_s of
/// the constraint.
double heuristic_stall_rate(const trace::TraceSet& traces, double capacity, std::uint64_t seed);

void write_log(std::ostream& out, const ShapingResult& result, const ShapingConfig& config);
void write_log(const std::filesystem::path& path, const ShapingResult& result, const ShapingConfig& config);

struct ShapingLog {
    double baseline_stall = 0.0;
    double constraint_ratio = 0.0;
    std::vector<EvaluationRecord> records;
    std::vector<EvaluationRecord> pareto;
    std::vector<bool> feasible;         ///< per record
    std::vector<bool> pareto_feasible;  ///< per pareto row
};

ShapingLog read_log(std::istream& in);
ShapingLog load_log(const std::filesystem::path& path);

}  // namespace abrlab::shaping

#endif  // ABRLAB_SHAPING_HPP
