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

#ifndef ABRLAB_TRANSLATE_HPP
#define ABRLAB_TRANSLATE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abrlab/policy.hpp"
#include "abrlab/simenv.hpp"
#include "abrlab/trace.hpp"

namespace abrlab::translate {

struct DesignPoint {
    double x = 0.0;       ///< bandwidth prediction, kbps
    double o = 0.0;       ///< buffer occupancy, seconds
    double target = 0.0;  ///< intended bitrate, kilobits of chunk size
};

struct TranslateConfig {
    std::size_t points = 2000;
    std::size_t probe_count = 5;
    double probe_min = 600.0;    ///< kilobits
    double probe_max = 8600.0;   ///< kilobits
    double x_min = 200.0;        ///< kbps
    double x_max = 20000.0;      ///< kbps
    double o_min = 0.0;
    double o_max = sim::kDefaultCapacity;
    std::uint64_t seed = 1;

    void validate() const;
    /// probe_count equally spaced sizes from probe_min to probe_max.
    std::vector<double> probe_ladder() const;
};

/// Ranges taken from data: probes span the smallest and largest chunk sizes
/// of the training ladders, x spans the 1st..99th percentile of the
/// prediction values seen in `holdout`, o spans [0, capacity].
TranslateConfig config_from_traces(const trace::TraceSet& traces, double capacity);

/// Probability-weighted mean of the probe sizes under the policy's
/// action distribution at (x, o).
double intended_bitrate(const policy::PolicyParams& params, const policy::NormalizationSpec& norm, double x, double o,
                        std::span<const double> sizes);

/// `points` uniform (x, o) draws over the configured ranges with their targets.
std::vector<DesignPoint> build_design(const policy::PolicyParams& params, const policy::NormalizationSpec& norm,
                                      const TranslateConfig& config);

/// Least squares fit of target ~ a x + b o + c. Throws std::invalid_argument
/// on fewer than 3 points or a rank-deficient design.
policy::LinearPolicyParams fit_linear(std::span<const DesignPoint> points);

struct FitReport {
    double rmse = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

FitReport fit_report(const policy::LinearPolicyParams& fit, std::span<const DesignPoint> points);

/// `rmse=<v> r2=<v> n=<N>`.
std::string format_fit_report(const FitReport& report);

struct Translation {
    policy::LinearPolicyParams linear;
    FitReport report;
};

Translation translate_policy(const policy::PolicyParams& params, const policy::NormalizationSpec& norm,
                             const TranslateConfig& config);

}  // namespace abrlab::translate

#endif  // ABRLAB_TRANSLATE_HPP
