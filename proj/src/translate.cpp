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

#include "abrlab/translate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/QR>

#include "abrlab/common.hpp"
#include "abrlab/evalrep.hpp"

namespace abrlab::translate {

void TranslateConfig::validate() const {
    if (points < 3) throw std::invalid_argument("translate.points must be >= 3");
    if (probe_count < 2) throw std::invalid_argument("translate.probe_count must be >= 2");
    if (!(probe_min > 0.0) || !(probe_max > probe_min))
        throw std::invalid_argument("translate.probe_min/probe_max must satisfy 0 < min < max");
    if (!(x_min > 0.0) || !(x_max > x_min)) throw std::invalid_argument("translate.x_min/x_max must satisfy 0 < min < max");
    if (!(o_min >= 0.0) || !(o_max > o_min)) throw std::invalid_argument("translate.o_min/o_max must satisfy 0 <= min < max");
}

std::vector<double> TranslateConfig::probe_ladder() const {
    std::vector<double> sizes(probe_count);
    const double step = (probe_max - probe_min) / static_cast<double>(probe_count - 1);
    for (std::size_t i = 0; i < probe_count; ++i) sizes[i] = probe_min + step * static_cast<double>(i);
    sizes.back() = probe_max;
    return sizes;
}

TranslateConfig config_from_traces(const trace::TraceSet& traces, double capacity) {
    if (traces.empty()) throw std::invalid_argument("config_from_traces: no traces");
    TranslateConfig cfg;
    auto train_idx = traces.train_indices();
    auto hold_idx = traces.holdout_indices();
    if (train_idx.empty()) train_idx = hold_idx;
    if (hold_idx.empty()) hold_idx = train_idx;

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i : train_idx) {
        const auto& t = traces[i];
        lo = std::min(lo, t.ladder().front() * t.chunk_duration());
        hi = std::max(hi, t.ladder().back() * t.chunk_duration());
    }
    cfg.probe_min = lo;
    cfg.probe_max = hi > lo ? hi : lo * 2.0;

    std::vector<double> predictions;
    for (std::size_t i : hold_idx)
        for (const auto& r : traces[i].records()) predictions.push_back(r.prediction);
    std::sort(predictions.begin(), predictions.end());
    cfg.x_min = evalrep::quantile_sorted(predictions, 0.01);
    cfg.x_max = evalrep::quantile_sorted(predictions, 0.99);
    if (!(cfg.x_max > cfg.x_min)) cfg.x_max = cfg.x_min * 1.01 + 1.0;

    cfg.o_min = 0.0;
    cfg.o_max = capacity;
    cfg.validate();
    return cfg;
}

double intended_bitrate(const policy::PolicyParams& params, const policy::NormalizationSpec& norm, double x, double o,
                        std::span<const double> sizes) {
    sim::Observation obs{x, o, std::vector<double>(sizes.begin(), sizes.end())};
    const auto probs = policy::action_distribution(policy::priorities(params, norm, obs));
    double n = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) n += sizes[i] * probs[i];
    return std::clamp(n, sizes.front(), sizes.back());
}

std::vector<DesignPoint> build_design(const policy::PolicyParams& params, const policy::NormalizationSpec& norm,
                                      const TranslateConfig& config) {
    config.validate();
    const auto sizes = config.probe_ladder();
    Rng rng(derive_seed(config.seed, {0x7a11ull}));
    std::uniform_real_distribution<double> ux(config.x_min, config.x_max), uo(config.o_min, config.o_max);
    std::vector<DesignPoint> points(config.points);
    for (auto& p : points) {
        p.x = ux(rng);
        p.o = uo(rng);
    }
    for (auto& p : points) p.target = intended_bitrate(params, norm, p.x, p.o, sizes);
    return points;
}

policy::LinearPolicyParams fit_linear(std::span<const DesignPoint> points) {
    if (points.size() < 3) throw std::invalid_argument("fit_linear: need at least 3 design points");
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        a(i, 0) = p.x;
        a(i, 1) = p.o;
        a(i, 2) = 1.0;
        y[i] = p.target;
    }
    // Column scaling keeps the rank test meaningful when x is in the thousands.
    Eigen::Vector3d scale = a.colwise().norm().transpose();
    for (int j = 0; j < 3; ++j)
        if (scale[j] == 0.0) throw std::invalid_argument("fit_linear: rank-deficient design");
    const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(as);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw std::invalid_argument("fit_linear: rank-deficient design (need varied x and o)");
    const Eigen::Vector3d beta = qr.solve(y).cwiseQuotient(scale);
    return {beta[0], beta[1], beta[2]};
}

FitReport fit_report(const policy::LinearPolicyParams& fit, std::span<const DesignPoint> points) {
    FitReport r;
    r.points = points.size();
    if (points.empty()) return r;
    double mean = 0.0;
    for (const auto& p : points) mean += p.target;
    mean /= static_cast<double>(points.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& p : points) {
        const double e = p.target - fit.intended(p.x, p.o);
        ss_res += e * e;
        ss_tot += (p.target - mean) * (p.target - mean);
    }
    r.rmse = std::sqrt(ss_res / static_cast<double>(points.size()));
    if (ss_tot > 0.0)
        r.r_squared = 1.0 - ss_res / ss_tot;
    else
        r.r_squared = ss_res <= 1e-12 * (1.0 + mean * mean) ? 1.0 : 0.0;
    return r;
}

std::string format_fit_report(const FitReport& report) {
    return "rmse=" + format_double(report.rmse) + " r2=" + format_double(report.r_squared) +
           " n=" + std::to_string(report.points);
}

Translation translate_policy(const policy::PolicyParams& params, const policy::NormalizationSpec& norm,
                             const TranslateConfig& config) {
    const auto design = build_design(params, norm, config);
    Translation t;
    t.linear = fit_linear(design);
    t.report = fit_report(t.linear, design);
    return t;
}

}  // namespace abrlab::translate
