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

#include "abrlab/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "abrlab/common.hpp"

namespace abrlab::shaping {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

template <typename Matrix>
bool try_cholesky(const Eigen::MatrixXd& base, Eigen::LLT<Matrix>& llt) {
    const double scale = std::max(1.0, base.diagonal().cwiseAbs().maxCoeff());
    for (double jitter : {0.0, 1e-12, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4}) {
        Eigen::MatrixXd m = base;
        m.diagonal().array() += jitter * scale;
        llt.compute(m);
        if (llt.info() == Eigen::Success) return true;
    }
    return false;
}

}  // namespace

std::pair<Eigen::VectorXd, double> nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                               Eigen::VectorXd start, double step, std::size_t max_evals) {
    const auto n = static_cast<std::size_t>(start.size());
    std::vector<Eigen::VectorXd> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][static_cast<Eigen::Index>(i)] += step;
    std::size_t evals = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        values[i] = f(simplex[i]);
        ++evals;
    }
    std::vector<std::size_t> order(n + 1);
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        if (std::abs(values[worst] - values[best]) < 1e-9 * (1.0 + std::abs(values[best]))) break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k) centroid += simplex[order[k]];
        centroid /= static_cast<double>(n);

        Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double fr = f(reflected);
        ++evals;
        if (fr < values[best]) {
            Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = f(expanded);
            ++evals;
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        Eigen::VectorXd contracted = centroid + 0.5 * (simplex[worst] - centroid);
        const double fc = f(contracted);
        ++evals;
        if (fc < values[worst]) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (std::size_t k = 1; k <= n; ++k) {
            const std::size_t idx = order[k];
            simplex[idx] = simplex[best] + 0.5 * (simplex[idx] - simplex[best]);
            values[idx] = f(simplex[idx]);
            ++evals;
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    return {simplex[static_cast<std::size_t>(it - values.begin())], *it};
}

double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<double>& length_scales) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
        const double z = (a[d] - b[d]) / length_scales[static_cast<std::size_t>(d)];
        r2 += z * z;
    }
    const double r = std::sqrt(5.0 * r2);
    return (1.0 + r + r * r / 3.0) * std::exp(-r);
}

GpModel::GpModel(std::vector<GpObservation> data, GpHyperparameters hyper)
    : data_(std::move(data)), hyper_(std::move(hyper)) {
    if (data_.empty()) throw std::invalid_argument("GpModel: no observations");
    dims_ = static_cast<std::size_t>(data_.front().x.size());
    for (const auto& o : data_) {
        if (static_cast<std::size_t>(o.x.size()) != dims_) throw std::invalid_argument("GpModel: inconsistent input dims");
        if (!std::isfinite(o.mean) || !(o.std_error >= 0.0)) throw std::invalid_argument("GpModel: invalid observation");
    }
    if (hyper_.length_scales.size() != dims_) throw std::invalid_argument("GpModel: one length scale per dimension");
    double sum = 0.0;
    for (const auto& o : data_) sum += o.mean;
    y_mean_ = sum / static_cast<double>(data_.size());
    double ss = 0.0;
    for (const auto& o : data_) ss += (o.mean - y_mean_) * (o.mean - y_mean_);
    const double sd = data_.size() > 1 ? std::sqrt(ss / static_cast<double>(data_.size() - 1)) : 0.0;
    y_scale_ = sd > 1e-12 ? sd : 1.0;
    factorize();
}

void GpModel::factorize() {
    const auto n = static_cast<Eigen::Index>(data_.size());
    prior_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            prior_(i, j) = prior_(j, i) =
                hyper_.signal_variance * matern52(data_[i].x, data_[j].x, hyper_.length_scales);

    Eigen::MatrixXd noisy = prior_;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double se = data_[i].std_error / y_scale_;
        noisy(i, i) += se * se + hyper_.noise_floor;
        y[i] = (data_[i].mean - y_mean_) / y_scale_;
    }
    if (!try_cholesky(noisy, noisy_)) throw std::runtime_error("GpModel: covariance singular after jitter escalation");
    if (!try_cholesky(prior_, noiseless_))
        throw std::runtime_error("GpModel: noiseless covariance singular after jitter escalation");
    alpha_ = noisy_.solve(y);
    const Eigen::MatrixXd L = noisy_.matrixL();
    lml_ = -0.5 * y.dot(alpha_) - L.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;
}

GpModel GpModel::fit(std::vector<GpObservation> data, const GpFitOptions& options) {
    if (data.size() < 2) throw std::invalid_argument("fit_gp: need at least 2 points");
    const std::size_t d = static_cast<std::size_t>(data.front().x.size());
    const double lo_l = std::log(options.min_length_scale), hi_l = std::log(options.max_length_scale);
    const double lo_s = std::log(options.min_signal_variance), hi_s = std::log(options.max_signal_variance);

    auto unpack = [&](const Eigen::VectorXd& v) {
        GpHyperparameters h;
        h.signal_variance = std::exp(v[0]);
        h.length_scales.resize(d);
        for (std::size_t k = 0; k < d; ++k) h.length_scales[k] = std::exp(v[static_cast<Eigen::Index>(k + 1)]);
        return h;
    };
    auto objective = [&](const Eigen::VectorXd& v) {
        if (v[0] < lo_s || v[0] > hi_s) return std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 1; k < v.size(); ++k)
            if (v[k] < lo_l || v[k] > hi_l) return std::numeric_limits<double>::infinity();
        try {
            return -GpModel(data, unpack(v)).log_marginal_likelihood();
        } catch (const std::runtime_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Rng rng(derive_seed(options.seed, {data.size()}));
    std::uniform_real_distribution<double> ul(std::log(0.05), std::log(2.0));
    std::uniform_real_distribution<double> us(std::log(0.3), std::log(3.0));
    Eigen::VectorXd best_v;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
        Eigen::VectorXd start(static_cast<Eigen::Index>(d + 1));
        if (r == 0) {
            start[0] = 0.0;
            start.tail(static_cast<Eigen::Index>(d)).setConstant(std::log(0.3));
        } else {
            start[0] = us(rng);
            for (std::size_t k = 0; k < d; ++k) start[static_cast<Eigen::Index>(k + 1)] = ul(rng);
        }
        auto [v, value] = nelder_mead(objective, start, 0.5, options.max_evaluations);
        if (value < best) {
            best = value;
            best_v = v;
        }
    }
    if (!std::isfinite(best)) throw std::runtime_error("fit_gp: marginal likelihood could not be evaluated");
    return GpModel(std::move(data), unpack(best_v));
}

double GpModel::prior_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return y_scale_ * y_scale_ * hyper_.signal_variance * matern52(a, b, hyper_.length_scales);
}

GpModel::Prediction GpModel::predict(const Eigen::VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(data_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = hyper_.signal_variance * matern52(x, data_[i].x, hyper_.length_scales);
    const Eigen::VectorXd v = noisy_.matrixL().solve(k);
    Prediction p;
    p.mean = y_mean_ + y_scale_ * k.dot(alpha_);
    p.variance = std::max(0.0, y_scale_ * y_scale_ * (hyper_.signal_variance - v.squaredNorm()));
    return p;
}

void GpModel::latent_posterior(Eigen::VectorXd& mean, Eigen::MatrixXd& covariance) const {
    mean = (prior_ * alpha_).array() * y_scale_ + y_mean_;
    const Eigen::MatrixXd v = noisy_.matrixL().solve(prior_);
    covariance = (prior_ - v.transpose() * v) * (y_scale_ * y_scale_);
    covariance = 0.5 * (covariance + covariance.transpose());
}

GpModel::NoiselessConditional GpModel::noiseless_conditional(const Eigen::VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(data_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = hyper_.signal_variance * matern52(x, data_[i].x, hyper_.length_scales);
    NoiselessConditional c;
    c.weights = noiseless_.solve(k);
    c.variance = std::max(0.0, y_scale_ * y_scale_ * (hyper_.signal_variance - k.dot(c.weights)));
    return c;
}

GpModel GpModel::with_observation(const Eigen::VectorXd& x, double mean, double std_error) const {
    GpModel next = *this;
    next.data_.push_back(GpObservation{x, mean, std_error});
    next.factorize();
    return next;
}

}  // namespace abrlab::shaping
