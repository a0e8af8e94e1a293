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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "abrlab/gp.hpp"

using namespace abrlab::shaping;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

std::vector<GpObservation> sine_data(std::size_t n, double noise) {
    std::vector<GpObservation> data;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1);
        data.push_back({vec({x}), std::sin(2.0 * std::numbers::pi * x), noise});
    }
    return data;
}

}  // namespace

TEST_CASE("matern 5/2 kernel") {
    const double l = 0.7, d = 0.3;
    const double r = std::sqrt(5.0) * d / l;
    const double expected = (1.0 + r + r * r / 3.0) * std::exp(-r);
    CHECK(matern52(vec({0.1, 0.2}), vec({0.4, 0.2}), {l, 1.0}) == doctest::Approx(expected));
    CHECK(matern52(vec({0.5}), vec({0.5}), {0.3}) == doctest::Approx(1.0));
    // ARD: a long length scale makes a dimension irrelevant.
    CHECK(matern52(vec({0.0, 0.0}), vec({0.0, 1.0}), {1.0, 1e6}) == doctest::Approx(1.0));
}

TEST_CASE("noise-free posterior interpolates the data") {
    const auto data = sine_data(8, 0.0);
    const GpModel gp(data, {1.0, {0.2}, 1e-8});
    for (const auto& o : data) {
        const auto p = gp.predict(o.x);
        CHECK(p.mean == doctest::Approx(o.mean).epsilon(1e-4).scale(1.0));
        CHECK(p.variance < 1e-5);
    }
}

TEST_CASE("fitted GP recovers a sine within 0.05") {
    const auto gp = GpModel::fit(sine_data(12, 0.0));
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        worst = std::max(worst, std::abs(gp.predict(vec({x})).mean - std::sin(2.0 * std::numbers::pi * x)));
    }
    CHECK(worst < 0.05);
    CHECK(std::isfinite(gp.log_marginal_likelihood()));
}

TEST_CASE("posterior variance grows away from the data") {
    const auto gp = GpModel::fit(sine_data(6, 0.05));
    const double at = gp.predict(vec({0.4})).variance;
    const double between = gp.predict(vec({0.5})).variance;
    const double far = gp.predict(vec({3.0})).variance;
    CHECK(at < between);
    CHECK(between < far);
    CHECK(far == doctest::Approx(gp.prior_covariance(vec({3.0}), vec({3.0}))).epsilon(1e-3));
}

TEST_CASE("noisy observations are not interpolated") {
    std::vector<GpObservation> data{{vec({0.5}), 1.0, 1.0}, {vec({0.5001}), -1.0, 1.0}};
    const GpModel gp(data, {1.0, {0.3}, 1e-8});
    CHECK(std::abs(gp.predict(vec({0.5})).mean) < 0.3);
}

TEST_CASE("noiseless conditioning agrees with the posterior") {
    const auto gp = GpModel::fit(sine_data(7, 0.1));
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov;
    gp.latent_posterior(mu, cov);
    for (double x : {0.13, 0.5, 0.91, 1.4}) {
        const auto c = gp.noiseless_conditional(vec({x}));
        const Eigen::VectorXd centered = mu.array() - gp.prior_mean();
        const double mean = gp.prior_mean() + c.weights.dot(centered);
        const double var = c.variance + c.weights.dot(cov * c.weights);
        const auto p = gp.predict(vec({x}));
        CHECK(mean == doctest::Approx(p.mean).epsilon(1e-6));
        CHECK(var == doctest::Approx(p.variance).epsilon(1e-4).scale(1e-6));
    }
}

TEST_CASE("adding an observation keeps hyperparameters") {
    const auto gp = GpModel::fit(sine_data(5, 0.0));
    const auto more = gp.with_observation(vec({0.3}), 2.0, 0.0);
    CHECK(more.size() == 6);
    CHECK(more.hyperparameters().length_scales == gp.hyperparameters().length_scales);
    CHECK(more.predict(vec({0.3})).mean == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("nelder-mead minimizes a quadratic") {
    auto f = [](const Eigen::VectorXd& x) { return std::pow(x(0) - 1.0, 2) + 10.0 * std::pow(x(1) + 2.0, 2); };
    const auto [best, value] = nelder_mead(f, vec({0.0, 0.0}), 0.5, 2000);
    CHECK(best(0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(best(1) == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK(value < 1e-6);
}

TEST_CASE("fit needs two points") {
    CHECK_THROWS(GpModel::fit({{vec({0.1}), 1.0, 0.0}}));
}
