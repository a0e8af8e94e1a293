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

#ifndef ABRLAB_GP_HPP
#define ABRLAB_GP_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace abrlab::shaping {

/// Kernel hyperparameters, expressed on standardized targets: the model
/// centres targets on their mean and divides by their standard deviation
/// before fitting.
struct GpHyperparameters {
    double signal_variance = 1.0;
    std::vector<double> length_scales;  ///< one per input dimension (ARD)
    double noise_floor = 1e-8;          ///< added to every point's std_error^2
};

/// A noisy observation: inputs on the unit cube, target mean and standard error.
struct GpObservation {
    Eigen::VectorXd x;
    double mean = 0.0;
    double std_error = 0.0;
};

struct GpFitOptions {
    std::size_t restarts = 4;
    std::size_t max_evaluations = 400;
    double min_length_scale = 0.01;
    double max_length_scale = 10.0;
    double min_signal_variance = 1e-3;
    double max_signal_variance = 1e2;
    std::uint64_t seed = 17;
};

/// Minimizes f with the Nelder-Mead simplex from `start` (initial edge
/// `step`); returns the best vertex and its value.
std::pair<Eigen::VectorXd, double> nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                               Eigen::VectorXd start, double step, std::size_t max_evaluations);

/// Matern-5/2 ARD kernel between two unit-cube points (unit signal variance).
double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<double>& length_scales);

/// Zero-mean (after standardization) Gaussian process with per-point
/// observation noise fixed to std_error^2.
class GpModel {
public:
    struct Prediction {
        double mean = 0.0;
        double variance = 0.0;
    };

    /// Builds the posterior for fixed hyperparameters. Throws
    /// std::runtime_error if the covariance stays singular after jitter
    /// escalation.
    GpModel(std::vector<GpObservation> data, GpHyperparameters hyper);

    /// Chooses hyperparameters by maximizing the log marginal likelihood
    /// (multi-start Nelder-Mead in log space). Needs >= 2 points.
    static GpModel fit(std::vector<GpObservation> data, const GpFitOptions& options = {});

    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dims() const noexcept { return dims_; }
    const std::vector<GpObservation>& data() const noexcept { return data_; }
    const GpHyperparameters& hyperparameters() const noexcept { return hyper_; }
    double log_marginal_likelihood() const noexcept { return lml_; }

    /// Posterior of the latent function (observation noise excluded).
    Prediction predict(const Eigen::VectorXd& x) const;

    /// Joint latent posterior at the observed inputs.
    void latent_posterior(Eigen::VectorXd& mean, Eigen::MatrixXd& covariance) const;

    /// Prior mean and covariance in target units.
    double prior_mean() const noexcept { return y_mean_; }
    double prior_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    /// Conditioning weights for treating the observed latent values as
    /// exact: given latent values f at the observed inputs, the conditional
    /// mean at x is prior_mean + w^T (f - prior_mean) and the conditional
    /// variance is the returned variance.
    struct NoiselessConditional {
        Eigen::VectorXd weights;
        double variance = 0.0;
    };
    NoiselessConditional noiseless_conditional(const Eigen::VectorXd& x) const;

    /// Copy with one more observation and unchanged hyperparameters.
    GpModel with_observation(const Eigen::VectorXd& x, double mean, double std_error) const;

private:
    void factorize();

    std::vector<GpObservation> data_;
    GpHyperparameters hyper_;
    std::size_t dims_ = 0;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Eigen::MatrixXd prior_;       // standardized prior covariance at the inputs
    Eigen::LLT<Eigen::MatrixXd> noisy_;
    Eigen::LLT<Eigen::MatrixXd> noiseless_;
    Eigen::VectorXd alpha_;       // (K + N)^{-1} (y - mean) / scale
    double lml_ = 0.0;
};

}  // namespace abrlab::shaping

#endif  // ABRLAB_GP_HPP
