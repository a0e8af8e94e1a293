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

#include "abrlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

namespace abrlab::policy {

namespace {

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weights = 0;  // offset of W in theta
    std::size_t bias = 0;     // offset of b in theta
};

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using Weights = Eigen::Map<RowMajor>;

std::vector<Layer> layout(std::span<const std::size_t> sizes) {
    std::vector<Layer> layers;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.in = sizes[l];
        layer.out = sizes[l + 1];
        layer.weights = offset;
        layer.bias = offset + layer.in * layer.out;
        offset = layer.bias + layer.out;
        layers.push_back(layer);
    }
    return layers;
}

// Activations of all M copies, one column per encoding: acts[0] is the
// normalized input (3 x M), acts[l + 1] the output of layer l.
struct Activations {
    std::vector<Eigen::MatrixXd> acts;
};

// Runs every copy of the shared network at once and returns the M priorities.
Eigen::VectorXd forward_all(const PolicyParams& params, const std::vector<Layer>& layers,
                            const NormalizationSpec& norm, const sim::Observation& obs, Activations& a) {
    const auto m = static_cast<Eigen::Index>(obs.sizes.size());
    a.acts.resize(layers.size() + 1);
    Eigen::MatrixXd& input = a.acts[0];
    input.resize(3, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        input(0, i) = obs.prediction / norm.bandwidth;
        input(1, i) = obs.buffer / norm.buffer;
        input(2, i) = obs.sizes[static_cast<std::size_t>(i)] / norm.size;
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& L = layers[l];
        const ConstWeights w(params.theta.data() + L.weights, static_cast<Eigen::Index>(L.out),
                             static_cast<Eigen::Index>(L.in));
        const Eigen::Map<const Eigen::VectorXd> b(params.theta.data() + L.bias, static_cast<Eigen::Index>(L.out));
        Eigen::MatrixXd& y = a.acts[l + 1];
        y.noalias() = w * a.acts[l];
        y.colwise() += b;
        if (l + 1 < layers.size()) y = y.cwiseMax(0.0);
    }
    return a.acts.back().row(0).transpose();
}

// grad += sum_i upstream[i] * d q_i / d theta, from cached activations.
void backward_all(const PolicyParams& params, const std::vector<Layer>& layers, const Activations& a,
                  std::span<const double> upstream, std::span<double> grad) {
    const auto m = static_cast<Eigen::Index>(upstream.size());
    Eigen::MatrixXd delta = Eigen::Map<const Eigen::RowVectorXd>(upstream.data(), m);
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Layer& L = layers[l];
        const auto in = static_cast<Eigen::Index>(L.in);
        const auto out = static_cast<Eigen::Index>(L.out);
        const Eigen::MatrixXd& x = a.acts[l];
        Weights gw(grad.data() + L.weights, out, in);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + L.bias, out);
        gw.noalias() += delta * x.transpose();
        gb += delta.rowwise().sum();
        if (l == 0) break;
        const ConstWeights w(params.theta.data() + L.weights, out, in);
        Eigen::MatrixXd next = w.transpose() * delta;
        delta = (x.array() > 0.0).select(next, 0.0);
    }
}

void require_observation(const sim::Observation& obs) {
    if (obs.sizes.empty()) throw std::invalid_argument("observation has no encodings");
    if (!std::isfinite(obs.prediction) || !std::isfinite(obs.buffer))
        throw std::invalid_argument("observation fields must be finite");
}

}  // namespace

std::size_t parameter_count(std::span<const std::size_t> layers) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l] * layers[l + 1] + layers[l + 1];
    return n;
}

void validate(const PolicyParams& params) {
    if (params.layers.size() < 2) throw std::invalid_argument("policy needs at least an input and output layer");
    if (params.layers.front() != 3) throw std::invalid_argument("policy input width must be 3");
    if (params.layers.back() != 1) throw std::invalid_argument("policy output width must be 1");
    for (std::size_t s : params.layers)
        if (s == 0) throw std::invalid_argument("policy layer widths must be positive");
    if (params.theta.size() != parameter_count(params.layers))
        throw std::invalid_argument("theta has " + std::to_string(params.theta.size()) + " entries, layout needs " +
                                    std::to_string(parameter_count(params.layers)));
    for (double v : params.theta)
        if (!std::isfinite(v)) throw std::invalid_argument("theta contains a non-finite value");
}

PolicyParams init_params(std::vector<std::size_t> layers, std::uint64_t seed) {
    PolicyParams params;
    params.layers = std::move(layers);
    params.theta.assign(parameter_count(params.layers), 0.0);
    Rng rng(derive_seed(seed, {0x1417ull}));
    for (const Layer& L : layout(params.layers)) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t k = 0; k < L.in * L.out; ++k) params.theta[L.weights + k] = dist(rng);
    }
    validate(params);
    return params;
}

void NormalizationSpec::validate() const {
    if (!(bandwidth > 0.0) || !(buffer > 0.0) || !(size > 0.0) || !std::isfinite(bandwidth) ||
        !std::isfinite(buffer) || !std::isfinite(size))
        throw std::invalid_argument("normalization scales must be positive");
}

std::vector<double> priorities(const PolicyParams& params, const NormalizationSpec& norm,
                               const sim::Observation& obs) {
    require_observation(obs);
    const auto layers = layout(params.layers);
    Activations a;
    const Eigen::VectorXd q = forward_all(params, layers, norm, obs, a);
    return std::vector<double>(q.data(), q.data() + q.size());
}

std::vector<double> action_distribution(std::span<const double> q) {
    std::vector<double> p(q.size());
    if (q.empty()) return p;
    const double top = *std::max_element(q.begin(), q.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        p[i] = std::exp(q[i] - top);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

std::size_t sample_action(std::span<const double> probs, Rng& rng) {
    double sum = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("sample_action: degenerate probabilities");
        sum += p;
    }
    if (probs.empty() || std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("sample_action: probabilities do not sum to 1");
    const double u = std::uniform_real_distribution<double>(0.0, sum)(rng);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cumulative += probs[i];
        last_positive = i;
        if (u < cumulative) return i;
    }
    return last_positive;
}

void backprop_priorities(const PolicyParams& params, const NormalizationSpec& norm, const sim::Observation& obs,
                         std::span<const double> upstream, std::span<double> grad) {
    require_observation(obs);
    if (upstream.size() != obs.sizes.size()) throw std::invalid_argument("upstream size mismatch");
    if (grad.size() != params.theta.size()) throw std::invalid_argument("gradient size mismatch");
    const auto layers = layout(params.layers);
    Activations a;
    forward_all(params, layers, norm, obs, a);
    backward_all(params, layers, a, upstream, grad);
}

double accumulate_step_gradient(const PolicyParams& params, const NormalizationSpec& norm,
                                const sim::Observation& obs, std::size_t action, double advantage,
                                double entropy_weight, std::span<double> grad) {
    require_observation(obs);
    if (action >= obs.sizes.size()) throw std::out_of_range("accumulate_step_gradient: action out of range");
    if (grad.size() != params.theta.size()) throw std::invalid_argument("gradient size mismatch");
    const auto layers = layout(params.layers);
    Activations a;
    const Eigen::VectorXd q = forward_all(params, layers, norm, obs, a);
    const auto p = action_distribution(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
    const double h = entropy(p);
    // d log p_a / d q_i = [i == a] - p_i ;  d H / d q_i = -p_i (log p_i + H)
    std::vector<double> upstream(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        upstream[i] = advantage * ((i == action ? 1.0 : 0.0) - p[i]);
        if (entropy_weight != 0.0 && p[i] > 0.0) upstream[i] -= entropy_weight * p[i] * (std::log(p[i]) + h);
    }
    backward_all(params, layers, a, upstream, grad);
    return h;
}

std::vector<double> grad_log_prob(const PolicyParams& params, const NormalizationSpec& norm,
                                  const sim::Observation& obs, std::size_t action) {
    require_observation(obs);
    if (action >= obs.sizes.size()) throw std::out_of_range("grad_log_prob: action out of range");
    const auto p = action_distribution(priorities(params, norm, obs));
    // d log p_a / d q_i = [i == a] - p_i
    std::vector<double> upstream(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) upstream[i] = (i == action ? 1.0 : 0.0) - p[i];
    std::vector<double> grad(params.theta.size(), 0.0);
    backprop_priorities(params, norm, obs, upstream, grad);
    return grad;
}

sim::DecisionFn stochastic_decision(PolicyParams params, NormalizationSpec norm) {
    return [params = std::move(params), norm](const sim::Observation& obs, Rng& rng) {
        const auto p = action_distribution(priorities(params, norm, obs));
        return sample_action(p, rng);
    };
}

sim::DecisionFn greedy_decision(PolicyParams params, NormalizationSpec norm) {
    return [params = std::move(params), norm](const sim::Observation& obs, Rng&) {
        const auto q = priorities(params, norm, obs);
        return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
    };
}

void HeuristicPolicySpec::validate() const {
    if (!(rate_safety > 0.0 && rate_safety <= 1.0)) throw std::invalid_argument("rate_safety must lie in (0, 1]");
    for (std::size_t i = 1; i < buffer_thresholds.size(); ++i)
        if (buffer_thresholds[i] < buffer_thresholds[i - 1])
            throw std::invalid_argument("buffer thresholds must be non-decreasing");
    if (!(reservoir >= 0.0) || !(cushion >= reservoir))
        throw std::invalid_argument("buffer reservoir/cushion must satisfy 0 <= reservoir <= cushion");
    if (!(chunk_duration > 0.0)) throw std::invalid_argument("chunk_duration must be positive");
}

std::vector<double> default_buffer_thresholds(std::size_t encodings, double reservoir, double cushion) {
    std::vector<double> t(encodings, 0.0);
    if (encodings < 2) return t;
    if (encodings == 2) {
        t[1] = reservoir;
        return t;
    }
    const double step = (cushion - reservoir) / static_cast<double>(encodings - 2);
    for (std::size_t i = 1; i < encodings; ++i) t[i] = reservoir + step * static_cast<double>(i - 1);
    return t;
}

std::size_t heuristic_decide(const HeuristicPolicySpec& spec, const sim::Observation& obs) {
    require_observation(obs);
    const std::size_t m = obs.sizes.size();
    if (spec.kind == HeuristicKind::rate_based) {
        const double budget = spec.rate_safety * obs.prediction;
        std::size_t choice = 0;
        for (std::size_t i = 0; i < m; ++i)
            if (obs.sizes[i] / spec.chunk_duration <= budget) choice = i;
        return choice;
    }
    const auto thresholds = spec.buffer_thresholds.empty()
                                ? default_buffer_thresholds(m, spec.reservoir, spec.cushion)
                                : spec.buffer_thresholds;
    std::size_t choice = 0;
    for (std::size_t i = 0; i < std::min(m, thresholds.size()); ++i)
        if (thresholds[i] <= obs.buffer) choice = i;
    return choice;
}

sim::DecisionFn heuristic_decision(HeuristicPolicySpec spec) {
    spec.validate();
    return [spec = std::move(spec)](const sim::Observation& obs, Rng&) { return heuristic_decide(spec, obs); };
}

std::size_t max_size_below(std::span<const double> sizes, double intended) {
    std::size_t choice = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i)
        if (sizes[i] <= intended) choice = i;
    return choice;
}

std::size_t linear_decide(const LinearPolicyParams& params, const sim::Observation& obs) {
    require_observation(obs);
    return max_size_below(obs.sizes, params.intended(obs.prediction, obs.buffer));
}

sim::DecisionFn linear_decision(LinearPolicyParams params) {
    return [params](const sim::Observation& obs, Rng&) { return linear_decide(params, obs); };
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
}

std::vector<std::string> expect_line(std::istream& in, const char* what) {
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = tokens_of(line);
        if (!tokens.empty()) return tokens;
    }
    throw std::runtime_error(std::string("checkpoint truncated: expected ") + what);
}

}  // namespace

void write_policy(std::ostream& out, const PolicyParams& params, const NormalizationSpec& norm) {
    validate(params);
    out << "#abrpolicy v1\n";
    out << "layers";
    for (std::size_t s : params.layers) out << ' ' << s;
    out << "\nactivation relu\n";
    out << "norm " << format_double(norm.bandwidth) << ' ' << format_double(norm.buffer) << ' '
        << format_double(norm.size) << '\n';
    out << "theta " << params.theta.size() << '\n';
    for (double v : params.theta) out << format_double(v) << '\n';
}

void write_policy(const std::filesystem::path& path, const PolicyParams& params, const NormalizationSpec& norm) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write policy checkpoint '" + path.string() + "'");
    write_policy(out, params, norm);
}

PolicyCheckpoint read_policy(std::istream& in) {
    PolicyCheckpoint ckpt;
    auto header = expect_line(in, "header");
    if (header.size() != 2 || header[0] != "#abrpolicy" || header[1] != "v1")
        throw std::runtime_error("not an '#abrpolicy v1' checkpoint");
    auto layers = expect_line(in, "layers");
    if (layers.front() != "layers") throw std::runtime_error("checkpoint: expected 'layers'");
    ckpt.params.layers.clear();
    for (std::size_t k = 1; k < layers.size(); ++k)
        ckpt.params.layers.push_back(static_cast<std::size_t>(parse_int(layers[k])));
    auto activation = expect_line(in, "activation");
    if (activation.size() != 2 || activation[0] != "activation" || activation[1] != "relu")
        throw std::runtime_error("checkpoint: only 'activation relu' is supported");
    auto norm = expect_line(in, "norm");
    if (norm.size() != 4 || norm[0] != "norm") throw std::runtime_error("checkpoint: expected 'norm <bw> <buf> <size>'");
    ckpt.norm = {parse_double(norm[1]), parse_double(norm[2]), parse_double(norm[3])};
    ckpt.norm.validate();
    auto theta = expect_line(in, "theta");
    if (theta.size() != 2 || theta[0] != "theta") throw std::runtime_error("checkpoint: expected 'theta <count>'");
    const auto count = static_cast<std::size_t>(parse_int(theta[1]));
    ckpt.params.theta.reserve(count);
    for (std::string tok; ckpt.params.theta.size() < count && in >> tok;)
        ckpt.params.theta.push_back(parse_double(tok));
    if (ckpt.params.theta.size() != count) throw std::runtime_error("checkpoint: theta truncated");
    validate(ckpt.params);
    return ckpt;
}

PolicyCheckpoint load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open policy checkpoint '" + path.string() + "'");
    return read_policy(in);
}

void write_linear(std::ostream& out, const LinearPolicyParams& p) {
    out << "#abrlinear v1\n" << format_double(p.a) << ' ' << format_double(p.b) << ' ' << format_double(p.c) << '\n';
}

void write_linear(const std::filesystem::path& path, const LinearPolicyParams& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write linear checkpoint '" + path.string() + "'");
    write_linear(out, params);
}

LinearPolicyParams read_linear(std::istream& in) {
    auto header = expect_line(in, "header");
    if (header.size() != 2 || header[0] != "#abrlinear" || header[1] != "v1")
        throw std::runtime_error("not an '#abrlinear v1' checkpoint");
    auto values = expect_line(in, "a b c");
    if (values.size() != 3) throw std::runtime_error("linear checkpoint: expected 'a b c'");
    LinearPolicyParams p{parse_double(values[0]), parse_double(values[1]), parse_double(values[2])};
    if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.c))
        throw std::runtime_error("linear checkpoint: coefficients must be finite");
    return p;
}

LinearPolicyParams load_linear(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open linear checkpoint '" + path.string() + "'");
    return read_linear(in);
}

}  // namespace abrlab::policy
