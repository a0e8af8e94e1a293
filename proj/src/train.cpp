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

#include "abrlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace abrlab::train {

void RewardWeights::validate() const {
    for (double v : {w_b, w_d, w_c, v_b, v_d})
        if (!std::isfinite(v)) throw std::invalid_argument("reward weights must be finite");
    if (!(v_b > 0.0)) throw std::invalid_argument("v_b must be positive");
    if (!(v_d > 0.0)) throw std::invalid_argument("v_d must be positive");
    if (w_b < 0.0) throw std::invalid_argument("w_b must be non-negative");
    if (w_d < 0.0) throw std::invalid_argument("w_d must be non-negative");
    if (w_c > 0.0) throw std::invalid_argument("w_c must be non-positive");
}

double compute_reward(const sim::StepOutcome& outcome, const RewardWeights& w, double bitrate_unit) {
    const double b = outcome.bitrate / bitrate_unit;
    const double d = outcome.stall_time;
    double r = w.w_b * std::pow(b, w.v_b);
    if (d > 0.0) r += -w.w_d * std::pow(d, w.v_d) + w.w_c;
    return r;
}

std::vector<double> step_rewards(const sim::Trajectory& trajectory, const RewardWeights& w) {
    std::vector<double> r;
    r.reserve(trajectory.size());
    for (const auto& s : trajectory.steps) r.push_back(compute_reward(s.outcome, w));
    return r;
}

double total_reward(const sim::Trajectory& trajectory, const RewardWeights& w) {
    double sum = 0.0;
    for (const auto& s : trajectory.steps) sum += compute_reward(s.outcome, w);
    return sum;
}

std::vector<double> returns(std::span<const double> rewards) {
    std::vector<double> out(rewards.size());
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc += rewards[t];
        out[t] = acc;
    }
    return out;
}

std::vector<double> input_dependent_baseline(std::span<const std::vector<double>> rollout_returns) {
    if (rollout_returns.size() < 2) throw std::invalid_argument("input-dependent baseline needs K >= 2 rollouts");
    const std::size_t n = rollout_returns.front().size();
    std::vector<double> b(n, 0.0);
    for (const auto& r : rollout_returns) {
        if (r.size() != n) throw std::invalid_argument("rollouts of one trace must have equal length");
        for (std::size_t t = 0; t < n; ++t) b[t] += r[t];
    }
    const double k = static_cast<double>(rollout_returns.size());
    for (double& v : b) v /= k;
    return b;
}

std::vector<double> time_based_baseline(std::span<const std::vector<double>> rollout_returns) {
    std::size_t n = 0;
    for (const auto& r : rollout_returns) n = std::max(n, r.size());
    std::vector<double> sum(n, 0.0);
    std::vector<double> count(n, 0.0);
    for (const auto& r : rollout_returns) {
        for (std::size_t t = 0; t < r.size(); ++t) {
            sum[t] += r[t];
            count[t] += 1.0;
        }
    }
    for (std::size_t t = 0; t < n; ++t) sum[t] /= count[t];
    return sum;
}

BaselineMode parse_baseline_mode(const std::string& name) {
    if (name == "input-dependent" || name == "input_dependent") return BaselineMode::input_dependent;
    if (name == "time-based" || name == "time_based") return BaselineMode::time_based;
    throw std::invalid_argument("unknown baseline mode '" + name + "' (expected input-dependent or time-based)");
}

std::string to_string(BaselineMode mode) {
    return mode == BaselineMode::input_dependent ? "input-dependent" : "time-based";
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning_rate must be positive");
    if (rollouts_per_trace < 1) throw std::invalid_argument("rollouts_per_trace must be >= 1");
    if (baseline == BaselineMode::input_dependent && rollouts_per_trace < 2)
        throw std::invalid_argument("rollouts_per_trace must be >= 2 with the input-dependent baseline");
    if (traces_per_iteration < 1) throw std::invalid_argument("traces_per_iteration must be >= 1");
    if (!(entropy_weight >= 0.0)) throw std::invalid_argument("entropy_weight must be non-negative");
    if (!(entropy_decay > 0.0 && entropy_decay <= 1.0)) throw std::invalid_argument("entropy_decay must lie in (0, 1]");
    if (entropy_decay_every < 1) throw std::invalid_argument("entropy_decay_every must be >= 1");
    if (!(grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be positive");
    if (!(capacity > 0.0)) throw std::invalid_argument("capacity must be positive");
    if (curve_traces < 1) throw std::invalid_argument("curve_traces must be >= 1");
    policy::PolicyParams probe;
    probe.layers = layers;
    probe.theta.assign(policy::parameter_count(layers), 0.0);
    policy::validate(probe);
}

double TrainConfig::entropy_weight_at(std::size_t iteration) const {
    const auto steps = static_cast<double>(iteration / entropy_decay_every);
    return entropy_weight * std::pow(entropy_decay, steps);
}

void write_curve(std::ostream& out, const LearningCurve& curve) {
    out << "iter\tmean_reward\treward_std\tentropy\n";
    for (const auto& p : curve.points)
        out << p.iteration << '\t' << format_double(p.mean_reward) << '\t' << format_double(p.reward_std) << '\t'
            << format_double(p.entropy) << '\n';
}

void write_curve(const std::filesystem::path& path, const LearningCurve& curve) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write learning curve '" + path.string() + "'");
    write_curve(out, curve);
}

std::vector<std::vector<std::vector<double>>> compute_advantages(
    const std::vector<std::vector<sim::Trajectory>>& groups, const RewardWeights& w, BaselineMode mode) {
    std::vector<std::vector<std::vector<double>>> rets(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (const auto& traj : groups[g]) rets[g].push_back(returns(step_rewards(traj, w)));

    std::vector<double> shared;
    if (mode == BaselineMode::time_based) {
        std::vector<std::vector<double>> all;
        for (const auto& g : rets) all.insert(all.end(), g.begin(), g.end());
        shared = time_based_baseline(all);
    }
    for (auto& group : rets) {
        const std::vector<double> baseline =
            mode == BaselineMode::input_dependent ? input_dependent_baseline(group) : shared;
        for (auto& r : group)
            for (std::size_t t = 0; t < r.size(); ++t) r[t] -= baseline[t];
    }
    return rets;
}

std::vector<double> batch_gradient(const policy::PolicyParams& params, const policy::NormalizationSpec& norm,
                                   const GradientBatch& batch, double entropy_weight, std::size_t workers) {
    const std::size_t n = batch.trajectories.size();
    if (batch.advantages.size() != n) throw std::invalid_argument("batch: one advantage list per trajectory");
    const std::size_t p = params.theta.size();
    std::vector<std::vector<double>> partial(n);
    parallel_for(n, workers, [&](std::size_t j) {
        const auto& traj = batch.trajectories[j];
        const auto& adv = batch.advantages[j];
        if (adv.size() != traj.size()) throw std::invalid_argument("batch: advantage length mismatch");
        partial[j].assign(p, 0.0);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            const auto& s = traj.steps[t];
            policy::accumulate_step_gradient(params, norm, s.observation, s.action, adv[t], entropy_weight,
                                             partial[j]);
        }
    });
    std::vector<double> grad(p, 0.0);
    for (const auto& g : partial)
        for (std::size_t k = 0; k < p; ++k) grad[k] += g[k];
    if (n > 0)
        for (double& v : grad) v /= static_cast<double>(n);
    return grad;
}

policy::PolicyParams policy_gradient_update(const policy::PolicyParams& params,
                                            const policy::NormalizationSpec& norm, const GradientBatch& batch,
                                            const TrainConfig& config, double entropy_weight) {
    auto grad = batch_gradient(params, norm, batch, entropy_weight, config.workers);
    double sq = 0.0;
    for (double v : grad) sq += v * v;
    const double gnorm = std::sqrt(sq);
    if (!std::isfinite(gnorm)) {
        std::ostringstream msg;
        msg << "non-finite policy gradient (norm " << gnorm << ", " << batch.trajectories.size()
            << " trajectories, entropy weight " << entropy_weight << ")";
        throw std::runtime_error(msg.str());
    }
    const double scale = gnorm > config.grad_clip ? config.grad_clip / gnorm : 1.0;
    policy::PolicyParams next = params;
    for (std::size_t k = 0; k < grad.size(); ++k) next.theta[k] += config.learning_rate * scale * grad[k];
    return next;
}

policy::NormalizationSpec default_normalization(const trace::TraceSet& traces, double capacity) {
    policy::NormalizationSpec norm;
    norm.buffer = capacity;
    double largest = 0.0;
    for (const auto& t : traces.traces()) largest = std::max(largest, t.ladder().back() * t.chunk_duration());
    if (largest > 0.0) norm.size = largest;
    norm.validate();
    return norm;
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
}

std::vector<double> session_rewards(const sim::DecisionFn& decision, const trace::TraceSet& traces,
                                    const RewardWeights& w, double capacity, std::uint64_t seed,
                                    std::size_t workers) {
    std::vector<double> out(traces.size());
    parallel_for(traces.size(), workers, [&](std::size_t i) {
        Rng rng(derive_seed(seed, {0xe7a1ull, i}));
        out[i] = total_reward(sim::run_session(decision, traces[i], capacity, rng), w);
    });
    return out;
}

namespace {

struct CurveSample {
    double total = 0.0;
    double entropy_sum = 0.0;
    std::size_t steps = 0;
};

CurveSample curve_rollout(const policy::PolicyParams& params, const policy::NormalizationSpec& norm,
                          const trace::Trace& trace, const RewardWeights& w, double capacity, Rng& rng) {
    CurveSample sample;
    sim::DecisionFn decide = [&](const sim::Observation& obs, Rng& r) {
        const auto p = policy::action_distribution(policy::priorities(params, norm, obs));
        sample.entropy_sum += policy::entropy(p);
        ++sample.steps;
        return policy::sample_action(p, r);
    };
    sample.total = total_reward(sim::run_session(decide, trace, capacity, rng), w);
    return sample;
}

}  // namespace

TrainResult train(const trace::TraceSet& traces, const RewardWeights& w, const TrainConfig& config) {
    const auto train_split = traces.train();
    const auto norm = default_normalization(train_split.empty() ? traces : train_split, config.capacity);
    return train(traces, w, config, policy::init_params(config.layers, config.seed), norm);
}

TrainResult train(const trace::TraceSet& traces, const RewardWeights& w, const TrainConfig& config,
                  policy::PolicyParams initial, policy::NormalizationSpec norm) {
    config.validate();
    w.validate();
    norm.validate();
    policy::validate(initial);
    const auto train_idx = traces.train_indices();
    if (train_idx.empty()) throw std::invalid_argument("train: the train split is empty");
    auto curve_idx = traces.holdout_indices();
    if (curve_idx.empty()) curve_idx = train_idx;
    if (curve_idx.size() > config.curve_traces) curve_idx.resize(config.curve_traces);

    TrainResult result{std::move(initial), norm, {}};
    const std::size_t k = config.rollouts_per_trace;
    const std::size_t per_iter = config.traces_per_iteration;

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        Rng picker(derive_seed(config.seed, {0x9d1ull, iter}));
        std::uniform_int_distribution<std::size_t> pick(0, train_idx.size() - 1);
        std::vector<std::size_t> chosen(per_iter);
        for (auto& c : chosen) c = train_idx[pick(picker)];

        const auto decide = policy::stochastic_decision(result.params, norm);
        std::vector<std::vector<sim::Trajectory>> groups(per_iter, std::vector<sim::Trajectory>(k));
        parallel_for(per_iter * k, config.workers, [&](std::size_t job) {
            const std::size_t g = job / k;
            const std::size_t r = job % k;
            Rng rng(derive_seed(config.seed, {0x2011ull, iter, g, r}));
            groups[g][r] = sim::run_session(decide, traces[chosen[g]], config.capacity, rng);
        });

        auto adv = compute_advantages(groups, w, config.baseline);
        GradientBatch batch;
        batch.trajectories.reserve(per_iter * k);
        for (std::size_t g = 0; g < per_iter; ++g) {
            for (std::size_t r = 0; r < k; ++r) {
                batch.trajectories.push_back(std::move(groups[g][r]));
                batch.advantages.push_back(std::move(adv[g][r]));
            }
        }
        result.params =
            policy_gradient_update(result.params, norm, batch, config, config.entropy_weight_at(iter));

        std::vector<CurveSample> samples(curve_idx.size());
        parallel_for(curve_idx.size(), config.workers, [&](std::size_t i) {
            Rng rng(derive_seed(config.seed, {0xc0e7ull, curve_idx[i]}));
            samples[i] = curve_rollout(result.params, norm, traces[curve_idx[i]], w, config.capacity, rng);
        });
        std::vector<double> totals;
        double ent = 0.0;
        std::size_t steps = 0;
        for (const auto& s : samples) {
            totals.push_back(s.total);
            ent += s.entropy_sum;
            steps += s.steps;
        }
        result.curve.points.push_back(
            CurvePoint{iter, mean(totals), stddev(totals), steps > 0 ? ent / static_cast<double>(steps) : 0.0});
    }
    return result;
}

}  // namespace abrlab::train
