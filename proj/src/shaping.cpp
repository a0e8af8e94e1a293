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

#include "abrlab/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include "abrlab/common.hpp"
#include "abrlab/evalrep.hpp"
#include "abrlab/policy.hpp"

namespace abrlab::shaping {

double Dimension::to_unit(double v) const {
    if (scale == Scale::log) return (std::log(v) - std::log(lower)) / (std::log(upper) - std::log(lower));
    return (v - lower) / (upper - lower);
}

double Dimension::from_unit(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    double v;
    if (scale == Scale::log)
        v = std::exp(std::log(lower) + u * (std::log(upper) - std::log(lower)));
    else
        v = lower + u * (upper - lower);
    return std::clamp(v, lower, upper);
}

void SearchSpace::validate() const {
    static const char* names[] = {"w_b", "w_d", "w_c", "v_b", "v_d"};
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto& d = dims[i];
        if (!(d.lower < d.upper)) throw std::invalid_argument(std::string("search space: ") + names[i] + " needs lower < upper");
        if (d.scale == Scale::log && !(d.lower > 0.0))
            throw std::invalid_argument(std::string("search space: ") + names[i] + " log scale needs positive bounds");
    }
    // Every point of the box has to be a valid reward.
    train::RewardWeights lo = from_unit(Eigen::VectorXd::Zero(5)), hi = from_unit(Eigen::VectorXd::Ones(5));
    lo.validate();
    hi.validate();
}

Eigen::VectorXd SearchSpace::to_unit(const train::RewardWeights& w) const {
    Eigen::VectorXd u(5);
    const double v[] = {w.w_b, w.w_d, w.w_c, w.v_b, w.v_d};
    for (int i = 0; i < 5; ++i) u[i] = dims[static_cast<std::size_t>(i)].to_unit(v[i]);
    return u;
}

train::RewardWeights SearchSpace::from_unit(const Eigen::VectorXd& u) const {
    if (u.size() != 5) throw std::invalid_argument("search space: expected a 5-dimensional point");
    train::RewardWeights w;
    w.w_b = dims[0].from_unit(u[0]);
    w.w_d = dims[1].from_unit(u[1]);
    w.w_c = dims[2].from_unit(u[2]);
    w.v_b = dims[3].from_unit(u[3]);
    w.v_d = dims[4].from_unit(u[4]);
    return w;
}

void ShapingConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("shaping.batch_size must be >= 1");
    if (initial_points < 2) throw std::invalid_argument("shaping.initial_points must be >= 2");
    if (!(constraint_ratio > 0.0)) throw std::invalid_argument("shaping.constraint_ratio must be > 0");
    if (!(baseline_stall > 0.0)) throw std::invalid_argument("shaping.baseline_stall must be > 0");
    if (mc_samples == 0) throw std::invalid_argument("shaping.mc_samples must be >= 1");
    if (candidates == 0) throw std::invalid_argument("shaping.candidates must be >= 1");
    if (!(local_scale > 0.0)) throw std::invalid_argument("shaping.local_scale must be > 0");
    if (replicates < 2) throw std::invalid_argument("shaping.replicates must be >= 2");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double expected_improvement(double mean, double variance, double f_star) {
    const double sd = std::sqrt(std::max(0.0, variance));
    const double gap = mean - f_star;
    if (sd < 1e-12) return std::max(0.0, gap);
    const double z = gap / sd;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return std::max(0.0, gap * normal_cdf(z) + sd * pdf);
}

double expected_improvement(const GpModel& gp, const Eigen::VectorXd& x, double f_star) {
    const auto p = gp.predict(x);
    return expected_improvement(p.mean, p.variance, f_star);
}

namespace {

std::vector<double> sobol_uniform_rows(std::size_t count, std::size_t dims, std::uint64_t seed) {
    std::vector<double> out(count * dims);
    Rng rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> shift(dims);
    for (auto& s : shift) s = u01(rng);
    if (dims <= boost::random::default_sobol_table::max_dimension) {
        boost::random::sobol engine(static_cast<unsigned>(dims));
        for (std::size_t i = 0; i < count * dims; ++i) {
            const double v = std::ldexp(static_cast<double>(engine()), -64);
            out[i] = std::fmod(v + shift[i % dims], 1.0);
        }
    } else {
        for (auto& v : out) v = u01(rng);
    }
    return out;
}

}  // namespace

Eigen::MatrixXd sobol_normals(std::size_t count, std::size_t dims, std::uint64_t seed) {
    const auto u = sobol_uniform_rows(count, dims, seed);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dims));
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < dims; ++j) {
            const double p = std::clamp(u[i * dims + j], 1e-12, 1.0 - 1e-12);
            z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
        }
    return z;
}

std::vector<Eigen::VectorXd> sobol_points(std::size_t count, std::size_t dims, std::uint64_t seed) {
    const auto u = sobol_uniform_rows(count, dims, seed);
    std::vector<Eigen::VectorXd> out(count, Eigen::VectorXd(static_cast<Eigen::Index>(dims)));
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < dims; ++j) out[i][static_cast<Eigen::Index>(j)] = u[i * dims + j];
    return out;
}

namespace {

Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal();
}

}  // namespace

NeiSampler::NeiSampler(const GpModel& gp_q, const GpModel& gp_l, double threshold, std::size_t samples,
                       std::uint64_t seed)
    : gp_q_(&gp_q), gp_l_(&gp_l), threshold_(threshold) {
    if (samples == 0) throw std::invalid_argument("nei: no Monte Carlo samples configured");
    if (gp_q.size() != gp_l.size()) throw std::invalid_argument("nei: quality and stall models disagree on data");
    const auto n = static_cast<Eigen::Index>(gp_q.size());
    Eigen::VectorXd mq, ml;
    Eigen::MatrixXd cq, cl;
    gp_q.latent_posterior(mq, cq);
    gp_l.latent_posterior(ml, cl);
    const Eigen::MatrixXd z = sobol_normals(samples, static_cast<std::size_t>(2 * n), seed);
    fq_ = (z.leftCols(n) * covariance_root(cq).transpose()).rowwise() + mq.transpose();
    fl_ = (z.rightCols(n) * covariance_root(cl).transpose()).rowwise() + ml.transpose();

    incumbents_.resize(samples);
    for (Eigen::Index s = 0; s < fq_.rows(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i)
            if (fl_(s, i) <= threshold_) best = std::max(best, fq_(s, i));
        if (!std::isfinite(best)) {
            Eigen::Index lowest = 0;
            fl_.row(s).minCoeff(&lowest);
            best = fq_(s, lowest);
        }
        incumbents_[static_cast<std::size_t>(s)] = best;
    }
}

double NeiSampler::score(const Eigen::VectorXd& x) const {
    const auto cq = gp_q_->noiseless_conditional(x);
    const auto cl = gp_l_->noiseless_conditional(x);
    const double pq = gp_q_->prior_mean(), pl = gp_l_->prior_mean();
    const Eigen::VectorXd mu_q = ((fq_.array() - pq).matrix() * cq.weights).array() + pq;
    const Eigen::VectorXd mu_l = ((fl_.array() - pl).matrix() * cl.weights).array() + pl;
    const double sd_l = std::sqrt(cl.variance);
    double total = 0.0;
    for (Eigen::Index s = 0; s < mu_q.size(); ++s) {
        const double ei = expected_improvement(mu_q[s], cq.variance, incumbents_[static_cast<std::size_t>(s)]);
        if (ei <= 0.0) continue;
        const double pf = sd_l < 1e-12 ? (mu_l[s] <= threshold_ ? 1.0 : 0.0) : normal_cdf((threshold_ - mu_l[s]) / sd_l);
        total += ei * pf;
    }
    return total / static_cast<double>(mu_q.size());
}

std::vector<double> nei_acquisition(const GpModel& gp_q, const GpModel& gp_l, std::span<const Eigen::VectorXd> candidates,
                                    const ShapingConfig& config, std::uint64_t seed) {
    NeiSampler sampler(gp_q, gp_l, config.stall_threshold(), config.mc_samples, seed);
    std::vector<double> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = sampler.score(candidates[i]);
    return out;
}

namespace {

Eigen::VectorXd clamp_unit(const Eigen::VectorXd& u) { return u.cwiseMax(0.0).cwiseMin(1.0); }

bool is_new(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& taken) {
    for (const auto& t : taken)
        if ((t - x).norm() < 1e-6) return false;
    return true;
}

// The record most worth perturbing around: best feasible q, otherwise the
// lowest stall.
std::optional<std::size_t> anchor_record(std::span<const EvaluationRecord> data, double threshold) {
    if (data.empty()) return std::nullopt;
    if (auto best = feasible_best(data, threshold)) return best;
    std::size_t lowest = 0;
    for (std::size_t i = 1; i < data.size(); ++i)
        if (data[i].l_mean < data[lowest].l_mean) lowest = i;
    return lowest;
}

}  // namespace

std::vector<Eigen::VectorXd> propose_batch(const GpModel& gp_q, const GpModel& gp_l,
                                           std::span<const EvaluationRecord> data, const SearchSpace& space,
                                           const ShapingConfig& config, std::uint64_t seed) {
    const std::size_t d = gp_q.dims();
    GpModel q = gp_q, l = gp_l;
    std::vector<Eigen::VectorXd> taken;
    for (const auto& o : gp_q.data()) taken.push_back(o.x);

    Rng rng(derive_seed(seed, {0x10ca1ull}));
    std::normal_distribution<double> jitter(0.0, config.local_scale);
    const auto anchor = anchor_record(data, config.stall_threshold());

    std::vector<Eigen::VectorXd> batch;
    for (std::size_t k = 0; k < config.batch_size; ++k) {
        NeiSampler sampler(q, l, config.stall_threshold(), config.mc_samples, derive_seed(seed, {0x5a3ull, k}));
        auto pool = sobol_points(config.candidates, d, derive_seed(seed, {0xc4dull, k}));
        if (anchor && d == 5) {
            const Eigen::VectorXd centre = space.to_unit(data[*anchor].w);
            for (std::size_t j = 0; j < config.local_candidates; ++j) {
                Eigen::VectorXd p = centre;
                for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += jitter(rng);
                pool.push_back(clamp_unit(p));
            }
        }
        std::vector<double> scores(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = sampler.score(pool[i]);

        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

        Eigen::VectorXd best;
        double best_score = -1.0;
        const auto consider = [&](const Eigen::VectorXd& x, double s) {
            if (s > best_score && is_new(x, taken)) {
                best = x;
                best_score = s;
            }
        };
        for (std::size_t i : order) {
            if (is_new(pool[i], taken)) {
                consider(pool[i], scores[i]);
                break;
            }
        }
        const auto objective = [&](const Eigen::VectorXd& u) { return -sampler.score(clamp_unit(u)); };
        for (std::size_t r = 0; r < std::min(config.refine_starts, order.size()); ++r) {
            if (config.refine_evaluations == 0 || scores[order[r]] <= 0.0) break;
            auto [u, value] = nelder_mead(objective, pool[order[r]], 0.05, config.refine_evaluations);
            consider(clamp_unit(u), -value);
        }
        if (best.size() == 0) {
            // Every candidate coincides with a known point; fall back to a fresh draw.
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            best = Eigen::VectorXd(static_cast<Eigen::Index>(d));
            do {
                for (Eigen::Index i = 0; i < best.size(); ++i) best[i] = u01(rng);
            } while (!is_new(best, taken));
        }
        batch.push_back(best);
        taken.push_back(best);
        if (k + 1 < config.batch_size) {
            q = q.with_observation(best, q.predict(best).mean, 0.0);
            l = l.with_observation(best, l.predict(best).mean, 0.0);
        }
    }
    return batch;
}

std::vector<std::size_t> pareto_front(std::span<const EvaluationRecord> records) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < records.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < records.size() && !dominated; ++j) {
            if (i == j) continue;
            const auto& a = records[j];
            const auto& b = records[i];
            dominated = a.q_mean >= b.q_mean && a.l_mean <= b.l_mean && (a.q_mean > b.q_mean || a.l_mean < b.l_mean);
        }
        if (!dominated) front.push_back(i);
    }
    return front;
}

std::optional<std::size_t> feasible_best(std::span<const EvaluationRecord> records, double threshold) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].l_mean > threshold) continue;
        if (!best || records[i].q_mean > records[*best].q_mean) best = i;
    }
    return best;
}

namespace {

void evaluate_points(const BlackBox& black_box, const std::vector<train::RewardWeights>& points, std::size_t round,
                     const ShapingConfig& config, std::vector<EvaluationRecord>& records) {
    const std::size_t first = records.size();
    const std::size_t r = config.replicates;
    std::vector<Measurement> out(points.size() * r);
    parallel_for(out.size(), config.workers, [&](std::size_t job) {
        const std::size_t p = job / r, rep = job % r;
        out[job] = black_box(points[p], derive_seed(config.seed, {0x5a9eull, first + p, rep}));
    });
    for (std::size_t p = 0; p < points.size(); ++p) {
        std::vector<double> qs, ls;
        for (std::size_t rep = 0; rep < r; ++rep) {
            qs.push_back(out[p * r + rep].q);
            ls.push_back(out[p * r + rep].l);
        }
        EvaluationRecord rec;
        rec.round = round;
        rec.w = points[p];
        rec.replicates = r;
        rec.q_mean = train::mean(qs);
        rec.l_mean = train::mean(ls);
        rec.q_se = train::stddev(qs) / std::sqrt(static_cast<double>(r));
        rec.l_se = train::stddev(ls) / std::sqrt(static_cast<double>(r));
        records.push_back(rec);
    }
}

std::vector<GpObservation> observations(std::span<const EvaluationRecord> records, const SearchSpace& space,
                                        bool quality) {
    std::vector<GpObservation> obs;
    for (const auto& r : records)
        obs.push_back({space.to_unit(r.w), quality ? r.q_mean : r.l_mean, quality ? r.q_se : r.l_se});
    return obs;
}

}  // namespace

ShapingResult optimize_rewards(const BlackBox& black_box, const SearchSpace& space, const ShapingConfig& config,
                               const RoundCallback& on_round) {
    space.validate();
    config.validate();
    ShapingResult result;
    result.threshold = config.stall_threshold();

    Rng rng(derive_seed(config.seed, {0x1d5ull}));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<train::RewardWeights> initial;
    for (std::size_t i = 0; i < config.initial_points; ++i) {
        Eigen::VectorXd u(5);
        for (Eigen::Index k = 0; k < 5; ++k) u[k] = u01(rng);
        initial.push_back(space.from_unit(u));
    }
    evaluate_points(black_box, initial, 0, config, result.records);
    if (on_round) on_round(0, result.records);

    for (std::size_t round = 1; round <= config.rounds; ++round) {
        GpFitOptions fit = config.gp;
        fit.seed = derive_seed(config.gp.seed, {round});
        const auto gp_q = GpModel::fit(observations(result.records, space, true), fit);
        const auto gp_l = GpModel::fit(observations(result.records, space, false), fit);
        const auto batch =
            propose_batch(gp_q, gp_l, result.records, space, config, derive_seed(config.seed, {0xba7cull, round}));
        std::vector<train::RewardWeights> points;
        for (const auto& u : batch) points.push_back(space.from_unit(u));
        evaluate_points(black_box, points, round, config, result.records);
        if (on_round) on_round(round, result.records);
    }
    result.pareto = pareto_front(result.records);
    result.feasible_best = feasible_best(result.records, result.threshold);
    return result;
}

BlackBox training_black_box(trace::TraceSet traces, train::TrainConfig train_config) {
    if (traces.holdout_indices().empty()) throw std::invalid_argument("shaping: traces have no holdout split");
    train_config.validate();
    return [traces = std::move(traces), train_config](const train::RewardWeights& w, std::uint64_t seed) {
        train::TrainConfig c = train_config;
        c.seed = seed;
        const auto trained = train::train(traces, w, c);
        const auto metrics = evalrep::evaluate(policy::stochastic_decision(trained.params, trained.norm),
                                               traces.holdout(), c.capacity, derive_seed(seed, {0xe7ull}), c.workers);
        return Measurement{evalrep::mean_quality(metrics), evalrep::mean_stall_rate(metrics)};
    };
}

double heuristic_stall_rate(const trace::TraceSet& traces, double capacity, std::uint64_t seed) {
    const auto holdout = traces.holdout();
    if (holdout.empty()) throw std::invalid_argument("shaping: traces have no holdout split");
    policy::HeuristicPolicySpec spec;
    spec.kind = policy::HeuristicKind::rate_based;
    spec.chunk_duration = holdout[0].chunk_duration();
    return evalrep::mean_stall_rate(evalrep::evaluate(policy::heuristic_decision(spec), holdout, capacity, seed));
}

namespace {

void write_row(std::ostream& out, const EvaluationRecord& r, double threshold) {
    out << r.round << '\t' << format_double(r.w.w_b) << '\t' << format_double(r.w.w_d) << '\t'
        << format_double(r.w.w_c) << '\t' << format_double(r.w.v_b) << '\t' << format_double(r.w.v_d) << '\t'
        << format_double(r.q_mean) << '\t' << format_double(r.q_se) << '\t' << format_double(r.l_mean) << '\t'
        << format_double(r.l_se) << '\t' << (r.l_mean <= threshold ? 1 : 0) << '\n';
}

}  // namespace

void write_log(std::ostream& out, const ShapingResult& result, const ShapingConfig& config) {
    out << "#shaping baseline_stall=" << format_double(config.baseline_stall)
        << " constraint_ratio=" << format_double(config.constraint_ratio) << '\n';
    out << "#round\tw_b\tw_d\tw_c\tv_b\tv_d\tq_mean\tq_se\tl_mean\tl_se\tfeasible\n";
    for (const auto& r : result.records) write_row(out, r, result.threshold);
    out << "#pareto\n";
    for (std::size_t i : result.pareto) write_row(out, result.records[i], result.threshold);
}

void write_log(const std::filesystem::path& path, const ShapingResult& result, const ShapingConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write shaping log '" + path.string() + "'");
    write_log(out, result, config);
}

ShapingLog read_log(std::istream& in) {
    ShapingLog log;
    std::string line;
    std::size_t lineno = 0;
    bool in_pareto = false, header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto where = [&] { return "shaping log line " + std::to_string(lineno) + ": "; };
        if (line.empty()) continue;
        if (line.starts_with("#shaping")) {
            std::istringstream ss(line.substr(8));
            for (std::string kv; ss >> kv;) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw std::runtime_error(where() + "malformed field '" + kv + "'");
                const auto key = kv.substr(0, eq);
                const double v = parse_double(kv.substr(eq + 1));
                if (key == "baseline_stall")
                    log.baseline_stall = v;
                else if (key == "constraint_ratio")
                    log.constraint_ratio = v;
                else
                    throw std::runtime_error(where() + "unknown field '" + key + "'");
            }
            header = true;
            continue;
        }
        if (line == "#pareto") {
            in_pareto = true;
            continue;
        }
        if (line.starts_with('#')) continue;
        std::istringstream ss(line);
        std::vector<std::string> f;
        for (std::string tok; std::getline(ss, tok, '\t');) f.push_back(tok);
        if (f.size() != 11) throw std::runtime_error(where() + "expected 11 columns");
        EvaluationRecord r;
        try {
            r.round = static_cast<std::size_t>(parse_int(f[0]));
            r.w = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4]), parse_double(f[5])};
            r.q_mean = parse_double(f[6]);
            r.q_se = parse_double(f[7]);
            r.l_mean = parse_double(f[8]);
            r.l_se = parse_double(f[9]);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where() + e.what());
        }
        if (f[10] != "0" && f[10] != "1") throw std::runtime_error(where() + "feasible must be 0 or 1");
        (in_pareto ? log.pareto : log.records).push_back(r);
        (in_pareto ? log.pareto_feasible : log.feasible).push_back(f[10] == "1");
    }
    if (!header) throw std::runtime_error("shaping log: missing #shaping header");
    return log;
}

ShapingLog load_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open shaping log '" + path.string() + "'");
    return read_log(in);
}

}  // namespace abrlab::shaping
