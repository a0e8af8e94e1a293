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

// Acceptance run: one PASS/FAIL line per criterion. Arguments, when given,
// select criteria by name.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "abrlab/cli.hpp"
#include "abrlab/evalrep.hpp"
#include "abrlab/policy.hpp"
#include "abrlab/shaping.hpp"
#include "abrlab/train.hpp"
#include "abrlab/translate.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace abrlab;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// Collects failed checks; the verdict passes when none failed.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    Verdict verdict(const std::string& summary) const {
        if (failed_ == 0) return {true, summary};
        std::string d = std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed";
        for (const auto& f : failures_) d += "; " + f;
        return {false, d};
    }

private:
    std::size_t total_ = 0, failed_ = 0;
    std::vector<std::string> failures_;
};

const sim::DecisionFn kUniform = [](const sim::Observation& o, Rng& r) {
    return std::uniform_int_distribution<std::size_t>(0, o.sizes.size() - 1)(r);
};

// ---------------------------------------------------------------------------
// Shared desk-scale run: neural policy trained on the mixed synthetic set.

constexpr double kCapacity = sim::kDefaultCapacity;

trace::TraceSet mixed_traces() {
    auto cfg = trace::SyntheticTraceConfig::for_profile(trace::Profile::mixed);
    cfg.count = 200;
    return trace::generate_synthetic(cfg, 7);
}

train::TrainConfig mixed_train_config() {
    train::TrainConfig c;
    c.learning_rate = 3e-3;
    c.iterations = 1000;
    c.seed = 1;
    return c;
}

const train::TrainResult& mixed_policy() {
    static const train::TrainResult result = train::train(mixed_traces(), {}, mixed_train_config());
    return result;
}

double holdout_reward(const sim::DecisionFn& d, const trace::TraceSet& holdout) {
    return train::mean(train::session_rewards(d, holdout, {}, kCapacity, 5));
}

// ---------------------------------------------------------------------------

Verdict simulator_invariants() {
    Checks c;
    // Hand-derived steps.
    {
        const auto t = testing::flat_trace(1, 4000, {4000}, 2.0);
        sim::SessionState s;
        s.buffer = 4.0;
        const auto r = sim::step(s, 0, t).outcome;
        c.expect(r.download_time == 1.0 && r.stall_time == 0.0 && r.buffer_after == 5.0, "example: 4 s buffer");
    }
    {
        const auto t = testing::flat_trace(1, 1000, {2000}, 2.0);
        sim::SessionState s;
        s.buffer = 0.5;
        const auto r = sim::step(s, 0, t).outcome;
        c.expect(r.stall_time == 1.5 && r.stalled && r.buffer_after == 2.0, "example: stall branch");
    }
    {
        const auto t = testing::flat_trace(1, 1000, {500}, 2.0);
        sim::SessionState s;
        s.buffer = 9.5;
        s.capacity = 10.0;
        const auto r = sim::step(s, 0, t).outcome;
        c.expect(r.capacity_wait == 1.0 && r.buffer_after == 10.0, "example: capacity branch");
    }
    std::mt19937_64 gen(20260101);
    std::uniform_int_distribution<std::size_t> len(1, 60), enc(1, 7);
    std::uniform_real_distribution<double> cap(2.0, 40.0);
    for (int i = 0; i < 10000; ++i) {
        const auto t = testing::random_trace(gen, len(gen), enc(gen), 100.0, 15000.0);
        const double capacity = cap(gen);
        Rng rng(static_cast<std::uint64_t>(i));
        const auto traj = sim::run_session(kUniform, t, capacity, rng);
        const auto err = oracle::check_trajectory(traj, t, capacity);
        c.expect(err.empty(), "instance " + std::to_string(i) + ": " + err);
        // Monotonicity: replay with each action lowered by a random amount.
        std::vector<std::size_t> lower;
        for (const auto& s : traj.steps) lower.push_back(s.action == 0 ? 0 : gen() % (s.action + 1));
        std::size_t k = 0;
        const auto low = sim::run_session([&](const sim::Observation&, Rng&) { return lower[k++]; }, t, capacity, rng);
        double hi_stall = 0.0, lo_stall = 0.0;
        for (const auto& s : traj.steps) hi_stall += s.outcome.stall_time;
        for (const auto& s : low.steps) lo_stall += s.outcome.stall_time;
        c.expect(lo_stall <= hi_stall + 1e-9, "instance " + std::to_string(i) + ": stall not monotone");
        c.expect(low.size() == traj.size(), "instance " + std::to_string(i) + ": length depends on actions");
    }
    return c.verdict("3 hand examples, 10000 randomized sessions");
}

Verdict gradient_oracle() {
    Checks c;
    std::mt19937_64 rng(424242);
    double worst = 0.0, worst_identity = 0.0;
    for (std::size_t m : {1u, 2u, 4u, 7u}) {
        for (int i = 0; i < 100; ++i) {
            const auto pc = oracle::random_policy_case(rng, m);
            const auto g = policy::grad_log_prob(pc.params, pc.norm, pc.obs, pc.action);
            const auto fd = oracle::fd_grad_log_prob(pc.params, pc.norm, pc.obs, pc.action, 1e-5);
            const double err = oracle::relative_error(g, fd);
            worst = std::max(worst, err);
            c.expect(err < 1e-4, "M=" + std::to_string(m) + " relative error " + fmt(err));

            const auto p = policy::action_distribution(policy::priorities(pc.params, pc.norm, pc.obs));
            std::vector<double> total(g.size(), 0.0);
            for (std::size_t a = 0; a < m; ++a) {
                const auto ga = policy::grad_log_prob(pc.params, pc.norm, pc.obs, a);
                for (std::size_t k = 0; k < ga.size(); ++k) total[k] += p[a] * ga[k];
            }
            for (double v : total) worst_identity = std::max(worst_identity, std::abs(v));
        }
    }
    c.expect(worst_identity <= 1e-8, "score identity residual " + fmt(worst_identity));
    return c.verdict("400 triples, max rel err " + fmt(worst) + ", identity residual " + fmt(worst_identity));
}

Verdict architecture_scalability() {
    Checks c;
    const auto& trained = mixed_policy();
    std::vector<std::string> parts;
    for (std::size_t m : {2u, 4u, 7u}) {
        auto cfg = trace::SyntheticTraceConfig::for_profile(trace::Profile::mixed);
        cfg.count = 40;
        cfg.ladder_kbps.clear();
        for (std::size_t k = 0; k < m; ++k) cfg.ladder_kbps.push_back(300.0 * std::pow(14.0, double(k) / double(m - 1)));
        const auto holdout = trace::generate_synthetic(cfg, 11 + m).holdout();
        const auto metrics =
            evalrep::evaluate(policy::stochastic_decision(trained.params, trained.norm), holdout, kCapacity, 3);
        bool finite = true;
        for (const auto& s : metrics) finite = finite && std::isfinite(s.mean_bitrate) && std::isfinite(s.stall_rate);
        c.expect(metrics.size() == holdout.size() && finite, std::to_string(m) + "-rung evaluation");
        parts.push_back(std::to_string(m) + " rungs: q=" + fmt(evalrep::mean_quality(metrics)));

        // Exact permutation equivariance on this ladder.
        for (std::size_t i = 0; i < holdout.size(); ++i) {
            const auto& rec = holdout[i][0];
            sim::Observation obs{rec.prediction, 7.5, rec.sizes};
            const auto q = policy::priorities(trained.params, trained.norm, obs);
            std::vector<std::size_t> perm(m);
            std::iota(perm.begin(), perm.end(), 0);
            std::mt19937_64 prng(i);
            std::shuffle(perm.begin(), perm.end(), prng);
            auto shuffled = obs;
            for (std::size_t k = 0; k < m; ++k) shuffled.sizes[k] = obs.sizes[perm[k]];
            const auto qs = policy::priorities(trained.params, trained.norm, shuffled);
            for (std::size_t k = 0; k < m; ++k) c.expect(qs[k] == q[perm[k]], "permutation equivariance");
        }
    }
    std::string d;
    for (const auto& p : parts) d += (d.empty() ? "" : ", ") + p;
    return c.verdict(d + "; permutation equivariance exact");
}

Verdict variance_reduction() {
    Checks c;
    auto cfg = trace::SyntheticTraceConfig::for_profile(trace::Profile::mixed);
    cfg.count = 200;
    cfg.trace_scale_sigma = 0.8;
    std::string d;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto traces = trace::generate_synthetic(cfg, 100 + seed);
        double final_reward[2], mean_std[2];
        for (int mode = 0; mode < 2; ++mode) {
            train::TrainConfig tc;
            tc.iterations = 1000;
            tc.seed = seed;
            tc.baseline = mode == 0 ? train::BaselineMode::input_dependent : train::BaselineMode::time_based;
            const auto r = train::train(traces, {}, tc);
            double s = 0.0;
            for (const auto& p : r.curve.points) s += p.reward_std;
            mean_std[mode] = s / static_cast<double>(r.curve.points.size());
            final_reward[mode] = holdout_reward(policy::stochastic_decision(r.params, r.norm), traces.holdout());
        }
        const std::string tag = "seed " + std::to_string(seed);
        c.expect(final_reward[0] >= final_reward[1], tag + ": final reward " + fmt(final_reward[0]) + " < " + fmt(final_reward[1]));
        c.expect(mean_std[0] < mean_std[1], tag + ": reward std " + fmt(mean_std[0]) + " >= " + fmt(mean_std[1]));
        d += (d.empty() ? "" : "; ") + tag + " reward " + fmt(final_reward[0]) + " vs " + fmt(final_reward[1]) +
             ", std " + fmt(mean_std[0]) + " vs " + fmt(mean_std[1]);
    }
    return c.verdict("input-dependent vs time-based: " + d);
}

Verdict policy_competence() {
    Checks c;
    // Two-rung bandit with a computable per-step optimum.
    const auto bandit = testing::bandit_traces(40, 9);
    train::TrainConfig bc;
    bc.capacity = 2.0;
    bc.learning_rate = 3e-3;
    bc.entropy_weight = 1.0;
    bc.iterations = 1500;
    bc.traces_per_iteration = 8;
    bc.rollouts_per_trace = 4;
    bc.layers = {3, 16, 16, 1};
    const auto br = train::train(bandit, {}, bc);
    double matched = 0.0;
    std::size_t steps = 0;
    for (std::size_t i : bandit.holdout_indices()) {
        Rng rng(i);
        const auto traj = sim::run_session(policy::stochastic_decision(br.params, br.norm), bandit[i], 2.0, rng);
        for (std::size_t s = 0; s < traj.size(); ++s) {
            const auto& obs = traj.steps[s].observation;
            const auto best = oracle::myopic_best(obs, bandit[i][s].measured, 2.0, 2.0, 1.0, 4.0, -1.0);
            matched += policy::action_distribution(policy::priorities(br.params, br.norm, obs))[best];
            ++steps;
        }
    }
    const double match = matched / static_cast<double>(steps);
    c.expect(match > 0.95, "bandit optimum probability " + fmt(match));

    const auto holdout = mixed_traces().holdout();
    const auto& trained = mixed_policy();
    const double nn = holdout_reward(policy::stochastic_decision(trained.params, trained.norm), holdout);
    policy::HeuristicPolicySpec rate, buffer;
    buffer.kind = policy::HeuristicKind::buffer_based;
    const double hr = holdout_reward(policy::heuristic_decision(rate), holdout);
    const double hb = holdout_reward(policy::heuristic_decision(buffer), holdout);
    c.expect(nn > hr && nn > hb, "neural " + fmt(nn) + " vs rate " + fmt(hr) + ", buffer " + fmt(hb));
    return c.verdict("bandit optimum probability " + fmt(match) + "; mixed holdout reward neural " + fmt(nn) +
                     " > rate " + fmt(hr) + ", buffer " + fmt(hb));
}

Verdict bo_suite() {
    Checks c;
    // GP interpolation of noise-free data.
    {
        std::vector<shaping::GpObservation> data;
        for (int i = 0; i < 10; ++i) {
            Eigen::VectorXd x(1);
            x(0) = i / 9.0;
            data.push_back({x, std::sin(2.0 * M_PI * x(0)), 0.0});
        }
        const auto gp = shaping::GpModel::fit(data);
        for (const auto& o : data) c.expect(std::abs(gp.predict(o.x).mean - o.mean) < 1e-4, "GP interpolation");
    }
    // Closed-form EI.
    for (double sd : {0.1, 1.0, 4.0})
        c.expect(std::abs(shaping::expected_improvement(0.3, sd * sd, 0.3) - sd / std::sqrt(2.0 * M_PI)) < 1e-12,
                 "EI at mu = f*");
    c.expect(std::abs(shaping::expected_improvement(1.0, 4.0, 0.0) - 1.3955931) < 1e-6, "EI general value");
    c.expect(shaping::expected_improvement(2.0, 0.0, 1.5) == 0.5, "EI noiseless");

    // NEI against a brute-force oracle on the 1-d toy.
    const oracle::Toy1d toy;
    const auto [gq, gl] = oracle::toy1d_models(0.01);
    std::vector<Eigen::VectorXd> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(Eigen::VectorXd::Constant(1, i / 40.0));
    shaping::ShapingConfig sc;
    sc.baseline_stall = toy.threshold;
    sc.constraint_ratio = 1.0;
    sc.mc_samples = 512;
    const auto nei = shaping::nei_acquisition(gq, gl, grid, sc, 3);
    const auto ref = oracle::brute_force_nei(gq, gl, grid, toy.threshold, 20000, 5);
    const auto at = [&](const std::vector<double>& v) {
        return grid[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())](0);
    };
    const double xa = at(nei), xb = at(ref);
    c.expect(xa >= 0.55 && xa <= 0.8, "NEI argmax " + fmt(xa));
    c.expect(xb >= 0.55 && xb <= 0.8, "oracle argmax " + fmt(xb));
    c.expect(std::abs(xa - xb) <= 0.05 + 1e-12, "argmax disagreement");

    // Convergence on the 5-d toy black box.
    const shaping::SearchSpace space;
    const oracle::Toy5d toy5;
    shaping::ShapingConfig oc;
    oc.initial_points = 16;
    oc.rounds = 3;
    oc.replicates = 2;
    oc.baseline_stall = toy5.threshold;
    oc.constraint_ratio = 1.0;
    const auto result = shaping::optimize_rewards(toy5.black_box(space), space, oc);
    const double optimum = toy5.optimum();
    double best = 0.0;
    if (result.feasible_best) {
        const auto u = space.to_unit(result.records[*result.feasible_best].w);
        best = toy5.q(u);
        c.expect(toy5.l(u) <= toy5.threshold + 3 * toy5.noise, "feasible best violates the constraint");
    }
    c.expect(result.feasible_best.has_value() && best >= 0.95 * optimum,
             "toy optimum " + fmt(best) + " vs " + fmt(optimum));
    return c.verdict("NEI argmax " + fmt(xa) + " (oracle " + fmt(xb) + "); toy best " + fmt(best) + " of " +
                     fmt(optimum) + " after 16 + 3 rounds");
}

Verdict shaping_pipeline() {
    Checks c;
    testing::TempDir dir;
    const auto log_path = dir / "shaping.log";
    testing::write_file(dir / "shape.ini",
                        "seed = 2\n"
                        "[paths]\n"
                        "traces = " + (dir / "traces.txt").string() + "\n"
                        "[traces]\n"
                        "profile = mixed\n"
                        "count = 120\n"
                        "[train]\n"
                        "learning_rate = 0.003\n"
                        "[shaping]\n"
                        "initial_points = 16\n"
                        "rounds = 2\n"
                        "replicates = 2\n"
                        "train_iterations = 150\n");
    std::ostringstream out, err;
    const auto cfg = (dir / "shape.ini").string();
    if (cli::run({"gen-traces", "--config", cfg}, out, err) != 0 ||
        cli::run({"shape", "--config", cfg, "--out", log_path.string()}, out, err) != 0)
        return {false, "shape failed: " + err.str()};
    const auto log = shaping::load_log(log_path);
    c.expect(log.records.size() == 16 + 2 * 8, "record count " + std::to_string(log.records.size()));
    auto dominates = [](const shaping::EvaluationRecord& a, const shaping::EvaluationRecord& b) {
        return a.q_mean >= b.q_mean && a.l_mean <= b.l_mean && (a.q_mean > b.q_mean || a.l_mean < b.l_mean);
    };
    for (const auto& p : log.pareto)
        for (const auto& r : log.records) c.expect(!dominates(r, p), "dominated Pareto point");
    for (const auto& r : log.records) {
        bool covered = false;
        for (const auto& p : log.pareto) covered = covered || dominates(p, r) || (p.q_mean == r.q_mean && p.l_mean == r.l_mean);
        c.expect(covered, "non-dominated record missing from the Pareto set");
    }

    // l_s recomputed on the holdout split, independent of the log.
    const auto traces = trace::load_traces(dir / "traces.txt", 0.2, 2);
    const double ls = shaping::heuristic_stall_rate(traces, kCapacity, 2);
    c.expect(std::abs(ls - log.baseline_stall) <= 1e-9 * std::max(1.0, ls), "logged l_s differs from recomputation");
    const double limit = 1.05 * ls;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < log.records.size(); ++i)
        if (log.records[i].l_mean <= limit && (!best || log.records[i].q_mean > log.records[*best].q_mean)) best = i;
    c.expect(best.has_value(), "no feasible point");
    if (best) {
        c.expect(log.feasible[*best], "feasible flag missing on the feasible best");
        c.expect(log.records[*best].l_mean <= limit, "feasible best over the limit");
    }
    std::string d = std::to_string(log.records.size()) + " evaluations, " + std::to_string(log.pareto.size()) +
                     " Pareto points, l_s=" + fmt(ls);
    if (best) d += ", feasible best q=" + fmt(log.records[*best].q_mean) + " l=" + fmt(log.records[*best].l_mean);
    return c.verdict(d);
}

Verdict translation_suite() {
    Checks c;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> x(200, 20000), o(0, 30), t(500, 9000);
    std::vector<translate::DesignPoint> pts(2000);
    const policy::LinearPolicyParams truth{0.63, -87.5, 412.0};
    for (auto& p : pts) {
        p = {x(rng), o(rng), 0.0};
        p.target = truth.intended(p.x, p.o);
    }
    const auto fit = translate::fit_linear(pts);
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    c.expect(close(fit.a, truth.a) && close(fit.b, truth.b) && close(fit.c, truth.c), "exact recovery");

    for (auto& p : pts) p.target = t(rng);
    const auto noisy = translate::fit_linear(pts);
    double dot[3] = {}, col[3] = {}, yy = 0.0;
    for (const auto& p : pts) {
        const double r = p.target - noisy.intended(p.x, p.o);
        const double v[3] = {p.x, p.o, 1.0};
        for (int j = 0; j < 3; ++j) {
            dot[j] += v[j] * r;
            col[j] += v[j] * v[j];
        }
        yy += p.target * p.target;
    }
    double worst = 0.0;
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(dot[j]) / std::sqrt(col[j] * yy));
    c.expect(worst < 1e-8, "residual orthogonality " + fmt(worst));

    const auto traces = mixed_traces();
    const auto& trained = mixed_policy();
    const auto tcfg = translate::config_from_traces(traces, kCapacity);
    const auto tr = translate::translate_policy(trained.params, trained.norm, tcfg);
    const auto holdout = traces.holdout();
    const double nn = holdout_reward(policy::stochastic_decision(trained.params, trained.norm), holdout);
    const double lin = holdout_reward(policy::linear_decision(tr.linear), holdout);
    c.expect(lin >= nn - 0.05 * std::abs(nn), "linear " + fmt(lin) + " vs neural " + fmt(nn));
    return c.verdict("orthogonality " + fmt(worst) + "; holdout reward linear " + fmt(lin) + " vs neural " + fmt(nn) +
                     " (" + translate::format_fit_report(tr.report) + ")");
}

Verdict statistics_suite() {
    Checks c;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> br(300, 4000), st(0, 4), bw(100, 20000), up(1e-3, 0.3);
    std::vector<evalrep::SessionMetrics> a;
    for (int i = 0; i < 300; ++i) {
        const double s = st(rng);
        a.push_back({"s" + std::to_string(i), br(rng), s, static_cast<std::size_t>(s) + 1, 60.0, bw(rng)});
    }
    a[0].mean_bandwidth = 500.0;
    a[1].mean_bandwidth = 10000.0;
    a[2].mean_bandwidth = 499.0;
    a[3].mean_bandwidth = 10001.0;
    auto b = a;
    for (auto& s : b) s.mean_bitrate *= 1.0 + std::normal_distribution<double>(0.02, 0.05)(rng);

    const auto r1 = evalrep::compare(a, b, 10000, 17);
    const auto r2 = evalrep::compare(a, b, 10000, 17);
    bool same = r1.rows.size() == r2.rows.size();
    for (std::size_t i = 0; same && i < r1.rows.size(); ++i)
        same = r1.rows[i].point == r2.rows[i].point && r1.rows[i].ci95.lo == r2.rows[i].ci95.lo &&
               r1.rows[i].ci95.hi == r2.rows[i].ci95.hi && r1.rows[i].ci99.lo == r2.rows[i].ci99.lo &&
               r1.rows[i].ci99.hi == r2.rows[i].ci99.hi;
    c.expect(same, "bootstrap not deterministic");
    for (const auto& r : r1.rows)
        c.expect(r.ci99.lo <= r.ci95.lo && r.ci95.lo <= r.point && r.point <= r.ci95.hi && r.ci95.hi <= r.ci99.hi,
                 "interval ordering " + r.metric + "/" + r.group);

    auto up_b = a;
    for (auto& s : up_b) {
        s.mean_bitrate += up(rng);
        s.stall_rate += up(rng);
        s.stall_count += 1;
    }
    for (const auto& r : evalrep::compare(a, up_b, 10000, 3).rows)
        c.expect(r.point > 0 && r.ci95.lo > 0 && r.ci99.lo > 0, "sign consistency " + r.metric + "/" + r.group);

    c.expect(evalrep::classify(400) == evalrep::Subgroup::slow, "400 kbps");
    c.expect(evalrep::classify(500) == evalrep::Subgroup::medium, "500 kbps");
    c.expect(evalrep::classify(10000) == evalrep::Subgroup::medium, "10 Mbps");
    c.expect(evalrep::classify(10001) == evalrep::Subgroup::fast, "10001 kbps");
    const auto parts = evalrep::subgroup_breakdown(a);
    std::vector<int> seen(a.size());
    for (auto* g : {&parts.slow, &parts.medium, &parts.fast})
        for (std::size_t i : *g) ++seen[i];
    c.expect(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }), "partition not exact");
    for (std::size_t i : parts.slow) c.expect(a[i].mean_bandwidth < 500.0, "slow member");
    for (std::size_t i : parts.fast) c.expect(a[i].mean_bandwidth > 10000.0, "fast member");
    c.expect(std::find(parts.medium.begin(), parts.medium.end(), 0) != parts.medium.end() &&
                 std::find(parts.medium.begin(), parts.medium.end(), 1) != parts.medium.end(),
             "boundary sessions not medium");
    const auto* all = r1.find("bitrate", "all");
    return c.verdict("bitrate gain " + fmt(all ? all->point : 0.0) + " 95% [" + fmt(all ? all->ci95.lo : 0.0) + ", " +
                     fmt(all ? all->ci95.hi : 0.0) + "]; " + std::to_string(parts.slow.size()) + "/" +
                     std::to_string(parts.medium.size()) + "/" + std::to_string(parts.fast.size()) + " sessions");
}

Verdict end_to_end_determinism() {
    auto chain = [](const testing::TempDir& dir, std::string& log) {
        testing::write_file(dir / "run.ini",
                            "seed = 11\n"
                            "workers = 2\n"
                            "[paths]\n"
                            "traces = " + (dir / "traces.txt").string() + "\n"
                            "policy = " + (dir / "policy.ckpt").string() + "\n"
                            "linear = " + (dir / "linear.ckpt").string() + "\n"
                            "curve = " + (dir / "curve.tsv").string() + "\n"
                            "report = " + (dir / "report.tsv").string() + "\n"
                            "[traces]\n"
                            "count = 60\n"
                            "[train]\n"
                            "iterations = 100\n"
                            "learning_rate = 0.003\n");
        const auto cfg = (dir / "run.ini").string();
        std::ostringstream out, err;
        auto ok = [&](std::vector<std::string> args) { return cli::run(args, out, err) == 0; };
        const bool good = ok({"gen-traces", "--config", cfg}) && ok({"train", "--config", cfg}) &&
                          ok({"translate", "--config", cfg, "--in", (dir / "policy.ckpt").string()}) &&
                          ok({"eval", "--config", cfg, "--policy", (dir / "policy.ckpt").string(), "--out",
                              (dir / "nn.tsv").string()}) &&
                          ok({"eval", "--config", cfg, "--policy", (dir / "linear.ckpt").string(), "--out",
                              (dir / "lin.tsv").string()}) &&
                          ok({"compare", "--config", cfg, "--a", (dir / "nn.tsv").string(), "--b",
                              (dir / "lin.tsv").string()});
        log = err.str();
        return good;
    };
    testing::TempDir d1, d2;
    std::string log1, log2;
    if (!chain(d1, log1) || !chain(d2, log2)) return {false, "chain failed: " + log1 + log2};
    const std::vector<std::string> files{"traces.txt", "policy.ckpt", "curve.tsv", "linear.ckpt",
                                         "nn.tsv",     "lin.tsv",     "report.tsv"};
    Checks c;
    std::size_t bytes = 0;
    for (const auto& f : files) {
        const auto x = testing::read_file(d1 / f), y = testing::read_file(d2 / f);
        c.expect(!x.empty() && x == y, f + " differs");
        bytes += x.size();
    }
    return c.verdict(std::to_string(files.size()) + " artifacts byte-identical (" + std::to_string(bytes) + " bytes)");
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"simulator-invariants", simulator_invariants},
        {"gradient-oracle", gradient_oracle},
        {"architecture-scalability", architecture_scalability},
        {"variance-reduction", variance_reduction},
        {"policy-competence", policy_competence},
        {"bo-suite", bo_suite},
        {"shaping-pipeline", shaping_pipeline},
        {"translation-suite", translation_suite},
        {"statistics-suite", statistics_suite},
        {"end-to-end-determinism", end_to_end_determinism},
    };
    const std::vector<std::string> selected(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), name) == selected.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << " (" << fmt(secs, 3) << " s): " << v.detail << std::endl;
        if (!v.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
