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

#include "abrlab/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "abrlab/common.hpp"
#include "abrlab/config.hpp"
#include "abrlab/evalrep.hpp"
#include "abrlab/policy.hpp"
#include "abrlab/shaping.hpp"
#include "abrlab/trace.hpp"
#include "abrlab/train.hpp"
#include "abrlab/translate.hpp"

namespace abrlab::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out;
    std::string in;
    std::string curve;
    std::string policy;
    std::string traces;
    std::string a;
    std::string b;
};

std::vector<std::string> collect_overrides(const CLI::App& sub) {
    std::vector<std::string> overrides;
    for (const auto& extra : sub.remaining()) {
        if (!extra.starts_with("--") || extra.find('=') == std::string::npos)
            throw UsageError("unexpected argument '" + extra + "' (config overrides take the form --section.key=value)");
        overrides.push_back(extra.substr(2));
    }
    return overrides;
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
    return path.empty() ? default_config(overrides) : load_config(path, overrides);
}

trace::TraceSet read_trace_file(const std::string& path, const RunConfig& cfg) {
    if (path.empty() || !fs::exists(path))
        throw std::runtime_error("missing traces: '" + path + "' does not exist (run gen-traces first)");
    return trace::load_traces(path, cfg.traces.holdout_fraction, cfg.seed);
}

std::string first_line(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing input: cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    return line;
}

std::string percent(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << (v >= 0 ? "+" : "") << v * 100.0 << "%";
    return s.str();
}

std::string fixed(double v, int digits = 3) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

int gen_traces(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    const std::string path = opt.out.empty() ? cfg.paths.traces : opt.out;
    const auto traces = trace::generate_synthetic(cfg.traces, cfg.seed);
    trace::write_traces(path, traces);
    out << "gen-traces: wrote " << traces.size() << " traces (" << traces.train_indices().size() << " train, "
        << traces.holdout_indices().size() << " holdout) to " << path << "\n";
    return 0;
}

int train_cmd(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    const auto traces = read_trace_file(cfg.paths.traces, cfg);
    const std::string path = opt.out.empty() ? cfg.paths.policy : opt.out;
    const std::string curve_path = opt.curve.empty() ? cfg.paths.curve : opt.curve;
    auto tc = cfg.train;
    tc.seed = cfg.seed;
    tc.workers = cfg.workers;
    const auto result = train::train(traces, cfg.reward, tc);
    policy::write_policy(path, result.params, result.norm);
    if (!curve_path.empty()) train::write_curve(curve_path, result.curve);
    out << "train: " << tc.iterations << " iterations (" << train::to_string(tc.baseline) << " baseline)";
    if (!result.curve.points.empty())
        out << ", final curve reward " << fixed(result.curve.points.back().mean_reward) << " (std "
            << fixed(result.curve.points.back().reward_std) << ")";
    out << ", checkpoint " << path << "\n";
    return 0;
}

int shape_cmd(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    const auto traces = read_trace_file(cfg.paths.traces, cfg);
    const std::string path = opt.out.empty() ? cfg.paths.shaping_log : opt.out;
    auto sc = cfg.shaping.config;
    sc.seed = cfg.seed;
    sc.workers = cfg.workers;
    if (cfg.shaping.auto_baseline_stall) {
        sc.baseline_stall = shaping::heuristic_stall_rate(traces, cfg.train.capacity, cfg.seed);
        if (!(sc.baseline_stall > 0.0))
            throw std::runtime_error("rate-based heuristic never stalls on the holdout traces; set shaping.baseline_stall");
    }
    auto tc = cfg.train;
    tc.workers = 1;
    if (cfg.shaping.train_iterations > 0) tc.iterations = cfg.shaping.train_iterations;
    const auto result = shaping::optimize_rewards(shaping::training_black_box(traces, tc), shaping::SearchSpace{}, sc);
    shaping::write_log(path, result, sc);
    out << "shape: " << result.records.size() << " evaluations, " << result.pareto.size() << " Pareto points, ";
    if (result.feasible_best) {
        const auto& r = result.records[*result.feasible_best];
        out << "feasible best q=" << fixed(r.q_mean, 1) << " l=" << fixed(r.l_mean) << " (limit "
            << fixed(result.threshold) << ")";
    } else {
        out << "no feasible point (limit " << fixed(result.threshold) << ")";
    }
    out << ", log " << path << "\n";
    return 0;
}

int translate_cmd(const RunConfig& cfg, const Options& opt, bool have_config, std::ostream& out) {
    if (opt.in.empty()) throw UsageError("translate needs --in <policy checkpoint>");
    if (!fs::exists(opt.in)) throw std::runtime_error("missing input: policy checkpoint '" + opt.in + "' does not exist");
    const auto ckpt = policy::load_policy(opt.in);
    const std::string path = opt.out.empty() ? cfg.paths.linear : opt.out;

    translate::TranslateConfig tc;
    if (have_config && fs::exists(cfg.paths.traces)) {
        tc = translate::config_from_traces(read_trace_file(cfg.paths.traces, cfg), ckpt.norm.buffer);
    } else {
        tc.probe_max = ckpt.norm.size;
        tc.probe_min = std::min(tc.probe_min, 0.5 * tc.probe_max);
        tc.o_max = ckpt.norm.buffer;
    }
    const auto& s = cfg.translate;
    tc.points = s.points;
    tc.probe_count = s.probe_count;
    if (s.probe_min) tc.probe_min = *s.probe_min;
    if (s.probe_max) tc.probe_max = *s.probe_max;
    if (s.x_min) tc.x_min = *s.x_min;
    if (s.x_max) tc.x_max = *s.x_max;
    if (s.o_min) tc.o_min = *s.o_min;
    if (s.o_max) tc.o_max = *s.o_max;
    tc.seed = cfg.seed;

    const auto t = translate::translate_policy(ckpt.params, ckpt.norm, tc);
    policy::write_linear(path, t.linear);
    out << "translate: " << translate::format_fit_report(t.report) << ", linear " << path << "\n";
    return 0;
}

sim::DecisionFn load_decision(const std::string& spec, const trace::TraceSet& traces) {
    if (spec == "heuristic:rate" || spec == "heuristic:buffer") {
        policy::HeuristicPolicySpec h;
        h.kind = spec == "heuristic:rate" ? policy::HeuristicKind::rate_based : policy::HeuristicKind::buffer_based;
        h.chunk_duration = traces[0].chunk_duration();
        return policy::heuristic_decision(h);
    }
    if (!fs::exists(spec)) throw std::runtime_error("missing input: policy '" + spec + "' does not exist");
    const auto head = first_line(spec);
    if (head.starts_with("#abrlinear")) return policy::linear_decision(policy::load_linear(spec));
    if (head.starts_with("#abrpolicy")) {
        const auto ckpt = policy::load_policy(spec);
        return policy::stochastic_decision(ckpt.params, ckpt.norm);
    }
    throw std::runtime_error("'" + spec + "' is neither a policy nor a linear checkpoint");
}

int eval_cmd(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    if (opt.policy.empty()) throw UsageError("eval needs --policy <checkpoint|heuristic:rate|heuristic:buffer>");
    const auto all = read_trace_file(opt.traces.empty() ? cfg.paths.traces : opt.traces, cfg);
    const auto traces = cfg.eval.holdout_only ? all.holdout() : all;
    if (traces.empty()) throw std::runtime_error("no traces to evaluate (holdout split is empty)");
    const std::string path = opt.out.empty() ? cfg.paths.metrics : opt.out;
    const auto metrics = evalrep::evaluate(load_decision(opt.policy, traces), traces, cfg.train.capacity, cfg.seed,
                                           cfg.workers);
    evalrep::write_metrics(path, metrics);
    out << "eval: " << metrics.size() << " sessions, mean bitrate " << fixed(evalrep::mean_quality(metrics), 1)
        << " kbps, stall rate " << fixed(evalrep::mean_stall_rate(metrics)) << " s/min, metrics " << path << "\n";
    return 0;
}

int compare_cmd(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    if (opt.a.empty() || opt.b.empty()) throw UsageError("compare needs --a <metrics> and --b <metrics>");
    for (const auto& p : {opt.a, opt.b})
        if (!fs::exists(p)) throw std::runtime_error("missing input: metrics file '" + p + "' does not exist");
    const auto a = evalrep::load_metrics(opt.a);
    const auto b = evalrep::load_metrics(opt.b);
    const auto report = evalrep::compare(a, b, cfg.eval.resamples, cfg.seed);
    const std::string path = opt.out.empty() ? cfg.paths.report : opt.out;
    evalrep::write_report(path, report);
    out << "compare: " << a.size() << " paired sessions";
    for (const char* metric : {"bitrate", "stall_rate"}) {
        if (const auto* row = report.find(metric, "all"))
            out << ", " << metric << " " << percent(row->point) << " [" << percent(row->ci95.lo) << ", "
                << percent(row->ci95.hi) << "]";
    }
    out << ", report " << path << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"abrlab: trace-driven adaptive-bitrate learning lab", "abrlab"};
    app.require_subcommand(1);
    Options opt;

    auto* gen = app.add_subcommand("gen-traces", "generate a synthetic trace file");
    gen->add_option("--config", opt.config, "config file")->required();
    gen->add_option("--out", opt.out, "trace file (default: paths.traces)");

    auto* trn = app.add_subcommand("train", "train the neural policy");
    trn->add_option("--config", opt.config, "config file")->required();
    trn->add_option("--out", opt.out, "policy checkpoint (default: paths.policy)");
    trn->add_option("--curve", opt.curve, "learning curve TSV (default: paths.curve)");

    auto* shp = app.add_subcommand("shape", "optimize reward weights");
    shp->add_option("--config", opt.config, "config file")->required();
    shp->add_option("--out", opt.out, "shaping log (default: paths.shaping_log)");

    auto* trl = app.add_subcommand("translate", "fit the linear controller to a policy");
    trl->add_option("--in", opt.in, "policy checkpoint")->required();
    trl->add_option("--out", opt.out, "linear checkpoint (default: paths.linear)");
    trl->add_option("--config", opt.config, "config file (ranges, seed)");

    auto* evl = app.add_subcommand("eval", "evaluate a policy on traces");
    evl->add_option("--policy", opt.policy, "checkpoint, heuristic:rate or heuristic:buffer")->required();
    evl->add_option("--traces", opt.traces, "trace file (default: paths.traces)");
    evl->add_option("--out", opt.out, "metrics TSV (default: paths.metrics)");
    evl->add_option("--config", opt.config, "config file (split, seed, capacity)");

    auto* cmp = app.add_subcommand("compare", "bootstrap comparison of two metrics files");
    cmp->add_option("--a", opt.a, "baseline metrics")->required();
    cmp->add_option("--b", opt.b, "candidate metrics")->required();
    cmp->add_option("--out", opt.out, "report TSV (default: paths.report)");
    cmp->add_option("--config", opt.config, "config file (resamples, seed)");

    for (auto* sub : {gen, trn, shp, trl, evl, cmp}) sub->allow_extras();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        const auto cfg = resolve_config(opt.config, collect_overrides(*sub));
        if (sub == gen) return gen_traces(cfg, opt, out);
        if (sub == trn) return train_cmd(cfg, opt, out);
        if (sub == shp) return shape_cmd(cfg, opt, out);
        if (sub == trl) return translate_cmd(cfg, opt, !opt.config.empty(), out);
        if (sub == evl) return eval_cmd(cfg, opt, out);
        return compare_cmd(cfg, opt, out);
    } catch (const UsageError& e) {
        err << "abrlab " << name << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "abrlab " << name << ": error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace abrlab::cli
