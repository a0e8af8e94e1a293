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

#include "abrlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "abrlab/common.hpp"

namespace abrlab::cli {

ConfigError::ConfigError(std::string origin, std::size_t line, std::string key, const std::string& what)
    : std::runtime_error(origin + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                         (key.empty() ? std::string() : "'" + key + "': ") + what),
      origin_(std::move(origin)),
      line_(line),
      key_(std::move(key)) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) { return parse_double(v); }

std::size_t to_size(const std::string& v) {
    const long long n = parse_int(v);
    if (n < 0) throw std::invalid_argument("must be a non-negative integer");
    return static_cast<std::size_t>(n);
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t n = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
        throw std::invalid_argument("expected an unsigned integer, got '" + v + "'");
    return n;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string tok; std::getline(ss, tok, ',');) out.push_back(trim(tok));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& t : split_list(v)) out.push_back(to_double(t));
    return out;
}

std::optional<double> auto_or_double(const std::string& v) {
    if (v == "auto") return std::nullopt;
    return to_double(v);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["seed"] = [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); };
        t["workers"] = [](RunConfig& c, const std::string& v) { c.workers = to_size(v); };

        t["paths.traces"] = [](RunConfig& c, const std::string& v) { c.paths.traces = v; };
        t["paths.policy"] = [](RunConfig& c, const std::string& v) { c.paths.policy = v; };
        t["paths.linear"] = [](RunConfig& c, const std::string& v) { c.paths.linear = v; };
        t["paths.curve"] = [](RunConfig& c, const std::string& v) { c.paths.curve = v; };
        t["paths.shaping_log"] = [](RunConfig& c, const std::string& v) { c.paths.shaping_log = v; };
        t["paths.metrics"] = [](RunConfig& c, const std::string& v) { c.paths.metrics = v; };
        t["paths.report"] = [](RunConfig& c, const std::string& v) { c.paths.report = v; };

        t["traces.profile"] = [](RunConfig& c, const std::string& v) {
            const auto keep = c.traces;
            c.traces = trace::SyntheticTraceConfig::for_profile(trace::parse_profile(v));
            c.traces.count = keep.count;
            c.traces.holdout_fraction = keep.holdout_fraction;
        };
        t["traces.count"] = [](RunConfig& c, const std::string& v) { c.traces.count = to_size(v); };
        t["traces.ladder"] = [](RunConfig& c, const std::string& v) { c.traces.ladder_kbps = to_doubles(v); };
        t["traces.chunk_duration"] = [](RunConfig& c, const std::string& v) { c.traces.chunk_duration = to_double(v); };
        t["traces.states"] = [](RunConfig& c, const std::string& v) {
            c.traces.states.clear();
            for (const auto& s : split_list(v)) {
                const auto colon = s.find(':');
                if (colon == std::string::npos) throw std::invalid_argument("states are mean_kbps:sigma pairs");
                c.traces.states.push_back({to_double(trim(s.substr(0, colon))), to_double(trim(s.substr(colon + 1)))});
            }
        };
        t["traces.stay_probability"] = [](RunConfig& c, const std::string& v) { c.traces.stay_probability = to_double(v); };
        t["traces.trace_scale_sigma"] = [](RunConfig& c, const std::string& v) { c.traces.trace_scale_sigma = to_double(v); };
        t["traces.mean_chunks"] = [](RunConfig& c, const std::string& v) { c.traces.mean_chunks = to_double(v); };
        t["traces.min_chunks"] = [](RunConfig& c, const std::string& v) { c.traces.min_chunks = to_size(v); };
        t["traces.max_chunks"] = [](RunConfig& c, const std::string& v) { c.traces.max_chunks = to_size(v); };
        t["traces.size_jitter"] = [](RunConfig& c, const std::string& v) { c.traces.size_jitter = to_double(v); };
        t["traces.predictor_window"] = [](RunConfig& c, const std::string& v) { c.traces.predictor_window = to_size(v); };
        t["traces.holdout_fraction"] = [](RunConfig& c, const std::string& v) { c.traces.holdout_fraction = to_double(v); };

        t["reward.w_b"] = [](RunConfig& c, const std::string& v) { c.reward.w_b = to_double(v); };
        t["reward.w_d"] = [](RunConfig& c, const std::string& v) { c.reward.w_d = to_double(v); };
        t["reward.w_c"] = [](RunConfig& c, const std::string& v) { c.reward.w_c = to_double(v); };
        t["reward.v_b"] = [](RunConfig& c, const std::string& v) { c.reward.v_b = to_double(v); };
        t["reward.v_d"] = [](RunConfig& c, const std::string& v) { c.reward.v_d = to_double(v); };

        t["train.learning_rate"] = [](RunConfig& c, const std::string& v) { c.train.learning_rate = to_double(v); };
        t["train.rollouts_per_trace"] = [](RunConfig& c, const std::string& v) { c.train.rollouts_per_trace = to_size(v); };
        t["train.traces_per_iteration"] = [](RunConfig& c, const std::string& v) { c.train.traces_per_iteration = to_size(v); };
        t["train.iterations"] = [](RunConfig& c, const std::string& v) { c.train.iterations = to_size(v); };
        t["train.entropy_weight"] = [](RunConfig& c, const std::string& v) { c.train.entropy_weight = to_double(v); };
        t["train.entropy_decay"] = [](RunConfig& c, const std::string& v) { c.train.entropy_decay = to_double(v); };
        t["train.entropy_decay_every"] = [](RunConfig& c, const std::string& v) { c.train.entropy_decay_every = to_size(v); };
        t["train.grad_clip"] = [](RunConfig& c, const std::string& v) { c.train.grad_clip = to_double(v); };
        t["train.baseline"] = [](RunConfig& c, const std::string& v) { c.train.baseline = train::parse_baseline_mode(v); };
        t["train.hidden"] = [](RunConfig& c, const std::string& v) {
            std::vector<std::size_t> layers{3};
            for (const auto& s : split_list(v)) layers.push_back(to_size(s));
            layers.push_back(1);
            c.train.layers = layers;
        };
        t["train.capacity"] = [](RunConfig& c, const std::string& v) { c.train.capacity = to_double(v); };
        t["train.curve_traces"] = [](RunConfig& c, const std::string& v) { c.train.curve_traces = to_size(v); };

        auto& sh = t;
        sh["shaping.initial_points"] = [](RunConfig& c, const std::string& v) { c.shaping.config.initial_points = to_size(v); };
        sh["shaping.batch_size"] = [](RunConfig& c, const std::string& v) { c.shaping.config.batch_size = to_size(v); };
        sh["shaping.rounds"] = [](RunConfig& c, const std::string& v) { c.shaping.config.rounds = to_size(v); };
        sh["shaping.constraint_ratio"] = [](RunConfig& c, const std::string& v) { c.shaping.config.constraint_ratio = to_double(v); };
        sh["shaping.baseline_stall"] = [](RunConfig& c, const std::string& v) {
            const auto d = auto_or_double(v);
            c.shaping.auto_baseline_stall = !d;
            if (d) c.shaping.config.baseline_stall = *d;
        };
        sh["shaping.mc_samples"] = [](RunConfig& c, const std::string& v) { c.shaping.config.mc_samples = to_size(v); };
        sh["shaping.candidates"] = [](RunConfig& c, const std::string& v) { c.shaping.config.candidates = to_size(v); };
        sh["shaping.local_candidates"] = [](RunConfig& c, const std::string& v) { c.shaping.config.local_candidates = to_size(v); };
        sh["shaping.local_scale"] = [](RunConfig& c, const std::string& v) { c.shaping.config.local_scale = to_double(v); };
        sh["shaping.refine_starts"] = [](RunConfig& c, const std::string& v) { c.shaping.config.refine_starts = to_size(v); };
        sh["shaping.refine_evaluations"] = [](RunConfig& c, const std::string& v) { c.shaping.config.refine_evaluations = to_size(v); };
        sh["shaping.replicates"] = [](RunConfig& c, const std::string& v) { c.shaping.config.replicates = to_size(v); };
        sh["shaping.train_iterations"] = [](RunConfig& c, const std::string& v) {
            c.shaping.train_iterations = v == "auto" ? 0 : to_size(v);
        };

        t["translate.points"] = [](RunConfig& c, const std::string& v) { c.translate.points = to_size(v); };
        t["translate.probe_count"] = [](RunConfig& c, const std::string& v) { c.translate.probe_count = to_size(v); };
        t["translate.probe_min"] = [](RunConfig& c, const std::string& v) { c.translate.probe_min = auto_or_double(v); };
        t["translate.probe_max"] = [](RunConfig& c, const std::string& v) { c.translate.probe_max = auto_or_double(v); };
        t["translate.x_min"] = [](RunConfig& c, const std::string& v) { c.translate.x_min = auto_or_double(v); };
        t["translate.x_max"] = [](RunConfig& c, const std::string& v) { c.translate.x_max = auto_or_double(v); };
        t["translate.o_min"] = [](RunConfig& c, const std::string& v) { c.translate.o_min = auto_or_double(v); };
        t["translate.o_max"] = [](RunConfig& c, const std::string& v) { c.translate.o_max = auto_or_double(v); };

        t["eval.resamples"] = [](RunConfig& c, const std::string& v) { c.eval.resamples = to_size(v); };
        t["eval.split"] = [](RunConfig& c, const std::string& v) {
            if (v != "holdout" && v != "all") throw std::invalid_argument("expected holdout or all");
            c.eval.holdout_only = v == "holdout";
        };
        return t;
    }();
    return table;
}

const std::set<std::string> kSections{"paths", "traces", "reward", "train", "shaping", "translate", "eval"};

// Field named by a validation message, qualified with its section.
std::string field_in(const std::string& section, const std::string& message) {
    for (const auto& [key, setter] : setters()) {
        if (!key.starts_with(section + ".")) continue;
        const auto field = key.substr(section.size() + 1);
        if (message.starts_with(field + " ") || message.starts_with(field + "/")) return key;
    }
    return section;
}

}  // namespace

void RunConfig::validate() const {
    const auto check = [](const std::string& section, const auto& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config", 0, field_in(section, e.what()), e.what());
        }
    };
    check("traces", [&] { traces.validate(); });
    check("reward", [&] { reward.validate(); });
    check("train", [&] { train.validate(); });
    check("shaping", [&] {
        auto s = shaping.config;
        if (shaping.auto_baseline_stall) s.baseline_stall = 1.0;
        s.validate();
    });
    check("translate", [&] {
        if (translate.points < 3) throw std::invalid_argument("points must be >= 3");
        if (translate.probe_count < 2) throw std::invalid_argument("probe_count must be >= 2");
    });
    check("eval", [&] {
        if (eval.resamples < 1) throw std::invalid_argument("resamples must be >= 1");
    });
    if (workers < 1) throw ConfigError("config", 0, "workers", "must be >= 1");
}

std::vector<ConfigEntry> read_entries(std::istream& in, const std::string& origin) {
    std::vector<ConfigEntry> out;
    std::string section;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(origin, lineno, "", "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!kSections.contains(section)) throw ConfigError(origin, lineno, section, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin, lineno, "", "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin, lineno, "", "missing key");
        out.push_back({section.empty() ? key : section + "." + key, value, origin, lineno});
    }
    return out;
}

RunConfig build_config(const std::vector<ConfigEntry>& entries) {
    const auto& table = setters();
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : entries) {
        if (!table.contains(e.key)) throw ConfigError(e.origin, e.line, e.key, "unknown key");
        if (!seen.insert({e.origin, e.key}).second) throw ConfigError(e.origin, e.line, e.key, "repeated key");
    }
    RunConfig c;
    const auto apply = [&](const ConfigEntry& e) {
        try {
            table.at(e.key)(c, e.value);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(e.origin, e.line, e.key, ex.what());
        }
    };
    for (const auto& e : entries)
        if (e.key == "traces.profile") apply(e);
    for (const auto& e : entries)
        if (e.key != "traces.profile") apply(e);
    c.validate();
    return c;
}

RunConfig parse_config(std::istream& in, const std::string& origin) { return build_config(read_entries(in, origin)); }

namespace {

void append_overrides(std::vector<ConfigEntry>& entries, const std::vector<std::string>& overrides) {
    if (const char* env = std::getenv("ABRLAB_SEED"); env && *env) entries.push_back({"seed", env, "ABRLAB_SEED", 0});
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("command line", 0, o, "override must be key=value");
        entries.push_back({trim(o.substr(0, eq)), trim(o.substr(eq + 1)), "command line", 0});
    }
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
    auto entries = read_entries(in, path.string());
    append_overrides(entries, overrides);
    return build_config(entries);
}

RunConfig default_config(const std::vector<std::string>& overrides) {
    std::vector<ConfigEntry> entries;
    append_overrides(entries, overrides);
    return build_config(entries);
}

std::vector<std::string> known_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, v] : setters()) keys.push_back(k);
    return keys;
}

}  // namespace abrlab::cli
