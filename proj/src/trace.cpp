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

#include "abrlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "abrlab/common.hpp"

namespace abrlab::trace {

namespace {

bool finite(double v) { return std::isfinite(v); }

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool blank(std::string_view line) { return split_ws(line).empty(); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void validate_record(const TraceRecord& r) {
    if (!finite(r.prediction) || r.prediction <= 0.0)
        throw std::invalid_argument("prediction must be positive");
    if (!finite(r.measured) || r.measured <= 0.0) throw std::invalid_argument("measured bandwidth must be positive");
    if (!finite(r.elapsed) || r.elapsed < 0.0) throw std::invalid_argument("elapsed time must be non-negative");
    if (r.sizes.empty()) throw std::invalid_argument("record has no encodings");
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
        if (!finite(r.sizes[i]) || r.sizes[i] <= 0.0) throw std::invalid_argument("chunk sizes must be positive");
        if (i > 0 && !(r.sizes[i] > r.sizes[i - 1]))
            throw std::invalid_argument("chunk sizes must be strictly increasing");
    }
}

Trace::Trace(std::string id, double chunk_duration, std::vector<TraceRecord> records)
    : id_(std::move(id)), chunk_duration_(chunk_duration), records_(std::move(records)) {
    if (!finite(chunk_duration_) || chunk_duration_ <= 0.0)
        throw std::invalid_argument("chunk duration must be positive");
    if (records_.empty()) throw std::invalid_argument("trace '" + id_ + "' has no records");
    const std::size_t m = records_.front().sizes.size();
    for (const auto& r : records_) {
        validate_record(r);
        if (r.sizes.size() != m) throw std::invalid_argument("inconsistent encoding count within trace '" + id_ + "'");
    }
    ladder_.resize(m);
    std::vector<double> column(records_.size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t t = 0; t < records_.size(); ++t) column[t] = records_[t].sizes[i] / chunk_duration_;
        ladder_[i] = median(column);
    }
}

double Trace::mean_measured() const {
    double sum = 0.0;
    for (const auto& r : records_) sum += r.measured;
    return sum / static_cast<double>(records_.size());
}

std::vector<Split> assign_split(std::size_t n, double holdout_fraction, std::uint64_t seed) {
    if (!(holdout_fraction >= 0.0 && holdout_fraction <= 1.0))
        throw std::invalid_argument("split fraction must lie in [0, 1]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {0x5b117ull}));
    std::shuffle(order.begin(), order.end(), rng);
    const auto holdout = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
    std::vector<Split> split(n, Split::train);
    for (std::size_t i = 0; i < holdout; ++i) split[order[i]] = Split::holdout;
    return split;
}

TraceSet::TraceSet(std::vector<Trace> traces, std::vector<Split> split)
    : traces_(std::move(traces)), split_(std::move(split)) {
    if (traces_.size() != split_.size()) throw std::invalid_argument("split assignment size mismatch");
}

std::vector<std::size_t> TraceSet::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split_.size(); ++i)
        if (split_[i] == Split::train) out.push_back(i);
    return out;
}

std::vector<std::size_t> TraceSet::holdout_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split_.size(); ++i)
        if (split_[i] == Split::holdout) out.push_back(i);
    return out;
}

TraceSet TraceSet::subset(std::span<const std::size_t> indices, Split as) const {
    std::vector<Trace> traces;
    traces.reserve(indices.size());
    for (std::size_t i : indices) traces.push_back(traces_.at(i));
    return TraceSet(std::move(traces), std::vector<Split>(indices.size(), as));
}

TraceFormatError::TraceFormatError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

TraceSet read_traces(std::istream& in, double holdout_fraction, std::uint64_t seed) {
    std::vector<Trace> traces;
    std::vector<TraceRecord> records;
    std::size_t encodings = 0;
    double chunk_duration = 0.0;
    std::size_t header_line = 0;
    bool in_session = false;

    auto finish = [&] {
        if (!in_session) return;
        if (records.empty()) throw TraceFormatError(header_line, "session has no records");
        try {
            traces.emplace_back("session-" + std::to_string(traces.size()), chunk_duration, std::move(records));
        } catch (const std::invalid_argument& e) {
            throw TraceFormatError(header_line, e.what());
        }
        records.clear();
        in_session = false;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) {
            finish();
            continue;
        }
        const auto tokens = split_ws(line);
        if (tokens.front().starts_with("#")) {
            finish();
            if (tokens.size() < 2 || tokens[0] != "#abrtrace" || tokens[1] != "v1")
                throw TraceFormatError(lineno, "expected '#abrtrace v1' header");
            encodings = 0;
            chunk_duration = 0.0;
            for (std::size_t k = 2; k < tokens.size(); ++k) {
                const auto eq = tokens[k].find('=');
                if (eq == std::string_view::npos) throw TraceFormatError(lineno, "malformed header field");
                const auto key = tokens[k].substr(0, eq);
                const auto value = tokens[k].substr(eq + 1);
                try {
                    if (key == "encodings") {
                        const auto m = parse_int(value);
                        if (m < 1) throw std::invalid_argument("encodings must be >= 1");
                        encodings = static_cast<std::size_t>(m);
                    } else if (key == "chunk_duration") {
                        chunk_duration = parse_double(value);
                    } else {
                        throw std::invalid_argument("unknown header field '" + std::string(key) + "'");
                    }
                } catch (const std::invalid_argument& e) {
                    throw TraceFormatError(lineno, e.what());
                }
            }
            if (encodings == 0) throw TraceFormatError(lineno, "header lacks encodings");
            if (!(chunk_duration > 0.0)) throw TraceFormatError(lineno, "header lacks a positive chunk_duration");
            header_line = lineno;
            in_session = true;
            continue;
        }
        if (!in_session) throw TraceFormatError(lineno, "record outside of a session (missing header)");
        if (tokens.size() < 4) throw TraceFormatError(lineno, "record needs prediction, measured, elapsed and sizes");
        if (tokens.size() - 3 != encodings)
            throw TraceFormatError(lineno, "inconsistent encoding count: header says " + std::to_string(encodings) +
                                               ", record has " + std::to_string(tokens.size() - 3));
        TraceRecord r;
        try {
            r.prediction = parse_double(tokens[0]);
            r.measured = parse_double(tokens[1]);
            r.elapsed = parse_double(tokens[2]);
            r.sizes.reserve(encodings);
            for (std::size_t k = 3; k < tokens.size(); ++k) r.sizes.push_back(parse_double(tokens[k]));
            validate_record(r);
        } catch (const std::invalid_argument& e) {
            throw TraceFormatError(lineno, e.what());
        }
        records.push_back(std::move(r));
    }
    finish();
    if (traces.empty()) throw TraceFormatError(0, "no traces");
    auto split = assign_split(traces.size(), holdout_fraction, seed);
    return TraceSet(std::move(traces), std::move(split));
}

TraceSet load_traces(const std::filesystem::path& path, double holdout_fraction, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path.string() + "'");
    return read_traces(in, holdout_fraction, seed);
}

void write_traces(std::ostream& out, const TraceSet& traces) {
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const Trace& t = traces[i];
        if (i > 0) out << '\n';
        out << "#abrtrace v1 encodings=" << t.encodings() << " chunk_duration=" << format_double(t.chunk_duration())
            << '\n';
        for (const auto& r : t.records()) {
            out << format_double(r.prediction) << ' ' << format_double(r.measured) << ' ' << format_double(r.elapsed);
            for (double s : r.sizes) out << ' ' << format_double(s);
            out << '\n';
        }
    }
}

void write_traces(const std::filesystem::path& path, const TraceSet& traces) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file '" + path.string() + "'");
    write_traces(out, traces);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

double predict_bandwidth(std::span<const double> history, std::size_t k) {
    if (history.empty()) throw std::invalid_argument("predict_bandwidth: empty history");
    if (k == 0) throw std::invalid_argument("predict_bandwidth: window must be >= 1");
    const std::size_t n = std::min(k, history.size());
    double inv = 0.0;
    for (std::size_t i = history.size() - n; i < history.size(); ++i) {
        if (!(history[i] > 0.0)) throw std::invalid_argument("predict_bandwidth: bandwidth must be positive");
        inv += 1.0 / history[i];
    }
    return static_cast<double>(n) / inv;
}

Profile parse_profile(const std::string& name) {
    if (name == "slow") return Profile::slow;
    if (name == "mixed") return Profile::mixed;
    if (name == "fast") return Profile::fast;
    throw std::invalid_argument("unknown profile '" + name + "' (expected slow, mixed or fast)");
}

std::string to_string(Profile profile) {
    switch (profile) {
        case Profile::slow: return "slow";
        case Profile::mixed: return "mixed";
        case Profile::fast: return "fast";
    }
    return "mixed";
}

SyntheticTraceConfig SyntheticTraceConfig::for_profile(Profile profile) {
    SyntheticTraceConfig c;
    c.profile = profile;
    switch (profile) {
        case Profile::slow:
            c.states = {{250.0, 0.35}, {550.0, 0.35}};
            c.stay_probability = 0.9;
            c.trace_scale_sigma = 0.2;
            break;
        case Profile::fast:
            c.states = {{6000.0, 0.3}, {15000.0, 0.3}};
            c.stay_probability = 0.9;
            c.trace_scale_sigma = 0.2;
            break;
        case Profile::mixed:
            c.states = {{400.0, 0.4}, {1500.0, 0.35}, {5000.0, 0.3}};
            c.stay_probability = 0.85;
            c.trace_scale_sigma = 0.5;
            c.mean_chunks = 60.0;
            break;
    }
    return c;
}

double SyntheticTraceConfig::configured_mean_kbps() const {
    double sum = 0.0;
    for (const auto& s : states) sum += s.mean_kbps;
    return states.empty() ? 0.0 : sum / static_cast<double>(states.size());
}

void SyntheticTraceConfig::validate() const {
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    if (ladder_kbps.empty()) throw std::invalid_argument("ladder must have at least one rung");
    for (std::size_t i = 0; i < ladder_kbps.size(); ++i) {
        if (!(ladder_kbps[i] > 0.0)) throw std::invalid_argument("ladder rungs must be positive");
        if (i > 0 && !(ladder_kbps[i] > ladder_kbps[i - 1]))
            throw std::invalid_argument("ladder must be strictly increasing");
    }
    if (!(chunk_duration > 0.0)) throw std::invalid_argument("chunk_duration must be positive");
    if (states.empty()) throw std::invalid_argument("bandwidth process needs at least one state");
    for (const auto& s : states)
        if (!(s.mean_kbps > 0.0) || !(s.sigma >= 0.0)) throw std::invalid_argument("invalid bandwidth state");
    if (!(stay_probability >= 0.0 && stay_probability <= 1.0))
        throw std::invalid_argument("stay_probability must lie in [0, 1]");
    if (!(trace_scale_sigma >= 0.0)) throw std::invalid_argument("trace_scale_sigma must be non-negative");
    if (min_chunks < 1 || max_chunks < min_chunks) throw std::invalid_argument("invalid watch-time chunk bounds");
    if (!(mean_chunks >= static_cast<double>(min_chunks)))
        throw std::invalid_argument("mean_chunks must be >= min_chunks");
    if (!(size_jitter >= 0.0 && size_jitter < 1.0)) throw std::invalid_argument("size_jitter must lie in [0, 1)");
    for (std::size_t i = 1; i < ladder_kbps.size(); ++i)
        if (!(ladder_kbps[i] * (1.0 - size_jitter) > ladder_kbps[i - 1] * (1.0 + size_jitter)))
            throw std::invalid_argument("size_jitter too large for the ladder spacing");
    if (predictor_window < 1) throw std::invalid_argument("predictor_window must be >= 1");
    if (!(holdout_fraction >= 0.0 && holdout_fraction <= 1.0))
        throw std::invalid_argument("holdout_fraction must lie in [0, 1]");
}

TraceSet generate_synthetic(const SyntheticTraceConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t m = config.encodings();
    const std::size_t regimes = config.states.size();
    std::vector<Trace> traces;
    traces.reserve(config.count);
    for (std::size_t i = 0; i < config.count; ++i) {
        Rng rng(derive_seed(seed, {0x74ace5ull, i}));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const double ss = config.trace_scale_sigma;
        const double scale = std::exp(-0.5 * ss * ss + ss * normal(rng));

        std::size_t length = config.min_chunks;
        const double extra_mean = config.mean_chunks - static_cast<double>(config.min_chunks);
        if (extra_mean > 0.0) {
            std::geometric_distribution<std::size_t> geom(1.0 / (extra_mean + 1.0));
            length += geom(rng);
        }
        length = std::min(length, config.max_chunks);

        std::size_t state = std::uniform_int_distribution<std::size_t>(0, regimes - 1)(rng);
        auto draw = [&] {
            if (regimes > 1 && unit(rng) >= config.stay_probability) {
                const std::size_t jump = std::uniform_int_distribution<std::size_t>(1, regimes - 1)(rng);
                state = (state + jump) % regimes;
            }
            const auto& s = config.states[state];
            return scale * s.mean_kbps * std::exp(-0.5 * s.sigma * s.sigma + s.sigma * normal(rng));
        };

        // measured[0] is the warm-up download preceding the first chunk.
        std::vector<double> measured(length + 1);
        for (auto& v : measured) v = draw();

        std::vector<TraceRecord> records(length);
        for (std::size_t t = 0; t < length; ++t) {
            TraceRecord& r = records[t];
            const std::span<const double> history(measured.data(), t + 1);
            r.prediction = predict_bandwidth(history, config.predictor_window);
            r.measured = measured[t + 1];
            r.elapsed = config.ladder_kbps.front() * config.chunk_duration / measured[t];
            r.sizes.resize(m);
            for (std::size_t k = 0; k < m; ++k) {
                const double jitter = 1.0 + config.size_jitter * (2.0 * unit(rng) - 1.0);
                r.sizes[k] = config.ladder_kbps[k] * config.chunk_duration * jitter;
            }
        }
        traces.emplace_back("session-" + std::to_string(i), config.chunk_duration, std::move(records));
    }
    auto split = assign_split(traces.size(), config.holdout_fraction, seed);
    return TraceSet(std::move(traces), std::move(split));
}

}  // namespace abrlab::trace
