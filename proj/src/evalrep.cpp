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

#include "abrlab/evalrep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "abrlab/common.hpp"

namespace abrlab::evalrep {

namespace {

constexpr const char* kMetricsHeader = "session\tmean_bitrate\tstall_rate\tstall_count\twatch_time\tmean_bandwidth";

}  // namespace

SessionMetrics session_metrics(const sim::Trajectory& trajectory, const trace::Trace& trace) {
    SessionMetrics m;
    m.session = trace.id();
    double bitrate = 0.0;
    double stall = 0.0;
    for (const auto& s : trajectory.steps) {
        bitrate += s.outcome.bitrate;
        stall += s.outcome.stall_time;
        if (s.outcome.stalled) ++m.stall_count;
    }
    const auto n = static_cast<double>(trajectory.size());
    m.mean_bitrate = n > 0 ? bitrate / n : 0.0;
    m.watch_time = trace.chunk_duration() * n;
    m.stall_rate = m.watch_time > 0 ? stall / (m.watch_time / 60.0) : 0.0;
    m.mean_bandwidth = trace.mean_measured();
    return m;
}

std::uint64_t session_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, {0xe7a1ull, index}); }

std::vector<SessionMetrics> evaluate(const sim::DecisionFn& policy, const trace::TraceSet& traces, double capacity,
                                     std::uint64_t seed, std::size_t workers) {
    if (traces.empty()) throw std::invalid_argument("evaluate: no traces");
    std::vector<SessionMetrics> out(traces.size());
    parallel_for(traces.size(), workers, [&](std::size_t i) {
        Rng rng(session_seed(seed, i));
        out[i] = session_metrics(sim::run_session(policy, traces[i], capacity, rng), traces[i]);
    });
    return out;
}

double mean_quality(std::span<const SessionMetrics> metrics) {
    if (metrics.empty()) return 0.0;
    double s = 0.0;
    for (const auto& m : metrics) s += m.mean_bitrate;
    return s / static_cast<double>(metrics.size());
}

double mean_stall_rate(std::span<const SessionMetrics> metrics) {
    if (metrics.empty()) return 0.0;
    double s = 0.0;
    for (const auto& m : metrics) s += m.stall_rate;
    return s / static_cast<double>(metrics.size());
}

Subgroup classify(double mean_bandwidth_kbps) {
    if (mean_bandwidth_kbps < kSlowNetworkKbps) return Subgroup::slow;
    if (mean_bandwidth_kbps > kFastNetworkKbps) return Subgroup::fast;
    return Subgroup::medium;
}

std::string to_string(Subgroup group) {
    switch (group) {
        case Subgroup::slow: return "slow";
        case Subgroup::medium: return "medium";
        case Subgroup::fast: return "fast";
    }
    return "medium";
}

SubgroupPartition subgroup_breakdown(std::span<const SessionMetrics> metrics) {
    SubgroupPartition p;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        switch (classify(metrics[i].mean_bandwidth)) {
            case Subgroup::slow: p.slow.push_back(i); break;
            case Subgroup::medium: p.medium.push_back(i); break;
            case Subgroup::fast: p.fast.push_back(i); break;
        }
    }
    return p;
}

const MetricComparison* ComparisonReport::find(const std::string& metric, const std::string& group) const {
    for (const auto& r : rows)
        if (r.metric == metric && r.group == group) return &r;
    return nullptr;
}

double relative_difference(double sum_a, double sum_b) {
    if (sum_a == 0.0) {
        if (sum_b == 0.0) return 0.0;
        return sum_b > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return sum_b / sum_a - 1.0;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    if (lo == hi || sorted[lo] == sorted[hi]) return sorted[lo];
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

constexpr std::array<const char*, 3> kMetrics{"bitrate", "stall_rate", "stall_count"};

double metric_value(const SessionMetrics& m, std::size_t k) {
    switch (k) {
        case 0: return m.mean_bitrate;
        case 1: return m.stall_rate;
        default: return static_cast<double>(m.stall_count);
    }
}

void compare_group(std::span<const SessionMetrics> a, std::span<const SessionMetrics> b,
                   const std::vector<std::size_t>& members, const std::string& group, std::size_t resamples,
                   std::uint64_t seed, ComparisonReport& report) {
    if (members.empty()) return;
    const std::size_t n = members.size();
    std::array<double, 3> sum_a{}, sum_b{};
    for (std::size_t i : members)
        for (std::size_t k = 0; k < 3; ++k) {
            sum_a[k] += metric_value(a[i], k);
            sum_b[k] += metric_value(b[i], k);
        }

    std::array<std::vector<double>, 3> draws;
    for (auto& d : draws) d.reserve(resamples);
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t r = 0; r < resamples; ++r) {
        std::array<double, 3> ra{}, rb{};
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i = members[pick(rng)];
            for (std::size_t k = 0; k < 3; ++k) {
                ra[k] += metric_value(a[i], k);
                rb[k] += metric_value(b[i], k);
            }
        }
        for (std::size_t k = 0; k < 3; ++k) draws[k].push_back(relative_difference(ra[k], rb[k]));
    }

    for (std::size_t k = 0; k < 3; ++k) {
        MetricComparison row;
        row.metric = kMetrics[k];
        row.group = group;
        row.sessions = n;
        row.point = relative_difference(sum_a[k], sum_b[k]);
        auto& d = draws[k];
        std::sort(d.begin(), d.end());
        if (d.empty()) {
            row.ci95 = row.ci99 = {row.point, row.point};
        } else {
            row.ci95 = {quantile_sorted(d, 0.025), quantile_sorted(d, 0.975)};
            row.ci99 = {quantile_sorted(d, 0.005), quantile_sorted(d, 0.995)};
        }
        row.ci95.lo = std::min(row.ci95.lo, row.point);
        row.ci95.hi = std::max(row.ci95.hi, row.point);
        row.ci99.lo = std::min(row.ci99.lo, row.ci95.lo);
        row.ci99.hi = std::max(row.ci99.hi, row.ci95.hi);
        report.rows.push_back(row);
    }
}

}  // namespace

ComparisonReport compare(std::span<const SessionMetrics> a, std::span<const SessionMetrics> b, std::size_t resamples,
                         std::uint64_t seed) {
    if (a.size() != b.size())
        throw std::invalid_argument("compare: sessions are not paired (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].watch_time != b[i].watch_time || a[i].mean_bandwidth != b[i].mean_bandwidth)
            throw std::invalid_argument("compare: session " + std::to_string(i) +
                                        " differs in watch time or bandwidth; inputs are not paired");
    }
    ComparisonReport report;
    std::vector<std::size_t> all(a.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto parts = subgroup_breakdown(a);
    compare_group(a, b, all, "all", resamples, derive_seed(seed, {0}), report);
    compare_group(a, b, parts.slow, "slow", resamples, derive_seed(seed, {1}), report);
    compare_group(a, b, parts.medium, "medium", resamples, derive_seed(seed, {2}), report);
    compare_group(a, b, parts.fast, "fast", resamples, derive_seed(seed, {3}), report);
    return report;
}

void write_metrics(std::ostream& out, std::span<const SessionMetrics> metrics) {
    out << kMetricsHeader << '\n';
    for (const auto& m : metrics)
        out << m.session << '\t' << format_double(m.mean_bitrate) << '\t' << format_double(m.stall_rate) << '\t'
            << m.stall_count << '\t' << format_double(m.watch_time) << '\t' << format_double(m.mean_bandwidth)
            << '\n';
}

void write_metrics(const std::filesystem::path& path, std::span<const SessionMetrics> metrics) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics '" + path.string() + "'");
    write_metrics(out, metrics);
}

std::vector<SessionMetrics> read_metrics(std::istream& in) {
    std::vector<SessionMetrics> out;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!header) {
            if (line != kMetricsHeader) throw std::runtime_error("metrics: missing header row");
            header = true;
            continue;
        }
        std::istringstream ss(line);
        std::vector<std::string> f;
        for (std::string tok; std::getline(ss, tok, '\t');) f.push_back(tok);
        if (f.size() != 6)
            throw std::runtime_error("metrics line " + std::to_string(lineno) + ": expected 6 columns");
        try {
            SessionMetrics m;
            m.session = f[0];
            m.mean_bitrate = parse_double(f[1]);
            m.stall_rate = parse_double(f[2]);
            m.stall_count = static_cast<std::size_t>(parse_int(f[3]));
            m.watch_time = parse_double(f[4]);
            m.mean_bandwidth = parse_double(f[5]);
            out.push_back(m);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("metrics line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!header) throw std::runtime_error("metrics: empty file");
    return out;
}

std::vector<SessionMetrics> load_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics '" + path.string() + "'");
    return read_metrics(in);
}

void write_report(std::ostream& out, const ComparisonReport& report) {
    out << "metric\tgroup\tpoint\tci95_lo\tci95_hi\tci99_lo\tci99_hi\n";
    for (const auto& r : report.rows)
        out << r.metric << '\t' << r.group << '\t' << format_double(r.point) << '\t' << format_double(r.ci95.lo)
            << '\t' << format_double(r.ci95.hi) << '\t' << format_double(r.ci99.lo) << '\t'
            << format_double(r.ci99.hi) << '\n';
}

void write_report(const std::filesystem::path& path, const ComparisonReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report '" + path.string() + "'");
    write_report(out, report);
}

}  // namespace abrlab::evalrep
