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

#ifndef ABRLAB_EVALREP_HPP
#define ABRLAB_EVALREP_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "abrlab/simenv.hpp"
#include "abrlab/trace.hpp"

namespace abrlab::evalrep {

struct SessionMetrics {
    std::string session;
    double mean_bitrate = 0.0;  ///< kbps, averaged over chunks
    double stall_rate = 0.0;    ///< stall seconds per minute of watch time
    std::size_t stall_count = 0;
    double watch_time = 0.0;    ///< seconds of video (chunk_duration x chunks)
    double mean_bandwidth = 0.0;  ///< mean measured kbps of the trace

    bool operator==(const SessionMetrics&) const = default;
};

SessionMetrics session_metrics(const sim::Trajectory& trajectory, const trace::Trace& trace);

/// Seed of the session replayed on trace `index` by evaluate(); shared with
/// train::session_rewards so rewards and metrics describe the same sessions.
std::uint64_t session_seed(std::uint64_t seed, std::size_t index);

/// One session per trace; stochastic policies draw from a per-trace stream.
std::vector<SessionMetrics> evaluate(const sim::DecisionFn& policy, const trace::TraceSet& traces, double capacity,
                                     std::uint64_t seed, std::size_t workers = 1);

/// Mean selected bitrate over sessions (each session weighted equally).
double mean_quality(std::span<const SessionMetrics> metrics);
/// Mean stall rate over sessions.
double mean_stall_rate(std::span<const SessionMetrics> metrics);

enum class Subgroup { slow, medium, fast };

inline constexpr double kSlowNetworkKbps = 500.0;
inline constexpr double kFastNetworkKbps = 10000.0;

/// slow: < 500 kbps, fast: > 10 Mbps, medium otherwise (boundaries are medium).
Subgroup classify(double mean_bandwidth_kbps);
std::string to_string(Subgroup group);

struct SubgroupPartition {
    std::vector<std::size_t> slow;
    std::vector<std::size_t> medium;
    std::vector<std::size_t> fast;
};

SubgroupPartition subgroup_breakdown(std::span<const SessionMetrics> metrics);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Relative difference of B against A for one metric within one group.
struct MetricComparison {
    std::string metric;
    std::string group;
    double point = 0.0;
    Interval ci95;
    Interval ci99;
    std::size_t sessions = 0;
};

struct ComparisonReport {
    std::vector<MetricComparison> rows;

    const MetricComparison* find(const std::string& metric, const std::string& group) const;
};

inline constexpr std::size_t kDefaultResamples = 10000;

/// Relative difference sum(b) / sum(a) - 1; 0 when both sums are 0 and
/// +/-inf when only sum(a) is 0.
double relative_difference(double sum_a, double sum_b);

/// Paired percentile bootstrap over sessions for bitrate, stall_rate and
/// stall_count, overall and per subgroup (empty groups omitted). Intervals
/// are widened to contain the point estimate when the percentile interval
/// misses it. Throws std::invalid_argument when the lists are not paired.
ComparisonReport compare(std::span<const SessionMetrics> a, std::span<const SessionMetrics> b,
                         std::size_t resamples = kDefaultResamples, std::uint64_t seed = 1);

/// Type-7 (linear interpolation) quantile of sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

void write_metrics(std::ostream& out, std::span<const SessionMetrics> metrics);
void write_metrics(const std::filesystem::path& path, std::span<const SessionMetrics> metrics);
std::vector<SessionMetrics> read_metrics(std::istream& in);
std::vector<SessionMetrics> load_metrics(const std::filesystem::path& path);

/// `metric group point ci95_lo ci95_hi ci99_lo ci99_hi`, tab separated.
void write_report(std::ostream& out, const ComparisonReport& report);
void write_report(const std::filesystem::path& path, const ComparisonReport& report);

}  // namespace abrlab::evalrep

#endif  // ABRLAB_EVALREP_HPP
