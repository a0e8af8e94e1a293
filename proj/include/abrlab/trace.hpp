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

#ifndef ABRLAB_TRACE_HPP
#define ABRLAB_TRACE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace abrlab::trace {

/// One chunk-download event. Bandwidths in kbps, times in seconds, sizes in
/// kilobits (one per encoding, strictly increasing).
struct TraceRecord {
    double prediction = 0.0;
    double measured = 0.0;
    double elapsed = 0.0;
    std::vector<double> sizes;

    bool operator==(const TraceRecord&) const = default;
};

/// Throws std::invalid_argument when a record breaks its invariants.
void validate_record(const TraceRecord& record);

/// One watched session: immutable after construction.
class Trace {
public:
    Trace(std::string id, double chunk_duration, std::vector<TraceRecord> records);

    const std::string& id() const noexcept { return id_; }
    double chunk_duration() const noexcept { return chunk_duration_; }
    const std::vector<TraceRecord>& records() const noexcept { return records_; }
    const TraceRecord& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }
    std::size_t encodings() const noexcept { return records_.front().sizes.size(); }

    /// Nominal kbps per encoding: the per-encoding median of size / chunk
    /// duration over the session. Files carry sizes only, so the ladder is
    /// always derived from them.
    const std::vector<double>& ladder() const noexcept { return ladder_; }

    double mean_measured() const;
    double watch_time() const noexcept { return chunk_duration_ * static_cast<double>(records_.size()); }

    bool operator==(const Trace& other) const {
        return id_ == other.id_ && chunk_duration_ == other.chunk_duration_ && records_ == other.records_;
    }

private:
    std::string id_;
    double chunk_duration_;
    std::vector<TraceRecord> records_;
    std::vector<double> ladder_;
};

enum class Split { train, holdout };

/// Seeded train/holdout assignment; round(holdout_fraction * n) traces go
/// to holdout. Depends only on (n, fraction, seed).
std::vector<Split> assign_split(std::size_t n, double holdout_fraction, std::uint64_t seed);

class TraceSet {
public:
    TraceSet() = default;
    TraceSet(std::vector<Trace> traces, std::vector<Split> split);

    const std::vector<Trace>& traces() const noexcept { return traces_; }
    const Trace& operator[](std::size_t i) const { return traces_[i]; }
    std::size_t size() const noexcept { return traces_.size(); }
    bool empty() const noexcept { return traces_.empty(); }
    Split split(std::size_t i) const { return split_[i]; }
    const std::vector<Split>& splits() const noexcept { return split_; }

    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> holdout_indices() const;

    /// Sub-set holding the selected traces, all marked with `as`.
    TraceSet subset(std::span<const std::size_t> indices, Split as) const;
    TraceSet holdout() const { return subset(holdout_indices(), Split::holdout); }
    TraceSet train() const { return subset(train_indices(), Split::train); }

    bool operator==(const TraceSet&) const = default;

private:
    std::vector<Trace> traces_;
    std::vector<Split> split_;
};

/// Parse failure carrying the 1-based line number (0 when not line-specific).
class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

TraceSet read_traces(std::istream& in, double holdout_fraction, std::uint64_t seed);
TraceSet load_traces(const std::filesystem::path& path, double holdout_fraction, std::uint64_t seed);
void write_traces(std::ostream& out, const TraceSet& traces);
void write_traces(const std::filesystem::path& path, const TraceSet& traces);

/// Harmonic mean of the last min(k, |history|) measurements.
double predict_bandwidth(std::span<const double> history, std::size_t k = 5);

enum class Profile { slow, mixed, fast };

Profile parse_profile(const std::string& name);
std::string to_string(Profile profile);

/// One regime of the Markov-modulated throughput process. Per-chunk
/// throughput is log-normal with the given mean and log-space deviation.
struct BandwidthState {
    double mean_kbps = 1000.0;
    double sigma = 0.3;
};

struct SyntheticTraceConfig {
    std::size_t count = 100;
    std::vector<double> ladder_kbps{300, 750, 1200, 1850, 2850, 4300};
    double chunk_duration = 2.0;
    std::vector<BandwidthState> states;
    /// Probability of remaining in the current regime for the next chunk;
    /// otherwise jump uniformly to another regime.
    double stay_probability = 0.9;
    /// Log-space deviation of a per-trace multiplicative scale (mean one);
    /// drives cross-trace bandwidth variance.
    double trace_scale_sigma = 0.0;
    /// Watch time in chunks: min_chunks + geometric, capped at max_chunks.
    double mean_chunks = 40.0;
    std::size_t min_chunks = 5;
    std::size_t max_chunks = 200;
    double size_jitter = 0.05;
    std::size_t predictor_window = 5;
    double holdout_fraction = 0.2;
    Profile profile = Profile::mixed;

    static SyntheticTraceConfig for_profile(Profile profile);

    std::size_t encodings() const noexcept { return ladder_kbps.size(); }

    /// Stationary mean throughput of the process (kbps).
    double configured_mean_kbps() const;

    void validate() const;
};

TraceSet generate_synthetic(const SyntheticTraceConfig& config, std::uint64_t seed);

}  // namespace abrlab::trace

#endif  // ABRLAB_TRACE_HPP
