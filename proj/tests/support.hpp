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

#ifndef ABRLAB_TESTS_SUPPORT_HPP
#define ABRLAB_TESTS_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "abrlab/trace.hpp"

namespace abrlab::testing {

// A trace whose every record has the given measured bandwidth and sizes.
inline trace::Trace flat_trace(std::size_t length, double measured, std::vector<double> sizes,
                               double chunk_duration = 2.0, const std::string& id = "flat") {
    std::vector<trace::TraceRecord> records(length, trace::TraceRecord{measured, measured, 0.0, sizes});
    return trace::Trace(id, chunk_duration, std::move(records));
}

inline trace::TraceSet single_split(std::vector<trace::Trace> traces, trace::Split split) {
    std::vector<trace::Split> s(traces.size(), split);
    return trace::TraceSet(std::move(traces), std::move(s));
}

// Random trace with bandwidth in [lo, hi] kbps and a jittered ladder.
inline trace::Trace random_trace(std::mt19937_64& rng, std::size_t length, std::size_t encodings, double lo = 200.0,
                                 double hi = 8000.0) {
    std::uniform_real_distribution<double> bw(lo, hi), u(0.9, 1.1);
    std::vector<trace::TraceRecord> records;
    for (std::size_t t = 0; t < length; ++t) {
        trace::TraceRecord r;
        r.prediction = bw(rng);
        r.measured = bw(rng);
        r.elapsed = 1.0;
        double size = 400.0 * u(rng);
        for (std::size_t k = 0; k < encodings; ++k) {
            r.sizes.push_back(size);
            size *= 1.6 * u(rng);
        }
        records.push_back(r);
    }
    return trace::Trace("random", 2.0, std::move(records));
}

// Two-rung traces where a buffer capacity of one chunk makes every step
// start from the same buffer, so the best action depends only on the
// current bandwidth: fast records afford the top rung, slow ones do not.
inline trace::TraceSet bandit_traces(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> fast(3000.0, 6000.0), slow(600.0, 1500.0), coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> len(20, 40);
    std::vector<trace::Trace> traces;
    std::vector<trace::Split> split;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<trace::TraceRecord> records(len(rng));
        for (auto& r : records) {
            const double bw = coin(rng) < 0.5 ? fast(rng) : slow(rng);
            r = {bw, bw, 1.0, {1000.0, 4000.0}};
        }
        traces.emplace_back("bandit" + std::to_string(i), 2.0, std::move(records));
        split.push_back(i % 4 == 3 ? trace::Split::holdout : trace::Split::train);
    }
    return trace::TraceSet(std::move(traces), std::move(split));
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("abrlab-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace abrlab::testing

#endif  // ABRLAB_TESTS_SUPPORT_HPP
