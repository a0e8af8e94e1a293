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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "abrlab/evalrep.hpp"
#include "abrlab/policy.hpp"
#include "support.hpp"

using namespace abrlab;
using namespace abrlab::evalrep;

namespace {

SessionMetrics session(double bitrate, double stall_rate, std::size_t count, double bandwidth, double watch = 60.0) {
    return {"s", bitrate, stall_rate, count, watch, bandwidth};
}

std::vector<SessionMetrics> random_sessions(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> br(300, 4000), st(0, 5), bw(100, 20000);
    std::vector<SessionMetrics> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = st(rng);
        out.push_back({"s" + std::to_string(i), br(rng), s, static_cast<std::size_t>(s * 2) + 1, 60.0, bw(rng)});
    }
    return out;
}

const sim::DecisionFn lowest = [](const sim::Observation&, Rng&) { return std::size_t{0}; };

}  // namespace

TEST_CASE("single rung sessions report that rung") {
    const auto traces = testing::single_split(
        {testing::flat_trace(5, 800, {1000}), testing::flat_trace(3, 5000, {1000})}, trace::Split::holdout);
    const auto m = evaluate(lowest, traces, 30.0, 1);
    REQUIRE(m.size() == 2);
    for (const auto& s : m) CHECK(s.mean_bitrate == doctest::Approx(500.0));
    CHECK(m[0].watch_time == 10.0);
    CHECK(m[1].watch_time == 6.0);
    CHECK(m[0].mean_bandwidth == 800.0);
}

TEST_CASE("stall metrics by hand") {
    // 1000 kbit chunks at 500 kbps: 2 s downloads. From empty: stall 2, then
    // the buffer holds exactly 2 s each step, so no further stalls.
    const auto t = testing::flat_trace(3, 500, {1000, 3000});
    Rng rng(1);
    const auto m = session_metrics(sim::run_session(lowest, t, 30.0, rng), t);
    CHECK(m.stall_count == 1);
    CHECK(m.stall_rate == doctest::Approx(2.0 / (6.0 / 60.0)));
}

TEST_CASE("a primed buffer gives a zero-stall session") {
    // Three records where the lowest rung downloads in 1 s; starting with
    // 2 s buffered, the buffer never drops below 1 s.
    const auto t = testing::flat_trace(3, 1000, {1000, 4000});
    sim::SessionState s;
    s.buffer = 2.0;
    sim::Trajectory traj;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto obs = sim::observe(s, t);
        const auto r = sim::step(s, 0, t);
        traj.steps.push_back({obs, 0, r.outcome});
        s = r.state;
    }
    // Buffer: 2 -> 3 -> 4 -> 5.
    CHECK(s.buffer == doctest::Approx(5.0));
    const auto m = session_metrics(traj, t);
    CHECK(m.stall_rate == 0.0);
    CHECK(m.stall_count == 0);
}

TEST_CASE("evaluation is deterministic per seed") {
    std::mt19937_64 gen(2);
    std::vector<trace::Trace> ts;
    for (int i = 0; i < 6; ++i) ts.push_back(testing::random_trace(gen, 15, 4));
    const auto traces = testing::single_split(ts, trace::Split::holdout);
    const auto p = policy::init_params({3, 8, 1}, 1);
    const auto d = policy::stochastic_decision(p, {});
    CHECK(evaluate(d, traces, 30.0, 5) == evaluate(d, traces, 30.0, 5));
    CHECK(evaluate(d, traces, 30.0, 5, 3) == evaluate(d, traces, 30.0, 5, 1));
    for (const auto& m : evaluate(d, traces, 30.0, 5)) CHECK((m.stall_rate > 0.0) == (m.stall_count > 0));
}

TEST_CASE("subgroup thresholds") {
    CHECK(classify(400.0) == Subgroup::slow);
    CHECK(classify(499.999) == Subgroup::slow);
    CHECK(classify(500.0) == Subgroup::medium);
    CHECK(classify(10000.0) == Subgroup::medium);
    CHECK(classify(10001.0) == Subgroup::fast);
    const auto ms = random_sessions(200, 3);
    const auto parts = subgroup_breakdown(ms);
    std::vector<int> seen(ms.size());
    for (auto* g : {&parts.slow, &parts.medium, &parts.fast})
        for (std::size_t i : *g) ++seen[i];
    for (int c : seen) CHECK(c == 1);
    for (std::size_t i : parts.slow) CHECK(ms[i].mean_bandwidth < 500.0);
    for (std::size_t i : parts.fast) CHECK(ms[i].mean_bandwidth > 10000.0);
}

TEST_CASE("identical inputs compare to zero") {
    const auto a = random_sessions(50, 4);
    const auto report = compare(a, a, 500, 1);
    for (const auto& r : report.rows) {
        CHECK(r.point == 0.0);
        CHECK(r.ci95.lo == 0.0);
        CHECK(r.ci99.hi == 0.0);
    }
    CHECK(report.find("bitrate", "all") != nullptr);
    CHECK(report.find("bitrate", "nope") == nullptr);
}

TEST_CASE("uniform scaling is a ten percent gain") {
    const auto a = random_sessions(80, 5);
    auto b = a;
    for (auto& s : b) s.mean_bitrate *= 1.10;
    const auto report = compare(a, b, 1000, 2);
    const auto* row = report.find("bitrate", "all");
    REQUIRE(row != nullptr);
    CHECK(row->point == doctest::Approx(0.10));
    CHECK(row->ci95.lo == doctest::Approx(0.10));
    CHECK(row->ci99.hi == doctest::Approx(0.10));
    CHECK(row->sessions == 80);
}

TEST_CASE("bootstrap intervals") {
    const auto a = random_sessions(120, 6);
    auto b = random_sessions(120, 7);
    for (std::size_t i = 0; i < a.size(); ++i) {
        b[i].watch_time = a[i].watch_time;
        b[i].mean_bandwidth = a[i].mean_bandwidth;
    }
    const auto r1 = compare(a, b, 2000, 9);
    const auto r2 = compare(a, b, 2000, 9);
    REQUIRE(r1.rows.size() == r2.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        const auto& r = r1.rows[i];
        CHECK(r.point == r2.rows[i].point);
        CHECK(r.ci95.lo == r2.rows[i].ci95.lo);
        CHECK(r.ci99.hi == r2.rows[i].ci99.hi);
        CHECK(r.ci99.lo <= r.ci95.lo);
        CHECK(r.ci95.lo <= r.point);
        CHECK(r.point <= r.ci95.hi);
        CHECK(r.ci95.hi <= r.ci99.hi);
    }
    const auto r3 = compare(a, b, 2000, 10);
    CHECK(r3.find("bitrate", "all")->ci95.lo != r1.find("bitrate", "all")->ci95.lo);
}

TEST_CASE("sessions that all improve give positive intervals") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> up(1e-3, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_sessions(40, 100 + trial);
        auto b = a;
        for (auto& s : b) {
            s.mean_bitrate += up(rng);
            s.stall_rate += up(rng);
            s.stall_count += 1;
        }
        const auto report = compare(a, b, 500, static_cast<std::uint64_t>(trial));
        for (const auto& r : report.rows) {
            CHECK(r.point > 0.0);
            CHECK(r.ci95.lo > 0.0);
            CHECK(r.ci99.lo > 0.0);
        }
    }
}

TEST_CASE("unpaired inputs are rejected") {
    const auto a = random_sessions(10, 1);
    auto b = random_sessions(9, 1);
    CHECK_THROWS_AS(compare(a, b), std::invalid_argument);
    b = a;
    b[3].mean_bandwidth += 1.0;
    CHECK_THROWS_AS(compare(a, b), std::invalid_argument);
}

TEST_CASE("relative difference and quantiles") {
    CHECK(relative_difference(100.0, 110.0) == doctest::Approx(0.10));
    CHECK(relative_difference(0.0, 0.0) == 0.0);
    CHECK(std::isinf(relative_difference(0.0, 1.0)));
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("metrics and reports serialize") {
    const auto a = random_sessions(5, 2);
    std::stringstream ss;
    write_metrics(ss, a);
    CHECK(read_metrics(ss) == a);
    std::stringstream rs;
    write_report(rs, compare(a, a, 10, 1));
    std::string header;
    std::getline(rs, header);
    CHECK(header == "metric\tgroup\tpoint\tci95_lo\tci95_hi\tci99_lo\tci99_hi");
    std::stringstream bad("session\tmean_bitrate\n");
    CHECK_THROWS(read_metrics(bad));
}
