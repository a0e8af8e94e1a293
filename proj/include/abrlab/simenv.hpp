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

#ifndef ABRLAB_SIMENV_HPP
#define ABRLAB_SIMENV_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "abrlab/common.hpp"
#include "abrlab/trace.hpp"

namespace abrlab::sim {

inline constexpr double kDefaultCapacity = 30.0;

struct SessionState {
    double buffer = 0.0;  ///< seconds of video buffered
    std::size_t cursor = 0;  ///< next trace record
    std::size_t chunk_index = 0;
    double capacity = kDefaultCapacity;
};

/// What the agent sees before choosing the next chunk's encoding.
struct Observation {
    double prediction = 0.0;  ///< kbps
    double buffer = 0.0;      ///< seconds
    std::vector<double> sizes;  ///< kilobits per encoding

    bool operator==(const Observation&) const = default;
};

struct StepOutcome {
    double bitrate = 0.0;        ///< nominal kbps of the chosen encoding
    double download_time = 0.0;  ///< seconds
    double stall_time = 0.0;     ///< seconds
    bool stalled = false;
    double capacity_wait = 0.0;  ///< seconds spent draining over-capacity buffer
    double buffer_before = 0.0;
    double buffer_after = 0.0;

    bool operator==(const StepOutcome&) const = default;
};

struct StepResult {
    SessionState state;
    std::optional<Observation> next;  ///< empty once the trace is exhausted
    StepOutcome outcome;
};

struct TrajectoryStep {
    Observation observation;
    std::size_t action = 0;
    StepOutcome outcome;

    bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    bool terminal = false;

    std::size_t size() const noexcept { return steps.size(); }
    bool operator==(const Trajectory&) const = default;
};

/// Decision function: observation in, encoding index out. Stochastic
/// policies draw from the supplied engine only.
using DecisionFn = std::function<std::size_t(const Observation&, Rng&)>;

Observation observe(const SessionState& state, const trace::Trace& trace);

std::pair<SessionState, Observation> reset(const trace::Trace& trace, double capacity = kDefaultCapacity);

/// Downloads chunk `state.cursor` at encoding `action`:
///   download = size / measured
///   stall    = max(0, download - buffer)
///   buffer   = max(0, buffer - download) + chunk_duration
/// Any excess over capacity is drained as capacity_wait before the next
/// download, without consuming a trace record.
StepResult step(const SessionState& state, std::size_t action, const trace::Trace& trace);

Trajectory run_session(const DecisionFn& policy, const trace::Trace& trace, double capacity, Rng& rng);

/// `<chunk_idx> <action> <bitrate_kbps> <download_s> <stall_s> <buffer_s>` per step.
void dump_trajectory(std::ostream& out, const Trajectory& trajectory);

}  // namespace abrlab::sim

#endif  // ABRLAB_SIMENV_HPP
