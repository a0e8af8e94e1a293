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

#include "abrlab/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace abrlab::sim {

Observation observe(const SessionState& state, const trace::Trace& trace) {
    const auto& record = trace[state.cursor];
    return Observation{record.prediction, state.buffer, record.sizes};
}

std::pair<SessionState, Observation> reset(const trace::Trace& trace, double capacity) {
    if (trace.size() == 0) throw std::invalid_argument("reset: empty trace");
    if (!(capacity > 0.0) || !std::isfinite(capacity)) throw std::invalid_argument("reset: capacity must be positive");
    SessionState state;
    state.capacity = capacity;
    return {state, observe(state, trace)};
}

StepResult step(const SessionState& state, std::size_t action, const trace::Trace& trace) {
    if (state.cursor >= trace.size()) throw std::logic_error("step: session already terminal");
    const auto& record = trace[state.cursor];
    if (action >= record.sizes.size())
        throw std::out_of_range("step: action " + std::to_string(action) + " out of range for " +
                                std::to_string(record.sizes.size()) + " encodings");

    StepResult result;
    StepOutcome& out = result.outcome;
    out.bitrate = trace.ladder()[action];
    out.download_time = record.sizes[action] / record.measured;
    out.buffer_before = state.buffer;
    out.stall_time = std::max(0.0, out.download_time - state.buffer);
    out.stalled = out.stall_time > 0.0;

    double buffer = std::max(0.0, state.buffer - out.download_time) + trace.chunk_duration();
    if (buffer > state.capacity) {
        out.capacity_wait = buffer - state.capacity;
        buffer = state.capacity;
    }
    out.buffer_after = buffer;

    result.state = state;
    result.state.buffer = buffer;
    result.state.cursor = state.cursor + 1;
    result.state.chunk_index = state.chunk_index + 1;
    if (result.state.cursor < trace.size()) result.next = observe(result.state, trace);
    return result;
}

Trajectory run_session(const DecisionFn& policy, const trace::Trace& trace, double capacity, Rng& rng) {
    auto [state, obs] = reset(trace, capacity);
    Trajectory trajectory;
    trajectory.steps.reserve(trace.size());
    std::optional<Observation> current = std::move(obs);
    while (current) {
        const std::size_t action = policy(*current, rng);
        StepResult r = step(state, action, trace);
        trajectory.steps.push_back(TrajectoryStep{std::move(*current), action, r.outcome});
        state = r.state;
        current = std::move(r.next);
    }
    trajectory.terminal = true;
    return trajectory;
}

void dump_trajectory(std::ostream& out, const Trajectory& trajectory) {
    for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
        const auto& s = trajectory.steps[t];
        out << t << ' ' << s.action << ' ' << format_double(s.outcome.bitrate) << ' '
            << format_double(s.outcome.download_time) << ' ' << format_double(s.outcome.stall_time) << ' '
            << format_double(s.outcome.buffer_after) << '\n';
    }
}

}  // namespace abrlab::sim
