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

#ifndef ABRLAB_CONFIG_HPP
#define ABRLAB_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/shaping.hpp"
#include "abrlab/trace.hpp"
#include "abrlab/train.hpp"
#include "abrlab/translate.hpp"

namespace abrlab::cli {

// Grammar, one statement per line:
//
//   # comment            (also ';'; only whole-line comments)
//   [section]            sections: paths traces reward train shaping translate eval
//   key = value          keys before the first section are global (seed, workers)
//
// Keys are strict: unknown sections or keys and repeated keys are errors.

struct Paths {
    std::string traces = "traces.txt";
    std::string policy = "policy.ckpt";
    std::string linear = "linear.ckpt";
    std::string curve;  ///< learning curve TSV; empty disables
    std::string shaping_log = "shaping.log";
    std::string metrics = "metrics.tsv";
    std::string report = "report.tsv";
};

struct ShapingSettings {
    shaping::ShapingConfig config;
    bool auto_baseline_stall = true;  ///< l_s from the rate-based heuristic
    std::size_t train_iterations = 0;  ///< 0: use train.iterations
};

/// Unset ranges are derived from the trace file (see config_from_traces).
struct TranslateSettings {
    std::size_t points = 2000;
    std::size_t probe_count = 5;
    std::optional<double> probe_min, probe_max, x_min, x_max, o_min, o_max;
};

struct EvalSettings {
    std::size_t resamples = 10000;
    bool holdout_only = true;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    Paths paths;
    trace::SyntheticTraceConfig traces = trace::SyntheticTraceConfig::for_profile(trace::Profile::mixed);
    train::RewardWeights reward;
    train::TrainConfig train;
    ShapingSettings shaping;
    TranslateSettings translate;
    EvalSettings eval;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string origin, std::size_t line, std::string key, const std::string& what);

    const std::string& origin() const noexcept { return origin_; }
    std::size_t line() const noexcept { return line_; }  ///< 0 when not tied to a line
    const std::string& key() const noexcept { return key_; }

private:
    std::string origin_;
    std::size_t line_;
    std::string key_;
};

struct ConfigEntry {
    std::string key;  ///< "section.key", or "key" for globals
    std::string value;
    std::string origin;
    std::size_t line = 0;
};

std::vector<ConfigEntry> read_entries(std::istream& in, const std::string& origin);

/// Applies entries over the defaults (traces.profile first, since it resets
/// the bandwidth process) and validates the result.
RunConfig build_config(const std::vector<ConfigEntry>& entries);

RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");

/// File entries, then ABRLAB_SEED when set, then `overrides`
/// ("section.key=value" strings).
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Overrides applied on top of the defaults, for commands run without a file.
RunConfig default_config(const std::vector<std::string>& overrides = {});

/// Keys accepted by the parser, as "section.key".
std::vector<std::string> known_keys();

}  // namespace abrlab::cli

#endif  // ABRLAB_CONFIG_HPP
