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

#ifndef ABRLAB_CLI_HPP
#define ABRLAB_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace abrlab::cli {

/// Runs one subcommand (gen-traces, train, shape, translate, eval, compare).
/// `args` excludes the program name. Prints a one-line summary to `out` and
/// diagnostics to `err`; returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace abrlab::cli

#endif  // ABRLAB_CLI_HPP
