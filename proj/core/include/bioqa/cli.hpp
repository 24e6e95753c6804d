// Copyright 2026 The bioqa Authors.
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

#ifndef BIOQA_CLI_HPP_
#define BIOQA_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace bioqa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand: ingest, infer, score, submit or serve-mock.
// args[0] is the program name. Returns the process exit code.
int Dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int Main(int argc, char** argv);

}  // namespace bioqa::cli

#endif  // BIOQA_CLI_HPP_
