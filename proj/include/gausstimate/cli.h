//
// Copyright 2026 The Gausstimate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef GAUSSTIMATE_CLI_H_
#define GAUSSTIMATE_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace gausstimate {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime or verification failure
inline constexpr int kExitUsage = 2;    // usage, configuration or malformed input

// Environment variable naming the default output directory.
inline constexpr char kOutDirEnv[] = "GAUSSTIMATE_OUT_DIR";

// Runs one command. `args` excludes the program name, e.g.
// {"simulate", "--protocol", "kv2", "--n", "100000"}.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_CLI_H_
