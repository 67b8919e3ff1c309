// Copyright 2026 The gendfl Authors
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

// Command-line surface of the `gendfl` tool.
//
// Exit codes: 0 success, 1 hard failure (I/O, schema, solver, a failed
// theory check), 2 usage or configuration error.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gendfl::cli {

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gendfl::cli
