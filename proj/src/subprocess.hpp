// Copyright 2026 The sopt Authors. All rights reserved.
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

#ifndef SOPT_SUBPROCESS_HPP
#define SOPT_SUBPROCESS_HPP

#include <string>
#include <vector>

namespace sopt {

struct ExecResult {
  int ExitCode = -1;
  bool TimedOut = false;
  bool SpawnFailed = false;
  std::string Out;
  std::string Err;
};

// Runs Path with Args, feeding Input on stdin and collecting stdout/stderr.
// The child runs in its own process group; on timeout the group is killed.
ExecResult runProcess(const std::string &Path,
                      const std::vector<std::string> &Args,
                      const std::string &Input, unsigned TimeoutMillis);

} // namespace sopt

#endif // SOPT_SUBPROCESS_HPP
