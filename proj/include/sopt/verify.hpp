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

#ifndef SOPT_VERIFY_HPP
#define SOPT_VERIFY_HPP

#include "sopt/interp.hpp"
#include "sopt/solver.hpp"

namespace sopt {

struct Counterexample {
  Env E;
  EvalResult LhsResult;
  EvalResult RhsResult;
};

struct Verdict {
  enum class Kind { Valid, Invalid, Timeout, Error };
  Kind K = Kind::Error;
  std::optional<Counterexample> CE; // set for Invalid
  std::string Message;              // set for Error
};

// Renders a counterexample as IR comment lines.
std::string formatCounterexample(const LeftHandSide &Lhs,
                                 const Counterexample &CE);

inline constexpr unsigned DefaultCheckTimeoutMillis = 10000;

// Valid iff the equivalence query is unsatisfiable. A sat model is replayed
// through the interpreter before an Invalid verdict is returned; a replay
// mismatch indicates an encoding or solver bug and surfaces as Error.
Verdict check(const CompleteOptimization &Opt, UbPolicy Policy,
              SolverRunner &Runner,
              unsigned TimeoutMillis = DefaultCheckTimeoutMillis);

// Order-preserving; verdicts independent of the parallelism degree.
std::vector<Verdict> checkBatch(const std::vector<CompleteOptimization> &Opts,
                                UbPolicy Policy, SolverRunner &Runner,
                                unsigned Parallelism,
                                unsigned TimeoutMillis = DefaultCheckTimeoutMillis);

} // namespace sopt

#endif // SOPT_VERIFY_HPP
