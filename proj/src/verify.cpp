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

#include "sopt/verify.hpp"

#include <atomic>
#include <sstream>
#include <thread>

namespace sopt {

namespace {

// The mismatch condition the equivalence query encodes, replayed concretely.
// Exploit additionally requires the LHS to be defined at the env.
bool replayMismatch(const CompleteOptimization &Opt, UbPolicy Policy,
                    const Env &E) {
  LhsEval L = evalLHS(Opt.Lhs, E);
  if (!L.Constrained)
    return false;
  EvalValue LTotal = evalTotal(Opt.Lhs.Root, E);
  EvalValue RTotal = evalTotal(Opt.Rhs.Root, E);
  if (Policy == UbPolicy::Exploit && !LTotal.defined())
    return false;
  return !RTotal.defined() || LTotal.Val != RTotal.Val;
}

} // namespace

std::string formatCounterexample(const LeftHandSide &Lhs,
                                 const Counterexample &CE) {
  std::ostringstream OS;
  OS << "; counterexample:\n";
  std::vector<Inst *> Vars = lhsVars(Lhs);
  std::vector<Inst *> Blocks = lhsBlocks(Lhs);
  for (size_t I = 0; I < Vars.size(); ++I) {
    auto It = CE.E.Vars.find(Vars[I]);
    OS << ";   var " << I << " (i" << Vars[I]->Width
       << ") = " << (It == CE.E.Vars.end() ? 0 : It->second) << "\n";
  }
  for (size_t I = 0; I < Blocks.size(); ++I) {
    auto It = CE.E.BlockChoices.find(Blocks[I]);
    OS << ";   block " << I
       << " chooses pred " << (It == CE.E.BlockChoices.end() ? 0 : It->second)
       << "\n";
  }
  OS << ";   lhs = " << formatEvalResult(CE.LhsResult)
     << ", rhs = " << formatEvalResult(CE.RhsResult) << "\n";
  return OS.str();
}

Verdict check(const CompleteOptimization &Opt, UbPolicy Policy,
              SolverRunner &Runner, unsigned TimeoutMillis) {
  Verdict V;
  EquivalenceQuery EQ = buildEquivalenceQuery(Opt.Lhs, Opt.Rhs, Policy);
  SolverVerdict SV = Runner.run(EQ.Q, TimeoutMillis);
  switch (SV.K) {
  case SolverVerdict::Kind::Unsat:
    V.K = Verdict::Kind::Valid;
    return V;
  case SolverVerdict::Kind::Timeout:
    V.K = Verdict::Kind::Timeout;
    return V;
  case SolverVerdict::Kind::Error:
    V.K = Verdict::Kind::Error;
    V.Message = SV.Message;
    return V;
  case SolverVerdict::Kind::Sat:
    break;
  }

  Counterexample CE;
  CE.E = envFromModel(SV.M, EQ.VarSyms, EQ.BlockSyms);
  if (!replayMismatch(Opt, Policy, CE.E)) {
    V.K = Verdict::Kind::Error;
    V.Message = "counterexample replay mismatch: the solver model does not "
                "reproduce a difference under the interpreter";
    return V;
  }
  CE.LhsResult = eval(Opt.Lhs.Root, CE.E);
  CE.RhsResult = eval(Opt.Rhs.Root, CE.E);
  V.K = Verdict::Kind::Invalid;
  V.CE = std::move(CE);
  return V;
}

std::vector<Verdict> checkBatch(const std::vector<CompleteOptimization> &Opts,
                                UbPolicy Policy, SolverRunner &Runner,
                                unsigned Parallelism,
                                unsigned TimeoutMillis) {
  std::vector<Verdict> Out(Opts.size());
  if (Opts.empty())
    return Out;
  unsigned NumWorkers =
      std::max(1u, std::min<unsigned>(Parallelism,
                                      static_cast<unsigned>(Opts.size())));
  std::atomic<size_t> NextIdx{0};
  auto Work = [&]() {
    while (true) {
      size_t I = NextIdx.fetch_add(1);
      if (I >= Opts.size())
        return;
      Out[I] = check(Opts[I], Policy, Runner, TimeoutMillis);
    }
  };
  if (NumWorkers == 1) {
    Work();
    return Out;
  }
  std::vector<std::thread> Threads;
  for (unsigned I = 0; I < NumWorkers; ++I)
    Threads.emplace_back(Work);
  for (auto &T : Threads)
    T.join();
  return Out;
}

} // namespace sopt
