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

#include "sopt/synth.hpp"

#include "testutil.hpp"

#include <doctest.h>

using namespace sopt;
using namespace sopt::testutil;

TEST_SUITE_BEGIN("synth");

namespace {

SynthConfig quickConfig() {
  SynthConfig Cfg;
  Cfg.PerLhsTimeoutMillis = 240000;
  Cfg.PerQueryTimeoutMillis = 60000;
  return Cfg;
}

} // namespace

TEST_CASE("x - x folds to the zero constant") {
  SolverRunner Runner(solverConfigForTests());
  LeftHandSide L = canonicalize(
      parseLhsOrThrow("%x:i8 = var\n%s:i8 = sub %x, %x\ninfer %s\n"));
  SynthResult R = synthesize(L, quickConfig(), Runner);
  REQUIRE(R.K == SynthResult::Kind::Found);
  CHECK(R.Cost == 0);
  CHECK(R.Rhs->Root->K == Kind::Const);
  CHECK(R.Rhs->Root->Val == 0);
}

TEST_CASE("adaptWidths: narrow inputs gain zext and sext adapters") {
  auto Pool = std::make_shared<InstPool>();
  LeftHandSide L;
  L.Pool = Pool;
  Inst *A = Pool->var(8);
  Inst *B = Pool->var(32);
  L.Root = Pool->inst(Kind::Add, 32, {Pool->inst(Kind::ZExt, 32, {A}), B});
  ComponentLibrary Lib =
      adaptWidths(L, SynthConfig::defaultComponentSet(), 1, CostModel{});
  CHECK(Lib.DefaultWidth == 32);
  bool HasZext8 = false, HasSext8 = false;
  for (const Component &C : Lib.Comps) {
    if (C.K == Kind::ZExt && C.OpWidths == std::vector<unsigned>{8})
      HasZext8 = true;
    if (C.K == Kind::SExt && C.OpWidths == std::vector<unsigned>{8})
      HasSext8 = true;
  }
  CHECK(HasZext8);
  CHECK(HasSext8);
}

TEST_CASE("adaptWidths: wide inputs with a 1-bit root gain a trunc") {
  auto Pool = std::make_shared<InstPool>();
  LeftHandSide L;
  L.Pool = Pool;
  Inst *A = Pool->var(64);
  L.Root = Pool->inst(Kind::Eq, 1, {A, A});
  ComponentLibrary Lib =
      adaptWidths(L, SynthConfig::defaultComponentSet(), 1, CostModel{});
  CHECK(Lib.DefaultWidth == 64);
  bool HasTruncToRoot = false;
  for (const Component &C : Lib.Comps)
    if (C.K == Kind::Trunc && C.OutWidth == 1)
      HasTruncToRoot = true;
  CHECK(HasTruncToRoot);
}

TEST_CASE("adaptWidths: equal widths need no input adapters") {
  auto Pool = std::make_shared<InstPool>();
  LeftHandSide L;
  L.Pool = Pool;
  Inst *A = Pool->var(8);
  Inst *B = Pool->var(8);
  L.Root = Pool->inst(Kind::Add, 8, {A, B});
  ComponentLibrary Lib = adaptWidths(L, {Kind::Add, Kind::Sub}, 1, CostModel{});
  for (const Component &C : Lib.Comps)
    CHECK(C.K != Kind::ZExt);
  CHECK(Lib.Comps.size() == 2);
  // one constant at the shared width
  CHECK(Lib.ConstComps.size() == 1);
  CHECK(Lib.ConstComps[0].OutWidth == 8);
}

TEST_CASE("findCandidate: empty counterexample set is vacuously sat") {
  SolverRunner Runner(solverConfigForTests());
  LeftHandSide L = canonicalize(parseLhsOrThrow("%x:i8 = var\ninfer %x\n"));
  ComponentLibrary Lib = adaptWidths(L, {Kind::Add}, 1, CostModel{});
  FindResult R = findCandidate(L, Lib.atCostLevel(1), {}, 1,
                               UbPolicy::Exploit, Runner, 60000);
  CHECK(R.K == FindResult::Kind::Sat);
  CHECK(R.Rhs.has_value());
}

TEST_CASE("findCandidate: one constant cannot match two different outputs") {
  SolverRunner Runner(solverConfigForTests());
  LeftHandSide L = canonicalize(parseLhsOrThrow("%x:i8 = var\ninfer %x\n"));
  // constants only: exclude the identity input wiring through the mode
  ComponentLibrary Lib;
  Lib.DefaultWidth = 8;
  Lib.ConstComps.push_back({Kind::Const, 8, {}, 0, false});
  std::vector<Inst *> Vars = lhsVars(L);
  Env E1, E2;
  E1.Vars[Vars[0]] = 3;
  E2.Vars[Vars[0]] = 5;
  FindResult R = findCandidate(L, Lib, {E1, E2}, 0, UbPolicy::Exploit, Runner,
                               60000, {}, SynthMode::ConstantsOnly);
  CHECK(R.K == FindResult::Kind::Unsat);
}

TEST_CASE("findCandidate: and with zero forces the zero constant") {
  SolverRunner Runner(solverConfigForTests());
  LeftHandSide L = canonicalize(
      parseLhsOrThrow("%x:i8 = var\n%a:i8 = and %x, 0:i8\ninfer %a\n"));
  ComponentLibrary Lib;
  Lib.DefaultWidth = 8;
  Lib.ConstComps.push_back({Kind::Const, 8, {}, 0, false});
  std::vector<Inst *> Vars = lhsVars(L);
  Env E;
  E.Vars[Vars[0]] = 7;
  FindResult R = findCandidate(L, Lib, {E}, 0, UbPolicy::Exploit, Runner,
                               60000, {}, SynthMode::ConstantsOnly);
  REQUIRE(R.K == FindResult::Kind::Sat);
  REQUIRE(R.Rhs->Root->K == Kind::Const);
  CHECK(R.Rhs->Root->Val == 0); // and(7, 0) == 0 pins the constant
}

TEST_CASE("normalizeSynthesizedRhs rewrites mul by a power of two") {
  LeftHandSide L = canonicalize(parseLhsOrThrow("%x:i8 = var\ninfer %x\n"));
  Inst *Mul = L.Pool->inst(Kind::Mul, 8,
                           {L.Pool->constant(8, 4), lhsVars(L)[0]});
  RightHandSide R = normalizeSynthesizedRhs(L, RightHandSide{Mul});
  CHECK(R.Root->K == Kind::Shl);
  CHECK(R.Root->Ops[1]->Val == 2);
  // non-powers stay multiplications, with operands in canonical order
  Inst *Mul3 = L.Pool->inst(Kind::Mul, 8,
                            {L.Pool->constant(8, 3), lhsVars(L)[0]});
  RightHandSide R3 = normalizeSynthesizedRhs(L, RightHandSide{Mul3});
  CHECK(R3.Root->K == Kind::Mul);
  CHECK(R3.Root->Ops[1]->K == Kind::Const);
}

TEST_CASE("ConstantsOnly mode never emits opcode nodes") {
  SolverRunner Runner(solverConfigForTests());
  SynthConfig Cfg = quickConfig();
  Cfg.Mode = SynthMode::ConstantsOnly;
  const char *Texts[] = {
      "%x:i8 = var\n%s:i8 = sub %x, %x\ninfer %s\n",
      "%x:i8 = var\n%a:i8 = and %x, 0:i8\ninfer %a\n",
      "%x:i8 = var\n%o:i8 = or %x, 255:i8\ninfer %o\n",
      "%x:i8 = var\n%d:i8 = add %x, 1:i8\ninfer %d\n", // no constant works
  };
  for (const char *T : Texts) {
    LeftHandSide L = canonicalize(parseLhsOrThrow(T));
    SynthResult R = synthesize(L, Cfg, Runner);
    if (R.K == SynthResult::Kind::Found) {
      CHECK(R.Rhs->Root->K == Kind::Const);
      CHECK(R.Cost == 0);
    }
  }
  // the x+1 case must specifically fail
  LeftHandSide L = canonicalize(
      parseLhsOrThrow("%x:i8 = var\n%d:i8 = add %x, 1:i8\ninfer %d\n"));
  CHECK(synthesize(L, Cfg, Runner).K == SynthResult::Kind::NotFound);
}

TEST_CASE("BoolRootsOnly filters wide roots before synthesis") {
  SolverRunner Runner(solverConfigForTests());
  SynthConfig Cfg = quickConfig();
  Cfg.Mode = SynthMode::BoolRootsOnly;
  uint64_t Before = Runner.callCount();
  LeftHandSide Wide = canonicalize(
      parseLhsOrThrow("%x:i8 = var\n%s:i8 = sub %x, %x\ninfer %s\n"));
  CHECK(synthesize(Wide, Cfg, Runner).K == SynthResult::Kind::NotFound);
  CHECK(Runner.callCount() == Before); // filtered without any query
  LeftHandSide Narrow = canonicalize(
      parseLhsOrThrow("%x:i8 = var\n%c:i1 = ult %x, %x\ninfer %c\n"));
  SynthResult R = synthesize(Narrow, Cfg, Runner);
  REQUIRE(R.K == SynthResult::Kind::Found);
  CHECK(R.Rhs->Root->K == Kind::Const);
  CHECK(R.Rhs->Root->Val == 0);
}

TEST_CASE("synthesize finds the fig3 constant at cost zero") {
  SolverRunner Runner(solverConfigForTests());
  auto Opt = parseOptOrThrow(readFixture("fig3c.sopt"));
  LeftHandSide L = canonicalize(Opt.Lhs);
  SynthConfig Cfg = quickConfig();
  Cfg.MaxCost = 0;
  SynthResult R = synthesize(L, Cfg, Runner);
  REQUIRE(R.K == SynthResult::Kind::Found);
  CHECK(R.Cost == 0);
  CHECK(R.Rhs->Root->K == Kind::Const);
  CHECK(R.Rhs->Root->Val == 3);
}

TEST_CASE("every found RHS verifies valid (soundness spot check)") {
  SolverRunner Runner(solverConfigForTests());
  DagGen Gen(5150);
  DagGenOptions Opt;
  Opt.MaxWidth = 4;
  Opt.MaxInsts = 3;
  Opt.MaxTotalInputBits = 8;
  Opt.WithTuples = false;
  Opt.WithDivRem = false;
  SynthConfig Cfg = quickConfig();
  Cfg.MaxCost = 1;
  int Found = 0;
  for (int I = 0; I < 8; ++I) {
    LeftHandSide L = canonicalize(Gen.randomLhs(Opt));
    SynthResult R = synthesize(L, Cfg, Runner);
    if (R.K != SynthResult::Kind::Found)
      continue;
    ++Found;
    Verdict V = check({L, *R.Rhs}, UbPolicy::Exploit, Runner, 30000);
    CHECK(V.K == Verdict::Kind::Valid);
  }
  MESSAGE("found " << Found << " of 8");
}

TEST_SUITE_END();
