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

#include "testutil.hpp"

#include <doctest.h>

using namespace sopt;
using namespace sopt::testutil;

TEST_SUITE_BEGIN("solver");

TEST_CASE("runSolver: trivially unsatisfiable query") {
  SolverRunner Runner(solverConfigForTests());
  Query Q;
  Q.Text = "(set-logic QF_BV)\n(assert false)\n(check-sat)\n";
  SolverVerdict V = Runner.run(Q, 60000);
  CHECK(V.K == SolverVerdict::Kind::Unsat);
  CHECK(Runner.callCount() == 1);
}

TEST_CASE("runSolver: sat with a parsed model") {
  SolverRunner Runner(solverConfigForTests());
  Query Q;
  Q.VarOrder = {"x"};
  Q.Text = "(set-logic QF_BV)\n(declare-const x (_ BitVec 8))\n"
           "(assert (= x #x03))\n(check-sat)\n(get-value (x))\n";
  SolverVerdict V = Runner.run(Q, 60000);
  REQUIRE(V.K == SolverVerdict::Kind::Sat);
  CHECK(V.M.Values.at("x") == 3);
}

TEST_CASE("runSolver: wall-clock timeout kills the solver") {
  SolverRunner Runner(solverConfigForTests());
  // 64-bit factoring is far beyond a 1 ms budget.
  Query Q;
  Q.Text =
      "(set-logic QF_BV)\n(declare-const x (_ BitVec 64))\n"
      "(declare-const y (_ BitVec 64))\n"
      "(assert (= (bvmul x y) #xfedcba9876543211))\n"
      "(assert (bvugt x (_ bv1 64)))\n(assert (bvugt y (_ bv1 64)))\n"
      "(check-sat)\n";
  SolverVerdict V = Runner.run(Q, 1);
  CHECK(V.K == SolverVerdict::Kind::Timeout);
}

TEST_CASE("encodeLHS: a bare var is just its symbol") {
  LeftHandSide L = parseLhsOrThrow("%x:i8 = var\ninfer %x\n");
  SmtEncoder Enc;
  LhsEncoding E = encodeLHS(L, UbPolicy::Exploit, Enc);
  CHECK(E.RootVal == "t0");
  CHECK(E.RootDef == "true");
  CHECK(E.Constraint == "true");
  CHECK(E.VarSyms.size() == 1);
}

TEST_CASE("encodeLHS: udiv definedness requires a nonzero divisor") {
  LeftHandSide L =
      parseLhsOrThrow("%x:i8 = var\n%y:i8 = var\n%d:i8 = udiv %x, %y\ninfer %d\n");
  SmtEncoder Enc;
  LhsEncoding E = encodeLHS(L, UbPolicy::Exploit, Enc);
  CHECK(E.RootDef != "true");
  CHECK(Enc.decls().find("(distinct t1 #x00)") != std::string::npos);
}

TEST_CASE("encodeLHS: fig1b constraint narrows the space") {
  auto Opt = parseOptOrThrow(readFixture("fig1b.sopt"));
  SmtEncoder Enc;
  LhsEncoding E = encodeLHS(Opt.Lhs, UbPolicy::Exploit, Enc);
  CHECK(E.Constraint != "true");
  CHECK(E.Constraint.find("bvslt") == std::string::npos); // uses defined syms
  CHECK(Enc.decls().find("bvslt") != std::string::npos);
}

TEST_CASE("equivalence query: fig1b is unsat, fig1a is sat with a=x=y") {
  SolverRunner Runner(solverConfigForTests());
  auto Good = parseOptOrThrow(readFixture("fig1b.sopt"));
  EquivalenceQuery EQ = buildEquivalenceQuery(Good.Lhs, Good.Rhs,
                                              UbPolicy::Exploit);
  CHECK(Runner.run(EQ.Q, 60000).K == SolverVerdict::Kind::Unsat);

  auto Bad = parseOptOrThrow(readFixture("fig1a.sopt"));
  EquivalenceQuery EQ2 = buildEquivalenceQuery(Bad.Lhs, Bad.Rhs,
                                               UbPolicy::Exploit);
  SolverVerdict V = Runner.run(EQ2.Q, 60000);
  REQUIRE(V.K == SolverVerdict::Kind::Sat);
  Env E = envFromModel(V.M, EQ2.VarSyms, EQ2.BlockSyms);
  // The only way to break the unconditioned optimization is a == x == y.
  std::vector<Inst *> Vars = lhsVars(Bad.Lhs);
  CHECK(E.Vars.at(Vars[0]) == E.Vars.at(Vars[2])); // x == a
  CHECK(E.Vars.at(Vars[1]) == E.Vars.at(Vars[2])); // y == a
}

TEST_CASE("reflexivity: x vs x is unsat") {
  SolverRunner Runner(solverConfigForTests());
  LeftHandSide L = parseLhsOrThrow("%x:i8 = var\ninfer %x\n");
  RightHandSide R{L.Root};
  EquivalenceQuery EQ = buildEquivalenceQuery(L, R, UbPolicy::Exploit);
  CHECK(Runner.run(EQ.Q, 60000).K == SolverVerdict::Kind::Unsat);
}

TEST_CASE("query text is deterministic") {
  auto Opt = parseOptOrThrow(readFixture("fig3c.sopt"));
  EquivalenceQuery A = buildEquivalenceQuery(Opt.Lhs, Opt.Rhs, UbPolicy::Exploit);
  EquivalenceQuery B = buildEquivalenceQuery(Opt.Lhs, Opt.Rhs, UbPolicy::Exploit);
  CHECK(A.Q.Text == B.Q.Text);
  auto Opt2 = parseOptOrThrow(readFixture("fig3c.sopt"));
  EquivalenceQuery C =
      buildEquivalenceQuery(Opt2.Lhs, Opt2.Rhs, UbPolicy::Exploit);
  CHECK(A.Q.Text == C.Q.Text); // independent of node addresses
}

TEST_CASE("selector encoding: blocks admit exactly numPreds choices") {
  // A 3-pred phi whose arms are distinct constants: ask for an env per arm.
  std::string Text = "%0 = block 3\n%1:i4 = var\n"
                     "%2:i4 = phi %0, 1:i4, 2:i4, 3:i4\ninfer %2\n";
  LeftHandSide L = parseLhsOrThrow(Text);
  SolverRunner Runner(solverConfigForTests());
  for (uint64_t Want = 1; Want <= 3; ++Want) {
    SmtEncoder Enc;
    LhsEncoding E = encodeLHS(L, UbPolicy::Exploit, Enc);
    Query Q;
    Q.Text = "(set-logic QF_BV)\n" + Enc.decls() +
             "(assert " + Enc.selectorRange() + ")\n" +
             "(assert (= " + E.RootVal + " " + smtBvLiteral(Want, 4) + "))\n" +
             "(check-sat)\n";
    for (const auto &[Sym, B] : Enc.blockSymbols())
      Q.VarOrder.push_back(Sym);
    Q.Text += "(get-value (" + Q.VarOrder[0] + "))\n";
    SolverVerdict V = Runner.run(Q, 60000);
    REQUIRE(V.K == SolverVerdict::Kind::Sat);
    Env Env_ = envFromModel(V.M, {}, Enc.blockSymbols());
    CHECK(Env_.BlockChoices.begin()->second == Want - 1);
  }
  // no env makes the phi yield 4
  SmtEncoder Enc;
  LhsEncoding E = encodeLHS(L, UbPolicy::Exploit, Enc);
  Query Q;
  Q.Text = "(set-logic QF_BV)\n" + Enc.decls() + "(assert " +
           Enc.selectorRange() + ")\n(assert (= " + E.RootVal + " " +
           smtBvLiteral(4, 4) + "))\n(check-sat)\n";
  CHECK(Runner.run(Q, 60000).K == SolverVerdict::Kind::Unsat);
}

TEST_CASE("encoding agrees with the interpreter on random small DAGs") {
  OracleBatcher Batcher(solverConfigForTests());
  DagGen Gen(2025);
  DagGenOptions Opt;
  Opt.MaxWidth = 4;
  Opt.MaxInsts = 6;
  Opt.MaxTotalInputBits = 10;
  for (int I = 0; I < 250; ++I) {
    LeftHandSide L = Gen.randomLhs(Opt);
    REQUIRE(typecheck(L).empty());
    std::vector<Env> Envs = allEnvs(L, 4);
    for (const Env &E : Envs)
      Batcher.add(L, E);
  }
  Batcher.flush();
  CHECK(Batcher.stats().Checked >= 700);
  CHECK(Batcher.stats().Disagreements == 0);
  for (const std::string &S : Batcher.stats().Samples)
    MESSAGE("disagreement on:\n" << S);
}

TEST_SUITE_END();
