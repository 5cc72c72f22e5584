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

TEST_SUITE_BEGIN("ir");

TEST_CASE("opcode enumeration has exactly 51 members") {
  CHECK(NumOpcodes == 51);
  int Count = 0;
  for (int K = 0; K < 256; ++K) {
    Kind Kd = static_cast<Kind>(K);
    if (Kd >= Kind::Add && Kd <= Kind::Ctlz) {
      CHECK(kindFromName(kindName(Kd)) == Kd);
      ++Count;
    }
    if (K > static_cast<int>(Kind::Ctlz))
      break;
  }
  CHECK(Count == 51);
}

TEST_CASE("parses the fig2 optimization with a shl result") {
  auto Opt = parseOptOrThrow(readFixture("fig2c.sopt"));
  CHECK(Opt.Rhs.Root->K == Kind::Shl);
  CHECK(Opt.Rhs.Root->Width == 32);
  CHECK(Opt.Rhs.Root->Ops[0]->K == Kind::Var);
  CHECK(Opt.Rhs.Root->Ops[1]->K == Kind::Const);
  CHECK(Opt.Rhs.Root->Ops[1]->Val == 2);
  CHECK(Opt.Lhs.BPCs.size() == 2);
}

TEST_CASE("parses a minimal var program") {
  ParseResult PR = parseInput("%x:i8 = var\ninfer %x\n");
  REQUIRE(PR.ok());
  CHECK(PR.Lhs->Root->K == Kind::Var);
  CHECK(PR.Lhs->Root->Width == 8);
  CHECK_FALSE(PR.Rhs.has_value());
}

TEST_CASE("zext must widen") {
  ParseResult PR = parseInput("%x:i1 = var\n%y:i1 = zext %x\ninfer %y\n");
  REQUIRE_FALSE(PR.ok());
  CHECK(formatDiagnostics(PR.Diags).find("at least one bit") !=
        std::string::npos);
}

TEST_CASE("parse diagnostics carry positions") {
  ParseResult PR = parseInput("%x:i8 = var\n%y:i8 = bogus %x\ninfer %y\n");
  REQUIRE_FALSE(PR.ok());
  CHECK(PR.Diags[0].Line == 2);
  CHECK(PR.Diags[0].Message.find("unknown opcode") != std::string::npos);
}

TEST_CASE("use before definition is rejected") {
  ParseResult PR = parseInput("%y:i8 = add %x, %x\n%x:i8 = var\ninfer %y\n");
  REQUIRE_FALSE(PR.ok());
  CHECK(formatDiagnostics(PR.Diags).find("referenced before definition") !=
        std::string::npos);
}

TEST_CASE("negative constants are parser sugar for two's complement") {
  ParseResult PR = parseInput("%x:i8 = var\n%y:i8 = add %x, -1:i8\ninfer %y\n");
  REQUIRE(PR.ok());
  // canonicalize puts the constant last, so it is operand 1 either way
  LeftHandSide L = canonicalize(*PR.Lhs);
  CHECK(L.Root->Ops[1]->Val == 255);
  CHECK(printLhs(L).find("255:i8") != std::string::npos);
}

TEST_CASE("round-trips the fig3 left-hand side") {
  std::string Text = readFixture("fig3c.sopt");
  auto Opt = parseOptOrThrow(Text);
  std::string Printed = printOptimization(Opt.Lhs, Opt.Rhs);
  auto Opt2 = parseOptOrThrow(Printed);
  CHECK(printOptimization(Opt2.Lhs, Opt2.Rhs) == Printed);
  CHECK(structurallyEqual(Opt.Lhs, Opt2.Lhs));
}

TEST_CASE("print of a single var LHS is two lines") {
  LeftHandSide L;
  L.Pool = std::make_shared<InstPool>();
  L.Root = L.Pool->var(16);
  CHECK(printLhs(L) == "%0:i16 = var\ninfer %0\n");
}

TEST_CASE("round-trip property over random DAGs") {
  DagGen Gen(12345);
  DagGenOptions Opt;
  Opt.WithPcs = true;
  for (int I = 0; I < 300; ++I) {
    LeftHandSide L = Gen.randomLhs(Opt);
    REQUIRE(typecheck(L).empty());
    std::string Printed = printLhs(L);
    ParseResult PR = parseInput(Printed);
    REQUIRE_MESSAGE(PR.ok(), formatDiagnostics(PR.Diags), Printed);
    CHECK(printLhs(*PR.Lhs) == Printed);
  }
}

TEST_CASE("typecheck rejects mismatched widths") {
  InstPool P;
  auto L = std::make_shared<InstPool>();
  LeftHandSide Lhs;
  Lhs.Pool = L;
  Inst *A = L->var(8);
  Inst *B = L->var(16);
  Lhs.Root = L->inst(Kind::Add, 8, {A, B});
  auto Diags = typecheck(Lhs);
  REQUIRE_FALSE(Diags.empty());
  CHECK(Diags[0].Message.find("must match") != std::string::npos);
}

TEST_CASE("typecheck rejects wide select conditions") {
  auto Pool = std::make_shared<InstPool>();
  LeftHandSide Lhs;
  Lhs.Pool = Pool;
  Inst *C = Pool->var(8);
  Inst *A = Pool->var(8);
  Lhs.Root = Pool->inst(Kind::Select, 8, {C, A, A});
  auto Diags = typecheck(Lhs);
  REQUIRE_FALSE(Diags.empty());
  CHECK(Diags[0].Message.find("one bit") != std::string::npos);
}

TEST_CASE("typecheck rejects bad extractvalue indices") {
  auto Pool = std::make_shared<InstPool>();
  LeftHandSide Lhs;
  Lhs.Pool = Pool;
  Inst *A = Pool->var(8);
  Inst *T = Pool->inst(Kind::SAddWithOverflow, 8, {A, A});
  Lhs.Root = Pool->inst(Kind::ExtractValue, 8, {T, Pool->constant(32, 2)});
  auto Diags = typecheck(Lhs);
  REQUIRE_FALSE(Diags.empty());
  CHECK(Diags[0].Message.find("index") != std::string::npos);
}

TEST_CASE("typecheck rejects phi arity mismatches") {
  auto Pool = std::make_shared<InstPool>();
  LeftHandSide Lhs;
  Lhs.Pool = Pool;
  Inst *B = Pool->block(3);
  Inst *A = Pool->var(8);
  Lhs.Root = Pool->inst(Kind::Phi, 8, {B, A, A});
  auto Diags = typecheck(Lhs);
  REQUIRE_FALSE(Diags.empty());
  CHECK(Diags[0].Message.find("predecessor count") != std::string::npos);
}

TEST_CASE("canonicalize sorts constants last") {
  ParseResult PR = parseInput("%x:i8 = var\n%y:i8 = add 1:i8, %x\ninfer %y\n");
  REQUIRE(PR.ok());
  LeftHandSide L = canonicalize(*PR.Lhs);
  CHECK(L.Root->Ops[0]->K == Kind::Var);
  CHECK(L.Root->Ops[1]->K == Kind::Const);
  CHECK(printLhs(L) == "%0:i8 = var\n%1:i8 = add %0, 1:i8\ninfer %1\n");
}

TEST_CASE("canonicalize orders operands by definition index") {
  ParseResult PR = parseInput(
      "%x:i8 = var\n%y:i8 = var\n%c:i1 = eq %y, %x\ninfer %c\n");
  REQUIRE(PR.ok());
  LeftHandSide L = canonicalize(*PR.Lhs);
  CHECK(L.Root->Ops[0]->Name == "x");
  CHECK(L.Root->Ops[1]->Name == "y");
}

TEST_CASE("canonicalize is idempotent on random DAGs") {
  DagGen Gen(999);
  DagGenOptions Opt;
  for (int I = 0; I < 1000; ++I) {
    LeftHandSide L = Gen.randomLhs(Opt);
    LeftHandSide C1 = canonicalize(L);
    std::string Once = printLhs(C1);
    LeftHandSide C2 = canonicalize(C1);
    CHECK(printLhs(C2) == Once);
  }
}

TEST_CASE("canonicalize preserves semantics on small widths") {
  DagGen Gen(777);
  DagGenOptions Opt;
  Opt.MaxWidth = 4;
  Opt.MaxTotalInputBits = 10;
  for (int I = 0; I < 60; ++I) {
    LeftHandSide L = Gen.randomLhs(Opt);
    std::string Before = printLhs(L);
    auto T1 = exhaustiveTable(L, 14);
    LeftHandSide C = canonicalize(L);
    auto T2 = exhaustiveTable(C, 14);
    REQUIRE(T1.has_value());
    REQUIRE(T2.has_value());
    REQUIRE(T1->Rows.size() == T2->Rows.size());
    for (size_t R = 0; R < T1->Rows.size(); ++R) {
      CHECK(T1->Rows[R].Constrained == T2->Rows[R].Constrained);
      CHECK(T1->Rows[R].Result == T2->Rows[R].Result);
    }
  }
}

TEST_CASE("cost: constants are free") {
  auto Opt = parseOptOrThrow("%x:i32 = var\ninfer %x\nresult 3:i32\n");
  CHECK(costRhs(Opt.Lhs, Opt.Rhs, CostModel{}) == 0);
}

TEST_CASE("cost: fig1b LHS counts its three opcode nodes") {
  auto Opt = parseOptOrThrow(readFixture("fig1b.sopt"));
  CHECK(costLhs(Opt.Lhs, CostModel{}) == 3);
  // the reused eq node costs the RHS nothing
  CHECK(costRhs(Opt.Lhs, Opt.Rhs, CostModel{}) == 0);
}

TEST_CASE("cost: a single shl RHS costs one") {
  auto Opt = parseOptOrThrow(readFixture("fig2c.sopt"));
  CHECK(costRhs(Opt.Lhs, Opt.Rhs, CostModel{}) == 1);
}

TEST_CASE("cost: divisions weigh three by default") {
  ParseResult PR = parseInput(
      "%x:i8 = var\n%y:i8 = udiv %x, 3:i8\ninfer %y\n");
  REQUIRE(PR.ok());
  CHECK(costLhs(*PR.Lhs, CostModel{}) == 3);
}

TEST_CASE("mutated width rules are rejected") {
  // Take valid programs and break one width; typecheck must complain.
  ParseResult Ok = parseInput("%x:i8 = var\n%y:i16 = zext %x\ninfer %y\n");
  REQUIRE(Ok.ok());
  auto Pool = Ok.Lhs->Pool;
  Ok.Lhs->Root->Width = 8; // zext that no longer widens
  CHECK_FALSE(typecheck(*Ok.Lhs).empty());

  ParseResult Cmp = parseInput(
      "%x:i8 = var\n%y:i8 = var\n%c:i1 = ult %x, %y\ninfer %c\n");
  REQUIRE(Cmp.ok());
  Cmp.Lhs->Root->Width = 8; // comparison must return a single bit
  CHECK_FALSE(typecheck(*Cmp.Lhs).empty());
}

TEST_CASE("parseRhs resolves LHS references by canonical name") {
  LeftHandSide L = parseLhsOrThrow(readFixture("sec24.sopt"));
  L = canonicalize(L);
  RhsParseResult RR = parseRhs(L, "%3:i32 = add %0, 3:i32\nresult %3\n");
  REQUIRE(RR.Rhs.has_value());
  CHECK(RR.Rhs->Root->K == Kind::Add);
  // width mismatch with the infer target is rejected
  RhsParseResult Bad = parseRhs(L, "result 1:i8\n");
  CHECK_FALSE(Bad.Rhs.has_value());
}

TEST_SUITE_END();
