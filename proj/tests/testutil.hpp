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

#ifndef SOPT_TESTUTIL_HPP
#define SOPT_TESTUTIL_HPP

#include "sopt/extract.hpp"
#include "sopt/interp.hpp"
#include "sopt/ir.hpp"
#include "sopt/solver.hpp"

#include "subprocess.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sopt::testutil {

inline SolverConfig solverConfigForTests() {
  SolverConfig C = SolverConfig::discover();
#if defined(SOPT_TEST_SHIM_NODE) && defined(SOPT_TEST_SHIM_JS)
  if (!C.valid()) {
    C.Path = SOPT_TEST_SHIM_NODE;
    C.Args = {SOPT_TEST_SHIM_JS};
  }
#endif
  return C;
}

// Shell-ready "PATH ARGS..." form for spawning the sopt CLI with a solver.
inline std::string solverSpecForTests() {
  SolverConfig C = solverConfigForTests();
  std::string Out = C.Path;
  for (const auto &A : C.Args)
    Out += " " + A;
  return Out;
}

inline std::string fixturePath(const std::string &Name) {
#ifdef SOPT_FIXTURE_DIR
  return std::string(SOPT_FIXTURE_DIR) + "/" + Name;
#else
  return "tests/fixtures/" + Name;
#endif
}

inline std::string readFixture(const std::string &Name) {
  std::ifstream IS(fixturePath(Name));
  if (!IS.is_open())
    throw std::runtime_error("missing fixture " + Name);
  std::ostringstream Buf;
  Buf << IS.rdbuf();
  return Buf.str();
}

inline LeftHandSide parseLhsOrThrow(const std::string &Text) {
  ParseResult PR = parseInput(Text);
  if (!PR.ok())
    throw std::runtime_error("fixture does not parse: " +
                             formatDiagnostics(PR.Diags));
  return *PR.Lhs;
}

inline CompleteOptimization parseOptOrThrow(const std::string &Text) {
  ParseResult PR = parseInput(Text);
  if (!PR.isComplete())
    throw std::runtime_error("fixture is not a complete optimization: " +
                             formatDiagnostics(PR.Diags));
  return {*PR.Lhs, *PR.Rhs};
}

// ---------------------------------------------------------------------------
// Random well-typed DAG generation

struct DagGenOptions {
  int MaxInsts = 6;
  unsigned MaxWidth = 4;
  int MaxVars = 3;
  bool WithPhis = true;
  bool WithTuples = true;
  bool WithDivRem = true;
  bool WithPcs = false;
  // Restrict var widths so exhaustive enumeration stays small.
  unsigned MaxTotalInputBits = 16;
};

class DagGen {
public:
  explicit DagGen(uint64_t Seed) : Rng(Seed) {}

  LeftHandSide randomLhs(const DagGenOptions &Opt) {
    LeftHandSide Lhs;
    Lhs.Pool = std::make_shared<InstPool>();
    InstPool &P = *Lhs.Pool;

    std::vector<Inst *> Values;      // plain bitvector values
    std::vector<Inst *> Tuples;      // with.overflow results
    std::vector<Inst *> Blocks;
    unsigned BitsUsed = 0;

    auto pickWidth = [&]() -> unsigned {
      return 1 + static_cast<unsigned>(Rng() % Opt.MaxWidth);
    };
    auto newVar = [&](unsigned W) -> Inst * {
      Inst *V = P.var(W);
      Values.push_back(V);
      BitsUsed += W;
      return V;
    };
    auto anyOfWidth = [&](unsigned W) -> Inst * {
      std::vector<Inst *> Cand;
      for (Inst *V : Values)
        if (V->Width == W)
          Cand.push_back(V);
      if (!Cand.empty() && Rng() % 4 != 0)
        return Cand[Rng() % Cand.size()];
      if (Rng() % 2 == 0 && BitsUsed + W <= Opt.MaxTotalInputBits)
        return newVar(W);
      return P.constant(W, Rng());
    };

    int NumVars = 1 + static_cast<int>(Rng() % Opt.MaxVars);
    for (int I = 0; I < NumVars; ++I) {
      unsigned W = pickWidth();
      if (BitsUsed + W <= Opt.MaxTotalInputBits)
        newVar(W);
    }
    if (Values.empty())
      newVar(1);

    static const Kind BinaryKinds[] = {
        Kind::Add,    Kind::AddNSW, Kind::AddNUW, Kind::AddNSWNUW,
        Kind::Sub,    Kind::SubNSW, Kind::SubNUW, Kind::SubNSWNUW,
        Kind::Mul,    Kind::MulNSW, Kind::MulNUW, Kind::MulNSWNUW,
        Kind::Shl,    Kind::ShlNSW, Kind::ShlNUW, Kind::ShlNSWNUW,
        Kind::LShr,   Kind::LShrExact, Kind::AShr, Kind::AShrExact,
        Kind::And,    Kind::Or,     Kind::Xor};
    static const Kind DivKinds[] = {Kind::UDiv, Kind::SDiv, Kind::UDivExact,
                                    Kind::SDivExact, Kind::URem, Kind::SRem};
    static const Kind CmpKinds[] = {Kind::Eq,  Kind::Ne,  Kind::Ult,
                                    Kind::Slt, Kind::Ule, Kind::Sle};
    static const Kind OvKinds[] = {
        Kind::SAddWithOverflow, Kind::UAddWithOverflow,
        Kind::SSubWithOverflow, Kind::USubWithOverflow,
        Kind::SMulWithOverflow, Kind::UMulWithOverflow};
    static const Kind UnaryKinds[] = {Kind::CtPop, Kind::Cttz, Kind::Ctlz};

    int NumInsts = 1 + static_cast<int>(Rng() % Opt.MaxInsts);
    for (int I = 0; I < NumInsts; ++I) {
      int Shape = static_cast<int>(Rng() % 10);
      if (Shape < 4) {
        Kind K = BinaryKinds[Rng() % std::size(BinaryKinds)];
        unsigned W = pickWidth();
        Values.push_back(P.inst(K, W, {anyOfWidth(W), anyOfWidth(W)}));
      } else if (Shape == 4 && Opt.WithDivRem) {
        Kind K = DivKinds[Rng() % std::size(DivKinds)];
        unsigned W = pickWidth();
        Values.push_back(P.inst(K, W, {anyOfWidth(W), anyOfWidth(W)}));
      } else if (Shape == 5) {
        Kind K = CmpKinds[Rng() % std::size(CmpKinds)];
        unsigned W = pickWidth();
        Values.push_back(P.inst(K, 1, {anyOfWidth(W), anyOfWidth(W)}));
      } else if (Shape == 6) {
        unsigned W = pickWidth();
        Values.push_back(
            P.inst(Kind::Select, W,
                   {anyOfWidth(1), anyOfWidth(W), anyOfWidth(W)}));
      } else if (Shape == 7) {
        // casts need strict widening/narrowing
        if (Opt.MaxWidth < 2)
          continue;
        unsigned From = 1 + static_cast<unsigned>(Rng() % (Opt.MaxWidth - 1));
        unsigned To =
            From + 1 +
            static_cast<unsigned>(Rng() % (Opt.MaxWidth - From));
        if (Rng() % 3 == 2)
          Values.push_back(P.inst(Kind::Trunc, From, {anyOfWidth(To)}));
        else
          Values.push_back(P.inst(Rng() % 2 ? Kind::ZExt : Kind::SExt, To,
                                  {anyOfWidth(From)}));
      } else if (Shape == 8) {
        if (Opt.WithTuples) {
          Kind K = OvKinds[Rng() % std::size(OvKinds)];
          unsigned W = pickWidth();
          Inst *T = P.inst(K, W, {anyOfWidth(W), anyOfWidth(W)});
          unsigned Idx = Rng() % 2;
          Values.push_back(P.inst(Kind::ExtractValue, Idx == 0 ? W : 1,
                                  {T, P.constant(32, Idx)}));
        } else {
          Kind K = UnaryKinds[Rng() % std::size(UnaryKinds)];
          unsigned W = pickWidth();
          Values.push_back(P.inst(K, W, {anyOfWidth(W)}));
        }
      } else {
        if (Opt.WithPhis && Blocks.size() < 2 && Rng() % 2 == 0 &&
            BitsUsed + 2 <= Opt.MaxTotalInputBits) {
          unsigned NumPreds = 2 + static_cast<unsigned>(Rng() % 2);
          Inst *B = P.block(NumPreds);
          Blocks.push_back(B);
          BitsUsed += 2;
          unsigned W = pickWidth();
          std::vector<Inst *> Ops{B};
          for (unsigned J = 0; J < NumPreds; ++J)
            Ops.push_back(anyOfWidth(W));
          Values.push_back(P.inst(Kind::Phi, W, Ops));
        } else {
          Kind K = UnaryKinds[Rng() % std::size(UnaryKinds)];
          unsigned W = pickWidth();
          Values.push_back(P.inst(K, W, {anyOfWidth(W)}));
        }
      }
    }

    Lhs.Root = Values.back();
    if (Opt.WithPcs && Values.size() > 2 && Rng() % 2 == 0) {
      Inst *V = Values[Rng() % (Values.size() - 1)];
      Lhs.PCs.push_back({V, P.constant(V->Width, Rng())});
    }
    return Lhs;
  }

  std::mt19937_64 Rng;
};

// ---------------------------------------------------------------------------
// Interpreter / SMT-encoding cross-check
//
// Each (dag, env) tuple becomes one (push) ... (check-sat) (pop) section
// asserting a value-or-definedness mismatch against the interpreter; every
// section must come back unsat. Sections are batched into few solver
// processes so large sweeps stay fast.

struct OracleStats {
  uint64_t Checked = 0;
  uint64_t Disagreements = 0;
  std::vector<std::string> Samples; // printed LHSs that disagreed
};

class OracleBatcher {
public:
  OracleBatcher(SolverConfig C, size_t TuplesPerQuery = 400)
      : Config(std::move(C)), TuplesPerQuery(TuplesPerQuery) {}

  void add(const LeftHandSide &L, const Env &E) {
    EvalValue Expect = evalTotal(L.Root, E);
    SmtEncoder Enc;
    LhsEncoding LE = encodeLHS(L, UbPolicy::Exploit, Enc);
    Batch << "(push 1)\n" << Enc.decls();
    for (const auto &[Sym, Var] : Enc.varSymbols())
      Batch << "(assert (= " << Sym << " "
            << smtBvLiteral(E.Vars.at(Var), Var->Width) << "))\n";
    for (const auto &[Sym, Blk] : Enc.blockSymbols()) {
      unsigned N = Blk->numPreds(), SelW = 1;
      while ((1u << SelW) < N)
        ++SelW;
      Batch << "(assert (= " << Sym << " "
            << smtBvLiteral(E.BlockChoices.at(Blk), SelW) << "))\n";
    }
    std::string ValMismatch = "(distinct " + LE.RootVal + " " +
                              smtBvLiteral(Expect.Val, L.Root->Width) + ")";
    std::string DefMismatch =
        Expect.defined()
            ? (LE.RootDef == "true" ? "false" : "(not " + LE.RootDef + ")")
            : LE.RootDef;
    Batch << "(assert (or " << ValMismatch << " " << DefMismatch << "))\n";
    Batch << "(check-sat)\n(pop 1)\n";
    InBatch.push_back(printLhs(L));
    if (InBatch.size() >= TuplesPerQuery)
      flush();
  }

  void flush() {
    if (InBatch.empty())
      return;
    std::string Text = "(set-logic QF_BV)\n" + Batch.str();
    ExecResult R = runProcess(Config.Path, Config.Args, Text, 600000);
    if (R.TimedOut || R.SpawnFailed)
      throw std::runtime_error("oracle batch failed to run: " + R.Err);
    std::istringstream IS(R.Out);
    std::string Line;
    size_t Idx = 0;
    while (std::getline(IS, Line)) {
      if (Line == "unsat" || Line == "sat") {
        if (Idx >= InBatch.size())
          throw std::runtime_error("oracle batch: more verdicts than tuples");
        ++Stats.Checked;
        if (Line == "sat") {
          ++Stats.Disagreements;
          if (Stats.Samples.size() < 5)
            Stats.Samples.push_back(InBatch[Idx]);
        }
        ++Idx;
      }
    }
    if (Idx != InBatch.size())
      throw std::runtime_error("oracle batch: missing verdicts (got " +
                               std::to_string(Idx) + ", expected " +
                               std::to_string(InBatch.size()) + ")");
    Batch.str("");
    Batch.clear();
    InBatch.clear();
  }

  const OracleStats &stats() const { return Stats; }

private:
  SolverConfig Config;
  size_t TuplesPerQuery;
  std::ostringstream Batch;
  std::vector<std::string> InBatch;
  OracleStats Stats;
};

// All envs of an LHS (vars plus block choices), capped.
inline std::vector<Env> allEnvs(const LeftHandSide &Lhs, size_t Cap) {
  std::vector<Env> Out;
  auto T = exhaustiveTable(Lhs, 24);
  if (!T)
    return Out;
  for (const TableRow &R : T->Rows) {
    Out.push_back(R.E);
    if (Out.size() >= Cap)
      break;
  }
  return Out;
}

// ---------------------------------------------------------------------------
// A tiny CFG executor (loop-free functions), used to validate extraction.

struct CfgExecResult {
  bool Ok = false; // false when any step was poison/UB or a loop was hit
  std::map<std::string, uint64_t> ValuesByName;
  std::map<std::string, unsigned> ChosenPredByBlock;
  std::vector<std::string> ExecutedBlocks;
  uint64_t ReturnValue = 0;
};

inline CfgExecResult runCfg(const CfgFunction &F,
                            const std::map<std::string, uint64_t> &Args) {
  CfgExecResult R;
  std::map<std::string, uint64_t> Vals;
  std::map<std::string, unsigned> WidthOf;
  for (auto &[Name, W] : F.Params) {
    auto It = Args.find(Name);
    if (It == Args.end())
      return R;
    Vals[Name] = maskToWidth(It->second, W);
    WidthOf[Name] = W;
  }

  auto operandValue = [&](const CfgOperand &O, bool &Known) -> uint64_t {
    Known = true;
    switch (O.T) {
    case CfgOperand::Type::Const:
      return O.Val;
    case CfgOperand::Type::Undef:
      return 0;
    case CfgOperand::Type::Ref: {
      auto It = Vals.find(O.Ref);
      if (It == Vals.end()) {
        Known = false;
        return 0;
      }
      return It->second;
    }
    }
    Known = false;
    return 0;
  };

  // Evaluate one instruction by building a throwaway constant DAG.
  auto evalInst = [&](const CfgInst &I, bool &Defined) -> uint64_t {
    Defined = false;
    InstPool P;
    std::vector<Inst *> Ops;
    for (const CfgOperand &O : I.Ops) {
      bool Known = false;
      uint64_t V = operandValue(O, Known);
      if (!Known)
        return 0;
      unsigned W = O.T == CfgOperand::Type::Ref ? WidthOf.at(O.Ref) : O.Width;
      Ops.push_back(P.constant(W, V));
    }
    Inst *N = nullptr;
    if (I.Op == "ugt" || I.Op == "sgt" || I.Op == "uge" || I.Op == "sge") {
      Kind K = I.Op == "ugt"   ? Kind::Ult
               : I.Op == "sgt" ? Kind::Slt
               : I.Op == "uge" ? Kind::Ule
                               : Kind::Sle;
      N = P.inst(K, 1, {Ops[1], Ops[0]});
    } else if (I.Op == "gep") {
      Inst *Mul = P.inst(Kind::Mul, I.Width, {Ops[1], Ops[2]});
      N = P.inst(Kind::Add, I.Width, {Ops[0], Mul});
    } else {
      auto K = kindFromName(I.Op);
      if (!K)
        return 0;
      N = P.inst(*K, I.Width, Ops);
    }
    EvalResult E = eval(N, Env{});
    if (E.Kind == EvalResult::K::Value) {
      Defined = true;
      return E.Val;
    }
    return 0;
  };

  int Cur = 0, PrevBlock = -1;
  std::set<int> Visited;
  while (true) {
    if (Visited.count(Cur))
      return R; // loop: give up
    Visited.insert(Cur);
    const CfgBlock &B = F.Blocks[Cur];
    R.ExecutedBlocks.push_back(B.Label);
    if (PrevBlock >= 0) {
      for (size_t PI = 0; PI < B.Preds.size(); ++PI)
        if (B.Preds[PI] == PrevBlock)
          R.ChosenPredByBlock[B.Label] = static_cast<unsigned>(PI);
    }
    // Phis read their incoming value from the edge taken.
    std::map<std::string, uint64_t> PhiVals;
    for (const CfgInst &Phi : B.Phis) {
      const std::string &FromLabel = F.Blocks[PrevBlock].Label;
      bool Got = false;
      for (auto &[L, V] : Phi.Incoming)
        if (L == FromLabel) {
          bool Known = false;
          uint64_t Val = operandValue(V, Known);
          if (!Known)
            return R;
          PhiVals[Phi.Name] = maskToWidth(Val, Phi.Width);
          Got = true;
        }
      if (!Got)
        return R;
    }
    for (auto &[Name, V] : PhiVals) {
      Vals[Name] = V;
      for (const CfgInst &Phi : B.Phis)
        if (Phi.Name == Name)
          WidthOf[Name] = Phi.Width;
    }
    for (const CfgInst &I : B.Insts) {
      if (kindFromName(I.Op) && isWithOverflow(*kindFromName(I.Op)))
        return R; // tuple-valued locals are not representable here
      bool Defined = false;
      uint64_t V = evalInst(I, Defined);
      if (!Defined)
        return R;
      Vals[I.Name] = maskToWidth(V, I.Width);
      WidthOf[I.Name] = I.Width;
    }
    R.ValuesByName = Vals;

    const CfgTerminator &T = B.Term;
    bool Known = false;
    switch (T.T) {
    case CfgTerminator::Type::Ret: {
      uint64_t V = operandValue(T.Value, Known);
      if (!Known)
        return R;
      R.ReturnValue = V;
      R.Ok = true;
      return R;
    }
    case CfgTerminator::Type::Br:
      PrevBlock = Cur;
      Cur = F.BlockIndex.at(T.Target);
      break;
    case CfgTerminator::Type::CondBr: {
      uint64_t C = operandValue(T.Value, Known);
      if (!Known)
        return R;
      PrevBlock = Cur;
      Cur = F.BlockIndex.at(C == 1 ? T.Target : T.ElseTarget);
      break;
    }
    case CfgTerminator::Type::Switch: {
      uint64_t V = operandValue(T.Value, Known);
      if (!Known)
        return R;
      std::string Target = T.DefaultTarget;
      for (auto &[CaseVal, CaseTarget] : T.Cases)
        if (CaseVal == V) {
          Target = CaseTarget;
          break;
        }
      PrevBlock = Cur;
      Cur = F.BlockIndex.at(Target);
      break;
    }
    }
  }
}

} // namespace sopt::testutil

#endif // SOPT_TESTUTIL_HPP
