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

#include <algorithm>
#include <cassert>
#include <chrono>
#include <functional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sopt {

const char *synthModeName(SynthMode M) {
  switch (M) {
  case SynthMode::Full:
    return "full";
  case SynthMode::ConstantsOnly:
    return "constants-only";
  case SynthMode::BoolRootsOnly:
    return "bool-roots-only";
  }
  return "?";
}

std::vector<Kind> SynthConfig::defaultComponentSet() {
  return {Kind::Add,  Kind::Sub,  Kind::Mul,  Kind::UDiv,  Kind::SDiv,
          Kind::URem, Kind::SRem, Kind::Shl,  Kind::LShr,  Kind::AShr,
          Kind::And,  Kind::Or,   Kind::Xor,  Kind::Eq,    Kind::Ne,
          Kind::Ult,  Kind::Slt,  Kind::Ule,  Kind::Sle,   Kind::Select,
          Kind::CtPop, Kind::BSwap, Kind::Cttz, Kind::Ctlz};
}

std::string SynthConfig::fingerprint(const CostModel &CM) const {
  std::ostringstream OS;
  OS << ubPolicyName(Policy) << ";" << synthModeName(Mode) << ";maxcost="
     << MaxCost << ";nconst=" << NumConstComponents << ";cm="
     << CM.fingerprint() << ";set=";
  const std::vector<Kind> &Set =
      ComponentSet.empty() ? defaultComponentSet() : ComponentSet;
  for (Kind K : Set)
    OS << kindName(K) << ",";
  return OS.str();
}

ComponentLibrary ComponentLibrary::atCostLevel(int Bound) const {
  ComponentLibrary Out;
  Out.DefaultWidth = DefaultWidth;
  Out.ConstComps = ConstComps;
  for (const Component &C : Comps)
    if (C.Weight <= Bound)
      Out.Comps.push_back(C);
  return Out;
}

ComponentLibrary adaptWidths(const LeftHandSide &Lhs,
                             const std::vector<Kind> &Set,
                             int NumConstComponents, const CostModel &CM) {
  ComponentLibrary Lib;
  unsigned RootW = Lhs.Root->Width;
  unsigned W = RootW;
  std::vector<unsigned> InputWidths;
  for (const Inst *V : lhsVars(Lhs)) {
    W = std::max(W, V->Width);
    InputWidths.push_back(V->Width);
  }
  Lib.DefaultWidth = W;

  auto add = [&](Component C) {
    if (std::find(Lib.Comps.begin(), Lib.Comps.end(), C) == Lib.Comps.end())
      Lib.Comps.push_back(std::move(C));
  };

  bool HasCmp = false, HasSelect = false;
  for (Kind K : Set) {
    assert(K != Kind::Phi && "phi is not synthesizable");
    if (K == Kind::ExtractValue || !isOpcode(K))
      continue;
    if (isWithOverflow(K)) {
      // Composite overflow-flag component: extractvalue(K(a, b), 1).
      add({K, 1, {W, W}, CM.weight(K) + CM.weight(Kind::ExtractValue), true});
      continue;
    }
    if (isCast(K))
      continue; // casts enter as width adapters below
    switch (K) {
    case Kind::Select:
      HasSelect = true;
      add({K, W, {1, W, W}, CM.weight(K), false});
      break;
    case Kind::Eq:
    case Kind::Ne:
    case Kind::Ult:
    case Kind::Slt:
    case Kind::Ule:
    case Kind::Sle:
      HasCmp = true;
      add({K, 1, {W, W}, CM.weight(K), false});
      break;
    case Kind::CtPop:
    case Kind::Cttz:
    case Kind::Ctlz:
      add({K, W, {W}, CM.weight(K), false});
      break;
    case Kind::BSwap:
      if (W % 8 == 0)
        add({K, W, {W}, CM.weight(K), false});
      break;
    default:
      add({K, W, {W, W}, CM.weight(K), false});
      break;
    }
  }

  // Width adapters.
  std::vector<unsigned> Narrow = InputWidths;
  std::sort(Narrow.begin(), Narrow.end());
  Narrow.erase(std::unique(Narrow.begin(), Narrow.end()), Narrow.end());
  for (unsigned NW : Narrow) {
    if (NW >= W)
      continue;
    add({Kind::ZExt, W, {NW}, CM.weight(Kind::ZExt), false});
    add({Kind::SExt, W, {NW}, CM.weight(Kind::SExt), false});
  }
  if (RootW < W)
    add({Kind::Trunc, RootW, {W}, CM.weight(Kind::Trunc), false});
  if (HasCmp && W > 1) {
    add({Kind::ZExt, W, {1}, CM.weight(Kind::ZExt), false});
    add({Kind::SExt, W, {1}, CM.weight(Kind::SExt), false});
  }
  if (HasSelect && W > 1)
    add({Kind::Trunc, 1, {W}, CM.weight(Kind::Trunc), false});

  std::vector<unsigned> ConstWidths = {W};
  if (RootW != W)
    ConstWidths.push_back(RootW);
  for (unsigned CW : ConstWidths)
    for (int J = 0; J < NumConstComponents; ++J)
      Lib.ConstComps.push_back({Kind::Const, CW, {}, 0, false});
  return Lib;
}

// ---------------------------------------------------------------------------
// The inductive find query

namespace {

constexpr unsigned LocBits = 8;

std::string locLit(unsigned V) { return smtBvLiteral(V, LocBits); }

struct SourceRef {
  enum class Type { Input, Const, Comp };
  Type T;
  unsigned Index;
  unsigned Width;
};

class FindQuery {
public:
  FindQuery(const LeftHandSide &Lhs, const ComponentLibrary &Lib,
            SynthMode Mode)
      : Lhs(Lhs), Lib(Lib), Mode(Mode) {
    Inputs = lhsVars(Lhs);
    N = static_cast<unsigned>(Inputs.size());
    K = static_cast<unsigned>(Lib.ConstComps.size());
    M = static_cast<unsigned>(Lib.Comps.size());
  }

  unsigned compLoc(unsigned I) const { return N + K + I; }

  std::vector<SourceRef> sourcesForWidth(unsigned Width,
                                         unsigned ExcludeComp) const {
    std::vector<SourceRef> Out;
    for (unsigned I = 0; I < N; ++I)
      if (Inputs[I]->Width == Width)
        Out.push_back({SourceRef::Type::Input, I, Width});
    for (unsigned J = 0; J < K; ++J)
      if (Lib.ConstComps[J].OutWidth == Width)
        Out.push_back({SourceRef::Type::Const, J, Width});
    for (unsigned I = 0; I < M; ++I)
      if (I != ExcludeComp && Lib.Comps[I].OutWidth == Width)
        Out.push_back({SourceRef::Type::Comp, I, Width});
    return Out;
  }

  std::vector<SourceRef> outputSources() const {
    std::vector<SourceRef> All = sourcesForWidth(Lhs.Root->Width, M);
    std::vector<SourceRef> Out;
    for (const SourceRef &S : All) {
      // Never wire the output straight back to the root itself.
      if (S.T == SourceRef::Type::Input && Inputs[S.Index] == Lhs.Root)
        continue;
      if (Mode == SynthMode::ConstantsOnly && S.T != SourceRef::Type::Const)
        continue;
      Out.push_back(S);
    }
    return Out;
  }

  std::string srcLocTerm(const SourceRef &S) const {
    switch (S.T) {
    case SourceRef::Type::Input:
      return locLit(S.Index);
    case SourceRef::Type::Const:
      return locLit(N + S.Index);
    case SourceRef::Type::Comp:
      return "r" + std::to_string(S.Index);
    }
    return "";
  }

  std::vector<std::string> wiringSymbols() const {
    std::vector<std::string> Syms{"oloc"};
    for (unsigned I = 0; I < M; ++I) {
      Syms.push_back("a" + std::to_string(I));
      Syms.push_back("r" + std::to_string(I));
      for (unsigned Op = 0; Op < Lib.Comps[I].OpWidths.size(); ++Op)
        Syms.push_back("p" + std::to_string(I) + "_" + std::to_string(Op));
    }
    for (unsigned J = 0; J < K; ++J)
      Syms.push_back("cst" + std::to_string(J));
    return Syms;
  }

  std::string buildText(const std::vector<Env> &Cexs, int CostBound,
                        const std::vector<std::string> &Blocked,
                        UbPolicy Policy) {
    std::ostringstream OS;
    OS << "(set-logic QF_BV)\n";

    // Shared wiring symbols.
    OS << "(declare-const oloc (_ BitVec " << LocBits << "))\n";
    for (unsigned I = 0; I < M; ++I) {
      OS << "(declare-const a" << I << " Bool)\n";
      OS << "(declare-const r" << I << " (_ BitVec " << LocBits << "))\n";
      for (unsigned Op = 0; Op < Lib.Comps[I].OpWidths.size(); ++Op)
        OS << "(declare-const p" << I << "_" << Op << " (_ BitVec " << LocBits
           << "))\n";
    }
    for (unsigned J = 0; J < K; ++J)
      OS << "(declare-const cst" << J << " (_ BitVec "
         << Lib.ConstComps[J].OutWidth << "))\n";

    // Output location ranges over the allowed sources.
    std::vector<SourceRef> OutSrcs = outputSources();
    if (OutSrcs.empty()) {
      OS << "(assert false)\n(check-sat)\n";
      return OS.str();
    }
    OS << "(assert (or";
    for (const SourceRef &S : OutSrcs) {
      if (S.T == SourceRef::Type::Comp)
        OS << " (and (= oloc " << srcLocTerm(S) << ") a" << S.Index << ")";
      else
        OS << " (= oloc " << srcLocTerm(S) << ")";
    }
    OS << "))\n";

    // Component output locations: distinct, in range, acyclic wiring.
    if (M > 1) {
      OS << "(assert (distinct";
      for (unsigned I = 0; I < M; ++I)
        OS << " r" << I;
      OS << "))\n";
    }
    for (unsigned I = 0; I < M; ++I) {
      OS << "(assert (and (bvule " << locLit(N + K) << " r" << I << ") (bvult r"
         << I << " " << locLit(N + K + M) << ")))\n";
      for (unsigned Op = 0; Op < Lib.Comps[I].OpWidths.size(); ++Op)
        OS << "(assert (bvult p" << I << "_" << Op << " r" << I << "))\n";
    }

    // Every active component's inputs wire to some width-compatible source;
    // wiring into another component activates it.
    for (unsigned I = 0; I < M; ++I) {
      for (unsigned Op = 0; Op < Lib.Comps[I].OpWidths.size(); ++Op) {
        std::string P = "p" + std::to_string(I) + "_" + std::to_string(Op);
        std::vector<SourceRef> Srcs =
            sourcesForWidth(Lib.Comps[I].OpWidths[Op], I);
        if (Srcs.empty()) {
          OS << "(assert (not a" << I << "))\n";
          continue;
        }
        OS << "(assert (or (not a" << I << ")";
        for (const SourceRef &S : Srcs)
          OS << " (= " << P << " " << srcLocTerm(S) << ")";
        OS << "))\n";
        for (const SourceRef &S : Srcs)
          if (S.T == SourceRef::Type::Comp)
            OS << "(assert (or (not a" << I << ") (distinct " << P << " r"
               << S.Index << ") a" << S.Index << "))\n";
      }
    }

    // Total weight of active components stays within the cost bound.
    if (M > 0) {
      OS << "(assert (bvule (bvadd";
      for (unsigned I = 0; I < M; ++I)
        OS << " (ite a" << I << " " << locLit(Lib.Comps[I].Weight) << " "
           << locLit(0) << ")";
      OS << ") " << locLit(CostBound) << "))\n";
    }

    for (const std::string &B : Blocked)
      OS << "(assert " << B << ")\n";

    // One copy of the dataflow semantics per counterexample.
    for (size_t T = 0; T < Cexs.size(); ++T)
      emitCex(OS, static_cast<unsigned>(T), Cexs[T], Policy);

    OS << "(check-sat)\n";
    OS << "(get-value (oloc";
    for (unsigned I = 0; I < M; ++I) {
      OS << " a" << I << " r" << I;
      for (unsigned Op = 0; Op < Lib.Comps[I].OpWidths.size(); ++Op)
        OS << " p" << I << "_" << Op;
    }
    for (unsigned J = 0; J < K; ++J)
      OS << " cst" << J;
    OS << "))\n";
    return OS.str();
  }

  void emitCex(std::ostringstream &OS, unsigned T, const Env &E, UbPolicy) {
    std::string Tag = std::to_string(T);
    // Concrete input values and the target the RHS must reproduce.
    EvalValue Target = evalTotal(Lhs.Root, E);
    std::vector<uint64_t> InVals(N);
    for (unsigned I = 0; I < N; ++I)
      InVals[I] = maskToWidth(E.Vars.at(Inputs[I]), Inputs[I]->Width);

    auto ci = [&](unsigned I, unsigned Op) {
      return "ci" + Tag + "_" + std::to_string(I) + "_" + std::to_string(Op);
    };
    auto dci = [&](unsigned I, unsigned Op) {
      return "dci" + Tag + "_" + std::to_string(I) + "_" + std::to_string(Op);
    };
    auto co = [&](unsigned I) { return "co" + Tag + "_" + std::to_string(I); };
    auto dco = [&](unsigned I) {
      return "dco" + Tag + "_" + std::to_string(I);
    };

    for (unsigned I = 0; I < M; ++I) {
      const Component &C = Lib.Comps[I];
      for (unsigned Op = 0; Op < C.OpWidths.size(); ++Op) {
        OS << "(declare-const " << ci(I, Op) << " (_ BitVec " << C.OpWidths[Op]
           << "))\n";
        OS << "(declare-const " << dci(I, Op) << " Bool)\n";
      }
      std::vector<std::string> OpSyms;
      for (unsigned Op = 0; Op < C.OpWidths.size(); ++Op)
        OpSyms.push_back(ci(I, Op));

      std::string ValTerm, DefTerm;
      if (C.IsOverflowFlag) {
        ValTerm = smtFlagTerm(C.K, C.OpWidths[0], OpSyms);
        DefTerm = "(and " + dci(I, 0) + " " + dci(I, 1) + ")";
      } else if (C.K == Kind::Select) {
        ValTerm = smtValueTerm(C.K, C.OutWidth, C.OpWidths[0], OpSyms);
        DefTerm = "(and " + dci(I, 0) + " (ite (= " + ci(I, 0) + " #b1) " +
                  dci(I, 1) + " " + dci(I, 2) + "))";
      } else {
        ValTerm = smtValueTerm(C.K, C.OutWidth, C.OpWidths[0], OpSyms);
        std::ostringstream D;
        D << "(and";
        for (unsigned Op = 0; Op < C.OpWidths.size(); ++Op)
          D << " " << dci(I, Op);
        std::string Local = smtLocalDefTerm(C.K, C.OutWidth, OpSyms);
        if (Local != "true")
          D << " " << Local;
        D << ")";
        DefTerm = D.str();
      }
      OS << "(define-fun " << co(I) << " () (_ BitVec " << C.OutWidth << ") "
         << ValTerm << ")\n";
      OS << "(define-fun " << dco(I) << " () Bool " << DefTerm << ")\n";
    }

    // Wirings propagate both values and definedness.
    for (unsigned I = 0; I < M; ++I) {
      const Component &C = Lib.Comps[I];
      for (unsigned Op = 0; Op < C.OpWidths.size(); ++Op) {
        std::string P = "p" + std::to_string(I) + "_" + std::to_string(Op);
        for (const SourceRef &S : sourcesForWidth(C.OpWidths[Op], I)) {
          OS << "(assert (or (not a" << I << ") (distinct " << P << " "
             << srcLocTerm(S) << ") ";
          switch (S.T) {
          case SourceRef::Type::Input:
            OS << "(and (= " << ci(I, Op) << " "
               << smtBvLiteral(InVals[S.Index], S.Width) << ") " << dci(I, Op)
               << ")";
            break;
          case SourceRef::Type::Const:
            OS << "(and (= " << ci(I, Op) << " cst" << S.Index << ") "
               << dci(I, Op) << ")";
            break;
          case SourceRef::Type::Comp:
            OS << "(and (= " << ci(I, Op) << " " << co(S.Index) << ") (= "
               << dci(I, Op) << " " << dco(S.Index) << "))";
            break;
          }
          OS << "))\n";
        }
      }
    }

    // The selected output must be defined and equal to the target value.
    std::string TargetLit = smtBvLiteral(Target.Val, Lhs.Root->Width);
    for (const SourceRef &S : outputSources()) {
      switch (S.T) {
      case SourceRef::Type::Input:
        if (InVals[S.Index] != maskToWidth(Target.Val, Lhs.Root->Width))
          OS << "(assert (distinct oloc " << srcLocTerm(S) << "))\n";
        break;
      case SourceRef::Type::Const:
        OS << "(assert (or (distinct oloc " << srcLocTerm(S) << ") (= cst"
           << S.Index << " " << TargetLit << ")))\n";
        break;
      case SourceRef::Type::Comp:
        OS << "(assert (or (distinct oloc " << srcLocTerm(S) << ") (and "
           << dco(S.Index) << " (= " << co(S.Index) << " " << TargetLit
           << "))))\n";
        break;
      }
    }
  }

  // Reconstruct the RHS DAG from a model of the wiring symbols.
  RightHandSide materialize(const Model &Mod) const {
    InstPool &Pool = *Lhs.Pool;
    std::unordered_map<unsigned, Inst *> Memo;
    std::function<Inst *(unsigned)> Build = [&](unsigned Loc) -> Inst * {
      auto It = Memo.find(Loc);
      if (It != Memo.end())
        return It->second;
      Inst *Out = nullptr;
      if (Loc < N) {
        Out = Inputs[Loc];
      } else if (Loc < N + K) {
        unsigned J = Loc - N;
        uint64_t V = Mod.Values.at("cst" + std::to_string(J));
        Out = Pool.constant(Lib.ConstComps[J].OutWidth, V);
      } else {
        // Locate the component whose output sits at Loc.
        int CompIdx = -1;
        for (unsigned I = 0; I < M; ++I)
          if (Mod.Values.at("r" + std::to_string(I)) == Loc) {
            CompIdx = static_cast<int>(I);
            break;
          }
        assert(CompIdx >= 0 && "model wires to an unplaced component");
        const Component &C = Lib.Comps[CompIdx];
        std::vector<Inst *> Ops;
        for (unsigned Op = 0; Op < C.OpWidths.size(); ++Op) {
          unsigned Src = static_cast<unsigned>(Mod.Values.at(
              "p" + std::to_string(CompIdx) + "_" + std::to_string(Op)));
          Ops.push_back(Build(Src));
        }
        if (C.IsOverflowFlag) {
          Inst *Tuple = Pool.inst(C.K, C.OpWidths[0], Ops);
          Out = Pool.inst(Kind::ExtractValue, 1,
                          {Tuple, Pool.constant(32, 1)});
        } else {
          Out = Pool.inst(C.K, C.OutWidth, Ops);
        }
      }
      Memo.emplace(Loc, Out);
      return Out;
    };
    unsigned OutLoc = static_cast<unsigned>(Mod.Values.at("oloc"));
    return RightHandSide{Build(OutLoc)};
  }

  // Conjunction describing this model's wiring, for blocking clauses.
  std::string wiringClause(const Model &Mod) const {
    std::ostringstream OS;
    OS << "(not (and (= oloc " << locLit(static_cast<unsigned>(
                                      Mod.Values.at("oloc")))
       << ")";
    for (unsigned I = 0; I < M; ++I) {
      OS << " (= r" << I << " "
         << locLit(static_cast<unsigned>(
                Mod.Values.at("r" + std::to_string(I))))
         << ")";
      OS << (Mod.Values.at("a" + std::to_string(I)) ? " a" : " (not a")
         << I << (Mod.Values.at("a" + std::to_string(I)) ? "" : ")");
      for (unsigned Op = 0; Op < Lib.Comps[I].OpWidths.size(); ++Op) {
        std::string P = "p" + std::to_string(I) + "_" + std::to_string(Op);
        OS << " (= " << P << " "
           << locLit(static_cast<unsigned>(Mod.Values.at(P))) << ")";
      }
    }
    OS << "))";
    return OS.str();
  }

  const LeftHandSide &Lhs;
  const ComponentLibrary &Lib;
  SynthMode Mode;
  std::vector<Inst *> Inputs;
  unsigned N = 0, K = 0, M = 0;
};

} // namespace

FindResult findCandidate(const LeftHandSide &Lhs, const ComponentLibrary &Lib,
                         const std::vector<Env> &Counterexamples,
                         int CostBound, UbPolicy Policy, SolverRunner &Runner,
                         unsigned TimeoutMillis,
                         const std::vector<std::string> &BlockedWirings,
                         SynthMode Mode) {
  FindResult Out;
  FindQuery FQ(Lhs, Lib, Mode);
  Query Q;
  Q.K = Query::Kind::CegisFind;
  Q.Text = FQ.buildText(Counterexamples, CostBound, BlockedWirings, Policy);
  Q.VarOrder = FQ.wiringSymbols();

  SolverVerdict SV = Runner.run(Q, TimeoutMillis);
  switch (SV.K) {
  case SolverVerdict::Kind::Unsat:
    Out.K = FindResult::Kind::Unsat;
    return Out;
  case SolverVerdict::Kind::Timeout:
    Out.K = FindResult::Kind::Timeout;
    return Out;
  case SolverVerdict::Kind::Error:
    Out.K = FindResult::Kind::Error;
    Out.Error = SV.Message;
    return Out;
  case SolverVerdict::Kind::Sat:
    break;
  }
  if (!SV.M.Values.count("oloc")) {
    Out.K = FindResult::Kind::Error;
    Out.Error = "find model missing wiring symbols";
    return Out;
  }
  Out.K = FindResult::Kind::Sat;
  Out.Rhs = FQ.materialize(SV.M);
  Out.BlockClause = FQ.wiringClause(SV.M);
  return Out;
}

// ---------------------------------------------------------------------------
// Candidate normalization

namespace {

bool isPowerOfTwo(uint64_t V) { return V != 0 && (V & (V - 1)) == 0; }

unsigned log2Exact(uint64_t V) {
  unsigned L = 0;
  while ((uint64_t(1) << L) != V)
    ++L;
  return L;
}

Inst *normalizeNode(Inst *I, InstPool &Pool,
                    const std::unordered_set<Inst *> &LhsSet,
                    std::unordered_map<Inst *, Inst *> &Memo) {
  if (LhsSet.count(I) || I->K == Kind::Var || I->K == Kind::Const ||
      I->K == Kind::Block)
    return I;
  auto It = Memo.find(I);
  if (It != Memo.end())
    return It->second;

  std::vector<Inst *> Ops;
  bool Changed = false;
  for (Inst *Op : I->Ops) {
    Inst *NewOp = normalizeNode(Op, Pool, LhsSet, Memo);
    Changed |= NewOp != Op;
    Ops.push_back(NewOp);
  }
  if (isCommutative(I->K)) {
    std::vector<Inst *> Sorted = Ops;
    std::stable_sort(Sorted.begin(), Sorted.end(),
                     [](const Inst *A, const Inst *B) {
                       bool CA = A->K == Kind::Const, CB = B->K == Kind::Const;
                       if (CA != CB)
                         return CB;
                       if (CA)
                         return std::make_pair(A->Val, A->Width) <
                                std::make_pair(B->Val, B->Width);
                       return A->DefIndex < B->DefIndex;
                     });
    Changed |= Sorted != Ops;
    Ops = std::move(Sorted);
  }

  Inst *Out;
  if (I->K == Kind::Mul && Ops.size() == 2 && Ops[1]->K == Kind::Const &&
      isPowerOfTwo(Ops[1]->Val) && Ops[1]->Val > 1) {
    Out = Pool.inst(Kind::Shl, I->Width,
                    {Ops[0], Pool.constant(I->Width, log2Exact(Ops[1]->Val))});
  } else if (Changed) {
    Out = Pool.inst(I->K, I->Width, Ops);
  } else {
    Out = I;
  }
  Memo.emplace(I, Out);
  return Out;
}

} // namespace

RightHandSide normalizeSynthesizedRhs(const LeftHandSide &Lhs,
                                      RightHandSide Rhs) {
  std::unordered_set<Inst *> LhsSet;
  for (Inst *I : lhsNodes(Lhs))
    LhsSet.insert(I);
  std::unordered_map<Inst *, Inst *> Memo;
  Rhs.Root = normalizeNode(Rhs.Root, *Lhs.Pool, LhsSet, Memo);
  return Rhs;
}

// ---------------------------------------------------------------------------
// The cost-bounded outer loop

namespace {

bool sameEnv(const Env &A, const Env &B) {
  return A.Vars == B.Vars && A.BlockChoices == B.BlockChoices;
}

// Rejection-sample additional constrained envs with the interpreter. Extra
// counterexamples cost no solver round trips and pin candidate constants
// after far fewer CEGIS iterations. Deterministic per LHS.
std::vector<Env> sampleConstrainedEnvs(const LeftHandSide &Lhs,
                                       UbPolicy Policy, size_t Want,
                                       size_t MaxTries) {
  std::vector<Env> Out;
  std::vector<Inst *> Vars = lhsVars(Lhs);
  std::vector<Inst *> Blocks = lhsBlocks(Lhs);
  uint64_t Seed = 0xcbf29ce484222325ull;
  for (char C : printLhs(Lhs))
    Seed = (Seed ^ static_cast<unsigned char>(C)) * 0x100000001b3ull;
  std::mt19937_64 Rng(Seed);
  // mix tiny magnitudes with full-range values; small inputs expose
  // structure that uniform 64-bit noise rarely hits
  auto randomValue = [&](unsigned W) -> uint64_t {
    switch (Rng() % 4) {
    case 0:
      return maskToWidth(Rng() % 8, W);
    case 1:
      return maskToWidth(~uint64_t(0) - (Rng() % 8), W);
    default:
      return maskToWidth(Rng(), W);
    }
  };
  for (size_t Try = 0; Try < MaxTries && Out.size() < Want; ++Try) {
    Env E;
    for (Inst *V : Vars)
      E.Vars[V] = randomValue(V->Width);
    for (Inst *B : Blocks)
      E.BlockChoices[B] = static_cast<unsigned>(Rng() % B->numPreds());
    LhsEval L = evalLHS(Lhs, E);
    if (!L.Constrained)
      continue;
    if (Policy == UbPolicy::Exploit && !L.Result.defined())
      continue;
    bool Dup = false;
    for (const Env &Prev : Out)
      if (sameEnv(Prev, E))
        Dup = true;
    if (!Dup)
      Out.push_back(std::move(E));
  }
  return Out;
}

// Seed query: any env satisfying the path conditions (and, under Exploit,
// leaving the LHS defined).
struct SeedResult {
  enum class Kind { Found, Unsat, Timeout, Error };
  Kind K;
  Env E;
  std::string Error;
};

SeedResult seedEnv(const LeftHandSide &Lhs, UbPolicy Policy,
                   SolverRunner &Runner, unsigned TimeoutMillis) {
  SmtEncoder Enc;
  LhsEncoding L = encodeLHS(Lhs, Policy, Enc);
  std::ostringstream OS;
  OS << "(set-logic QF_BV)\n" << Enc.decls();
  std::string Range = Enc.selectorRange();
  if (Range != "true")
    OS << "(assert " << Range << ")\n";
  if (L.Constraint != "true")
    OS << "(assert " << L.Constraint << ")\n";
  if (Policy == UbPolicy::Exploit && L.RootDef != "true")
    OS << "(assert " << L.RootDef << ")\n";
  OS << "(check-sat)\n";

  Query Q;
  Q.K = Query::Kind::CegisFind;
  for (const auto &[Sym, I] : Enc.varSymbols())
    Q.VarOrder.push_back(Sym);
  for (const auto &[Sym, B] : Enc.blockSymbols())
    Q.VarOrder.push_back(Sym);
  if (!Q.VarOrder.empty()) {
    OS << "(get-value (";
    for (size_t I = 0; I < Q.VarOrder.size(); ++I)
      OS << (I ? " " : "") << Q.VarOrder[I];
    OS << "))\n";
  }
  Q.Text = OS.str();

  SolverVerdict SV = Runner.run(Q, TimeoutMillis);
  SeedResult Out{SeedResult::Kind::Error, {}, {}};
  switch (SV.K) {
  case SolverVerdict::Kind::Sat:
    Out.K = SeedResult::Kind::Found;
    Out.E = envFromModel(SV.M, Enc.varSymbols(), Enc.blockSymbols());
    return Out;
  case SolverVerdict::Kind::Unsat:
    Out.K = SeedResult::Kind::Unsat;
    return Out;
  case SolverVerdict::Kind::Timeout:
    Out.K = SeedResult::Kind::Timeout;
    return Out;
  case SolverVerdict::Kind::Error:
    Out.K = SeedResult::Kind::Error;
    Out.Error = SV.Message;
    return Out;
  }
  return Out;
}

} // namespace

SynthResult synthesize(const LeftHandSide &LhsIn, const SynthConfig &Cfg,
                       SolverRunner &Runner, const CostModel &CM) {
  SynthResult Out;
  LeftHandSide Lhs = canonicalize(LhsIn);

  if (Cfg.Mode == SynthMode::BoolRootsOnly && Lhs.Root->Width != 1) {
    Out.K = SynthResult::Kind::NotFound;
    return Out;
  }

  auto Start = std::chrono::steady_clock::now();
  auto remainingMs = [&]() -> long {
    auto Elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - Start)
                       .count();
    return static_cast<long>(Cfg.PerLhsTimeoutMillis) - Elapsed;
  };
  auto queryBudget = [&]() -> unsigned {
    long Rem = remainingMs();
    if (Rem <= 0)
      return 0;
    return static_cast<unsigned>(
        std::min<long>(Rem, Cfg.PerQueryTimeoutMillis));
  };

  unsigned Budget = queryBudget();
  if (!Budget) {
    Out.K = SynthResult::Kind::Timeout;
    return Out;
  }
  SeedResult Seed = seedEnv(Lhs, Cfg.Policy, Runner, Budget);
  switch (Seed.K) {
  case SeedResult::Kind::Unsat:
    // The path conditions admit no env at all; synthesizing for a vacuous
    // LHS would justify any RHS, so report failure instead.
    Out.K = SynthResult::Kind::NotFound;
    return Out;
  case SeedResult::Kind::Timeout:
    Out.K = SynthResult::Kind::Timeout;
    return Out;
  case SeedResult::Kind::Error:
    Out.K = SynthResult::Kind::Error;
    Out.Error = Seed.Error;
    return Out;
  case SeedResult::Kind::Found:
    break;
  }

  std::vector<Kind> Set =
      Cfg.ComponentSet.empty() ? SynthConfig::defaultComponentSet()
                               : Cfg.ComponentSet;
  ComponentLibrary FullLib =
      Cfg.Mode == SynthMode::ConstantsOnly
          ? ComponentLibrary{{},
                             adaptWidths(Lhs, {}, Cfg.NumConstComponents, CM)
                                 .ConstComps,
                             Lhs.Root->Width}
          : adaptWidths(Lhs, Set, Cfg.NumConstComponents, CM);

  std::vector<Env> Cexs{Seed.E};
  for (Env &E : sampleConstrainedEnvs(Lhs, Cfg.Policy, 15, 4000))
    if (!sameEnv(E, Seed.E))
      Cexs.push_back(std::move(E));
  std::vector<std::string> Blocked;
  std::unordered_set<std::string> SeenCandidates;

  int MaxLevel = Cfg.Mode == SynthMode::ConstantsOnly ? 0 : Cfg.MaxCost;
  for (int Level = 0; Level <= MaxLevel; ++Level) {
    ComponentLibrary Lib = FullLib.atCostLevel(Level);
    while (true) {
      Budget = queryBudget();
      if (!Budget) {
        Out.K = SynthResult::Kind::Timeout;
        return Out;
      }
      FindResult FR = findCandidate(Lhs, Lib, Cexs, Level, Cfg.Policy, Runner,
                                    Budget, Blocked, Cfg.Mode);
      if (FR.K == FindResult::Kind::Unsat)
        break; // try the next cost level
      if (FR.K == FindResult::Kind::Timeout) {
        Out.K = SynthResult::Kind::Timeout;
        return Out;
      }
      if (FR.K == FindResult::Kind::Error) {
        Out.K = SynthResult::Kind::Error;
        Out.Error = FR.Error;
        return Out;
      }

      RightHandSide Cand = normalizeSynthesizedRhs(Lhs, *FR.Rhs);
      std::string CandText = printRhs(Lhs, Cand);
      if (!SeenCandidates.insert(CandText).second) {
        // Structurally identical candidate seen before; exclude this wiring
        // and continue searching.
        Blocked.push_back(FR.BlockClause);
        continue;
      }

      Budget = queryBudget();
      if (!Budget) {
        Out.K = SynthResult::Kind::Timeout;
        return Out;
      }
      Verdict V = check({Lhs, Cand}, Cfg.Policy, Runner, Budget);
      if (V.K == Verdict::Kind::Valid) {
        Out.K = SynthResult::Kind::Found;
        Out.Rhs = Cand;
        Out.Cost = costRhs(Lhs, Cand, CM);
        return Out;
      }
      if (V.K == Verdict::Kind::Invalid) {
        bool Duplicate = false;
        for (const Env &E : Cexs)
          if (sameEnv(E, V.CE->E))
            Duplicate = true;
        if (Duplicate) {
          // Should be impossible for a sound encoding; block the wiring so
          // the search still makes progress.
          Blocked.push_back(FR.BlockClause);
        } else {
          Cexs.push_back(V.CE->E);
        }
        continue;
      }
      if (V.K == Verdict::Kind::Timeout)
        break; // verification timeout ends this cost level
      Out.K = SynthResult::Kind::Error;
      Out.Error = V.Message;
      return Out;
    }
  }

  Out.K = SynthResult::Kind::NotFound;
  return Out;
}

} // namespace sopt
