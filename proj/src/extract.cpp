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

#include "sopt/extract.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cstring>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sopt {

// ---------------------------------------------------------------------------
// CFG parsing

namespace {

struct CfgParser {
  std::string_view Text;
  std::vector<Diagnostic> Diags;
  std::vector<CfgFunction> Functions;

  int Line = 0;

  void err(int Col, std::string Msg) { Diags.push_back({Line, Col, std::move(Msg)}); }

  // Cursor within the current line.
  std::string Cur;
  size_t Pos = 0;

  void skipWs() {
    while (Pos < Cur.size() && std::isspace((unsigned char)Cur[Pos]))
      ++Pos;
  }

  bool eol() {
    skipWs();
    return Pos >= Cur.size() || Cur[Pos] == ';';
  }

  bool eat(char C) {
    skipWs();
    if (Pos < Cur.size() && Cur[Pos] == C) {
      ++Pos;
      return true;
    }
    return false;
  }

  bool eatWord(const char *W) {
    skipWs();
    size_t L = strlen(W);
    if (Cur.compare(Pos, L, W) == 0 &&
        (Pos + L >= Cur.size() ||
         !(std::isalnum((unsigned char)Cur[Pos + L]) || Cur[Pos + L] == '.' ||
           Cur[Pos + L] == '_'))) {
      Pos += L;
      return true;
    }
    return false;
  }

  std::string ident() {
    skipWs();
    size_t Start = Pos;
    while (Pos < Cur.size() && (std::isalnum((unsigned char)Cur[Pos]) ||
                                Cur[Pos] == '_' || Cur[Pos] == '.'))
      ++Pos;
    return Cur.substr(Start, Pos - Start);
  }

  std::optional<uint64_t> number() {
    skipWs();
    bool Neg = Pos < Cur.size() && Cur[Pos] == '-';
    if (Neg)
      ++Pos;
    bool Hex = Cur.compare(Pos, 2, "0x") == 0 || Cur.compare(Pos, 2, "0X") == 0;
    if (Hex)
      Pos += 2;
    size_t Start = Pos;
    while (Pos < Cur.size() &&
           (Hex ? std::isxdigit((unsigned char)Cur[Pos])
                : std::isdigit((unsigned char)Cur[Pos])))
      ++Pos;
    if (Pos == Start) {
      err(static_cast<int>(Pos) + 1, "expected number");
      return std::nullopt;
    }
    uint64_t V = std::strtoull(Cur.substr(Start, Pos - Start).c_str(), nullptr,
                               Hex ? 16 : 10);
    if (Neg)
      V = ~V + 1;
    return V;
  }

  std::optional<unsigned> width() {
    if (!eat(':')) {
      err(static_cast<int>(Pos) + 1, "expected ':iN' width");
      return std::nullopt;
    }
    std::string W = ident();
    if (W.size() < 2 || W[0] != 'i') {
      err(static_cast<int>(Pos) + 1, "expected ':iN' width");
      return std::nullopt;
    }
    unsigned N = static_cast<unsigned>(std::atoi(W.c_str() + 1));
    if (N < 1 || N > MaxWidth) {
      err(static_cast<int>(Pos) + 1, "width must be between 1 and 64 bits");
      return std::nullopt;
    }
    return N;
  }

  std::optional<CfgOperand> operand() {
    skipWs();
    CfgOperand O;
    if (Pos < Cur.size() && Cur[Pos] == '%') {
      ++Pos;
      O.T = CfgOperand::Type::Ref;
      O.Ref = ident();
      if (O.Ref.empty()) {
        err(static_cast<int>(Pos) + 1, "expected name after '%'");
        return std::nullopt;
      }
      return O;
    }
    if (eatWord("undef")) {
      O.T = CfgOperand::Type::Undef;
      auto W = width();
      if (!W)
        return std::nullopt;
      O.Width = *W;
      return O;
    }
    auto V = number();
    if (!V)
      return std::nullopt;
    auto W = width();
    if (!W)
      return std::nullopt;
    O.T = CfgOperand::Type::Const;
    O.Val = maskToWidth(*V, *W);
    O.Width = *W;
    return O;
  }

  void run() {
    std::istringstream IS{std::string(Text)};
    CfgFunction *F = nullptr;
    CfgBlock *B = nullptr;
    while (std::getline(IS, Cur)) {
      ++Line;
      Pos = 0;
      if (eol())
        continue;
      if (eatWord("func")) {
        Functions.emplace_back();
        F = &Functions.back();
        B = nullptr;
        parseFuncHeader(*F);
        continue;
      }
      if (!F) {
        err(1, "expected 'func'");
        continue;
      }
      skipWs();
      if (Pos < Cur.size() && Cur[Pos] == '}') {
        finishFunction(*F);
        F = nullptr;
        B = nullptr;
        continue;
      }
      // Label?
      size_t Save = Pos;
      std::string Word = ident();
      skipWs();
      if (!Word.empty() && Pos < Cur.size() && Cur[Pos] == ':') {
        ++Pos;
        F->Blocks.emplace_back();
        B = &F->Blocks.back();
        B->Label = Word;
        if (!eol())
          err(static_cast<int>(Pos) + 1, "trailing tokens after label");
        continue;
      }
      Pos = Save;
      if (!B) {
        err(1, "instruction outside a block");
        continue;
      }
      parseBlockLine(*F, *B);
    }
    if (F)
      err(1, "missing '}' at end of function");
  }

  void parseFuncHeader(CfgFunction &F) {
    skipWs();
    if (Pos < Cur.size() && Cur[Pos] == '@')
      ++Pos;
    F.Name = ident();
    if (F.Name.empty())
      err(static_cast<int>(Pos) + 1, "expected function name");
    if (!eat('(')) {
      err(static_cast<int>(Pos) + 1, "expected '('");
      return;
    }
    skipWs();
    if (Pos < Cur.size() && Cur[Pos] == ')') {
      ++Pos;
    } else {
      while (true) {
        if (!eat('%')) {
          err(static_cast<int>(Pos) + 1, "expected parameter");
          return;
        }
        std::string Name = ident();
        auto W = width();
        if (!W)
          return;
        F.Params.emplace_back(Name, *W);
        if (eat(','))
          continue;
        if (eat(')'))
          break;
        err(static_cast<int>(Pos) + 1, "expected ',' or ')'");
        return;
      }
    }
    if (!eat('{'))
      err(static_cast<int>(Pos) + 1, "expected '{'");
  }

  void parseBlockLine(CfgFunction &F, CfgBlock &B) {
    (void)F;
    if (eatWord("br")) {
      CfgTerminator T;
      T.Line = Line;
      skipWs();
      if (Pos < Cur.size() && Cur[Pos] == '%') {
        auto C = operand();
        if (!C)
          return;
        T.T = CfgTerminator::Type::CondBr;
        T.Value = *C;
        if (!eat(',')) {
          err(static_cast<int>(Pos) + 1, "expected ',' after condition");
          return;
        }
        T.Target = ident();
        if (!eat(',')) {
          err(static_cast<int>(Pos) + 1, "expected ',' before else target");
          return;
        }
        T.ElseTarget = ident();
      } else {
        T.T = CfgTerminator::Type::Br;
        T.Target = ident();
        if (T.Target.empty()) {
          err(static_cast<int>(Pos) + 1, "expected branch target");
          return;
        }
      }
      B.Term = T;
      return;
    }
    if (eatWord("switch")) {
      CfgTerminator T;
      T.T = CfgTerminator::Type::Switch;
      T.Line = Line;
      auto V = operand();
      if (!V)
        return;
      T.Value = *V;
      if (!eat(',') || !eat('[')) {
        err(static_cast<int>(Pos) + 1, "expected ', [' after switch value");
        return;
      }
      while (true) {
        skipWs();
        if (eat(']'))
          break;
        auto C = operand();
        if (!C || C->T != CfgOperand::Type::Const) {
          err(static_cast<int>(Pos) + 1, "switch case must be a constant");
          return;
        }
        if (!eat('-') || !eat('>')) {
          err(static_cast<int>(Pos) + 1, "expected '->' after case value");
          return;
        }
        std::string Target = ident();
        T.Cases.emplace_back(C->Val, Target);
        eat(',');
      }
      if (!eat(',') || !eatWord("default") || !eat('-') || !eat('>')) {
        err(static_cast<int>(Pos) + 1, "expected ', default -> label'");
        return;
      }
      T.DefaultTarget = ident();
      B.Term = T;
      return;
    }
    if (eatWord("ret")) {
      CfgTerminator T;
      T.T = CfgTerminator::Type::Ret;
      T.Line = Line;
      auto V = operand();
      if (!V)
        return;
      T.Value = *V;
      B.Term = T;
      return;
    }
    // Instruction definition.
    if (!eat('%')) {
      err(static_cast<int>(Pos) + 1, "expected instruction or terminator");
      return;
    }
    CfgInst I;
    I.Line = Line;
    I.Name = ident();
    auto W = width();
    if (!W)
      return;
    I.Width = *W;
    if (!eat('=')) {
      err(static_cast<int>(Pos) + 1, "expected '='");
      return;
    }
    I.Op = ident();
    if (I.Op.empty()) {
      err(static_cast<int>(Pos) + 1, "expected opcode");
      return;
    }
    if (I.Op == "phi") {
      if (!eat('[')) {
        err(static_cast<int>(Pos) + 1, "expected '[' after phi");
        return;
      }
      while (true) {
        skipWs();
        if (eat(']'))
          break;
        std::string Label = ident();
        if (!eat(':')) {
          err(static_cast<int>(Pos) + 1, "expected ':' after phi label");
          return;
        }
        auto V = operand();
        if (!V)
          return;
        I.Incoming.emplace_back(Label, *V);
        eat(',');
      }
      B.Phis.push_back(std::move(I));
      return;
    }
    while (!eol()) {
      auto O = operand();
      if (!O)
        return;
      I.Ops.push_back(*O);
      if (!eat(','))
        break;
    }
    if (!eol()) {
      err(static_cast<int>(Pos) + 1, "trailing tokens after operands");
      return;
    }
    B.Insts.push_back(std::move(I));
  }

  void finishFunction(CfgFunction &F) {
    if (F.Blocks.empty()) {
      err(1, "function '" + F.Name + "' has no blocks");
      return;
    }
    for (size_t I = 0; I < F.Blocks.size(); ++I) {
      if (F.BlockIndex.count(F.Blocks[I].Label))
        err(1, "duplicate block label '" + F.Blocks[I].Label + "'");
      F.BlockIndex[F.Blocks[I].Label] = static_cast<int>(I);
    }
    // Resolve targets, collect distinct preds in discovery order.
    auto checkTarget = [&](const std::string &T, int Ln) -> int {
      auto It = F.BlockIndex.find(T);
      if (It == F.BlockIndex.end()) {
        Diags.push_back({Ln, 1, "unknown branch target '" + T + "'"});
        return -1;
      }
      return It->second;
    };
    for (size_t I = 0; I < F.Blocks.size(); ++I) {
      CfgBlock &B = F.Blocks[I];
      std::vector<int> Succs;
      switch (B.Term.T) {
      case CfgTerminator::Type::Br:
        Succs.push_back(checkTarget(B.Term.Target, B.Term.Line));
        break;
      case CfgTerminator::Type::CondBr:
        Succs.push_back(checkTarget(B.Term.Target, B.Term.Line));
        Succs.push_back(checkTarget(B.Term.ElseTarget, B.Term.Line));
        break;
      case CfgTerminator::Type::Switch:
        for (auto &[Val, Tgt] : B.Term.Cases)
          Succs.push_back(checkTarget(Tgt, B.Term.Line));
        Succs.push_back(checkTarget(B.Term.DefaultTarget, B.Term.Line));
        break;
      case CfgTerminator::Type::Ret:
        break;
      }
      for (int S : Succs) {
        if (S < 0)
          continue;
        auto &P = F.Blocks[S].Preds;
        if (std::find(P.begin(), P.end(), static_cast<int>(I)) == P.end())
          P.push_back(static_cast<int>(I));
      }
    }
    validateSsa(F);
  }

  // Iterative dominator sets over block indices.
  std::vector<std::set<int>> dominators(const CfgFunction &F) {
    size_t N = F.Blocks.size();
    std::set<int> All;
    for (size_t I = 0; I < N; ++I)
      All.insert(static_cast<int>(I));
    std::vector<std::set<int>> Dom(N, All);
    Dom[0] = {0};
    bool Changed = true;
    while (Changed) {
      Changed = false;
      for (size_t I = 1; I < N; ++I) {
        std::set<int> New = All;
        if (F.Blocks[I].Preds.empty())
          New = {static_cast<int>(I)}; // unreachable block
        for (int P : F.Blocks[I].Preds) {
          std::set<int> Inter;
          std::set_intersection(New.begin(), New.end(), Dom[P].begin(),
                                Dom[P].end(),
                                std::inserter(Inter, Inter.begin()));
          New = std::move(Inter);
        }
        New.insert(static_cast<int>(I));
        if (New != Dom[I]) {
          Dom[I] = std::move(New);
          Changed = true;
        }
      }
    }
    return Dom;
  }

  void validateSsa(CfgFunction &F) {
    // Definition sites: params at entry, instructions at their blocks.
    std::map<std::string, std::pair<int, unsigned>> Defs; // name -> (block, width)
    std::set<std::string> Params;
    for (auto &[Name, W] : F.Params) {
      Params.insert(Name);
      if (!Defs.emplace(Name, std::make_pair(0, W)).second)
        err(1, "duplicate parameter '%" + Name + "'");
    }
    for (size_t I = 0; I < F.Blocks.size(); ++I) {
      for (const CfgInst &Inst : F.Blocks[I].Phis)
        if (!Defs.emplace(Inst.Name, std::make_pair(static_cast<int>(I),
                                                    Inst.Width))
                 .second)
          Diags.push_back({Inst.Line, 1, "'%" + Inst.Name + "' redefined"});
      for (const CfgInst &Inst : F.Blocks[I].Insts)
        if (!Defs.emplace(Inst.Name, std::make_pair(static_cast<int>(I),
                                                    Inst.Width))
                 .second)
          Diags.push_back({Inst.Line, 1, "'%" + Inst.Name + "' redefined"});
    }
    auto Dom = dominators(F);
    auto dominates = [&](int A, int B) { return Dom[B].count(A) != 0; };

    auto checkUse = [&](const CfgOperand &O, int UseBlock, int Ln,
                        bool SameBlockOrderOk) {
      if (O.T != CfgOperand::Type::Ref)
        return;
      auto It = Defs.find(O.Ref);
      if (It == Defs.end()) {
        Diags.push_back({Ln, 1, "use of undefined value '%" + O.Ref + "'"});
        return;
      }
      int DefBlock = It->second.first;
      if (DefBlock == UseBlock && SameBlockOrderOk)
        return;
      if (!dominates(DefBlock, UseBlock))
        Diags.push_back({Ln, 1,
                         "'%" + O.Ref +
                             "' does not dominate its use (defined in '" +
                             F.Blocks[DefBlock].Label + "')"});
    };

    for (size_t I = 0; I < F.Blocks.size(); ++I) {
      const CfgBlock &B = F.Blocks[I];
      // Phi incoming labels must exactly match the predecessors.
      for (const CfgInst &Phi : B.Phis) {
        std::set<std::string> Labels;
        for (auto &[L, V] : Phi.Incoming)
          Labels.insert(L);
        std::set<std::string> Preds;
        for (int P : B.Preds)
          Preds.insert(F.Blocks[P].Label);
        if (Labels != Preds)
          Diags.push_back(
              {Phi.Line, 1,
               "phi '%" + Phi.Name +
                   "' incoming labels do not match the block predecessors"});
        for (auto &[L, V] : Phi.Incoming) {
          auto It = F.BlockIndex.find(L);
          if (It == F.BlockIndex.end())
            continue;
          // The incoming value must dominate the predecessor's terminator.
          if (V.T == CfgOperand::Type::Ref) {
            auto DIt = Defs.find(V.Ref);
            if (DIt == Defs.end())
              Diags.push_back(
                  {Phi.Line, 1, "use of undefined value '%" + V.Ref + "'"});
            else if (!dominates(DIt->second.first, It->second))
              Diags.push_back({Phi.Line, 1,
                               "phi incoming '%" + V.Ref +
                                   "' does not dominate predecessor '" + L +
                                   "'"});
          }
        }
      }
      // Straight-line uses within the block: defs must come first.
      // Parameters are live from function entry.
      std::set<std::string> Local = Params;
      for (const CfgInst &Phi : B.Phis)
        Local.insert(Phi.Name);
      for (const CfgInst &Inst : B.Insts) {
        for (const CfgOperand &O : Inst.Ops) {
          if (O.T == CfgOperand::Type::Ref) {
            auto It = Defs.find(O.Ref);
            bool SameBlock =
                It != Defs.end() && It->second.first == static_cast<int>(I);
            if (SameBlock && !Local.count(O.Ref)) {
              Diags.push_back({Inst.Line, 1,
                               "'%" + O.Ref + "' used before its definition"});
              continue;
            }
          }
          checkUse(O, static_cast<int>(I), Inst.Line, true);
        }
        Local.insert(Inst.Name);
      }
      if (B.Term.T == CfgTerminator::Type::CondBr ||
          B.Term.T == CfgTerminator::Type::Switch ||
          B.Term.T == CfgTerminator::Type::Ret) {
        if (B.Term.Value.T == CfgOperand::Type::Ref &&
            !Local.count(B.Term.Value.Ref))
          checkUse(B.Term.Value, static_cast<int>(I), B.Term.Line, false);
      }
    }
  }
};

} // namespace

CfgParseResult parseCfg(std::string_view Text) {
  CfgParser P;
  P.Text = Text;
  P.run();
  CfgParseResult R;
  R.Functions = std::move(P.Functions);
  R.Diags = std::move(P.Diags);
  return R;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

// An edge fact: Value equals Expected when control crossed the edge, or,
// with ViaNe set, ne(Value, Expected) == 1 (a ruled-out switch case).
struct EdgeFact {
  bool ViaNe = false;
  CfgOperand Value;
  uint64_t Expected = 0;
  unsigned Width = 0;
};

struct Walker {
  const CfgFunction &F;
  const ExtractionConfig &Cfg;
  LeftHandSide Lhs;

  // name -> defining instruction (or param width)
  std::map<std::string, const CfgInst *> DefOf;
  std::map<std::string, unsigned> ParamWidth;
  std::map<std::string, int> DefBlockOf;

  std::map<const CfgInst *, Inst *> Built;
  std::map<const CfgInst *, Inst *> CutVars;
  std::set<const CfgInst *> OnStack;
  std::map<int, Inst *> BlockVals;
  std::set<int> BlockpcsDone;
  std::map<std::string, Inst *> ParamNodes;
  unsigned Depth = 0;

  Walker(const CfgFunction &F, const ExtractionConfig &Cfg) : F(F), Cfg(Cfg) {
    Lhs.Pool = std::make_shared<InstPool>();
    for (auto &[Name, W] : F.Params)
      ParamWidth[Name] = W;
    for (size_t I = 0; I < F.Blocks.size(); ++I) {
      for (const CfgInst &Inst : F.Blocks[I].Phis) {
        DefOf[Inst.Name] = &Inst;
        DefBlockOf[Inst.Name] = static_cast<int>(I);
      }
      for (const CfgInst &Inst : F.Blocks[I].Insts) {
        DefOf[Inst.Name] = &Inst;
        DefBlockOf[Inst.Name] = static_cast<int>(I);
      }
    }
  }

  Inst *operandNode(const CfgOperand &O) {
    switch (O.T) {
    case CfgOperand::Type::Const:
      return Lhs.Pool->constant(O.Width, O.Val);
    case CfgOperand::Type::Undef:
      // undef is conservatively modeled as zero
      return Lhs.Pool->constant(O.Width, 0);
    case CfgOperand::Type::Ref:
      break;
    }
    auto PIt = ParamWidth.find(O.Ref);
    if (PIt != ParamWidth.end()) {
      auto NIt = ParamNodes.find(O.Ref);
      if (NIt != ParamNodes.end())
        return NIt->second;
      Inst *V = Lhs.Pool->var(PIt->second, O.Ref);
      ParamNodes[O.Ref] = V;
      return V;
    }
    const CfgInst *Def = DefOf.at(O.Ref);
    return translate(Def);
  }

  Inst *freshCut(const CfgInst *I) {
    auto It = CutVars.find(I);
    if (It != CutVars.end())
      return It->second;
    Inst *V = Lhs.Pool->var(I->Width, I->Name);
    CutVars[I] = V;
    return V;
  }

  Inst *translate(const CfgInst *I) {
    // A point cut once (loop back-edge or depth limit) stays a var for the
    // rest of this LHS, so no program point is extracted twice.
    auto CIt = CutVars.find(I);
    if (CIt != CutVars.end())
      return CIt->second;
    auto BIt = Built.find(I);
    if (BIt != Built.end())
      return BIt->second;
    if (OnStack.count(I))
      return freshCut(I);
    if (Cfg.MaxDepth && Depth >= *Cfg.MaxDepth)
      return freshCut(I);

    OnStack.insert(I);
    ++Depth;
    Inst *Out = translateInner(I);
    --Depth;
    OnStack.erase(I);
    Built[I] = Out;
    return Out;
  }

  Inst *translateInner(const CfgInst *I) {
    InstPool &P = *Lhs.Pool;
    const std::string &Op = I->Op;
    if (Op == "phi")
      return translatePhi(I);
    // Frontend-only forms are lowered here: greater-than comparisons turn
    // into less-than with swapped operands, gep becomes add of a scaled
    // index.
    if (Op == "ugt" || Op == "sgt" || Op == "uge" || Op == "sge") {
      Inst *A = operandNode(I->Ops[0]);
      Inst *B = operandNode(I->Ops[1]);
      Kind K = Op == "ugt"   ? Kind::Ult
               : Op == "sgt" ? Kind::Slt
               : Op == "uge" ? Kind::Ule
                             : Kind::Sle;
      return P.inst(K, 1, {B, A});
    }
    if (Op == "gep") {
      Inst *Base = operandNode(I->Ops[0]);
      Inst *Idx = operandNode(I->Ops[1]);
      Inst *Scale = operandNode(I->Ops[2]);
      Inst *Mul = P.inst(Kind::Mul, I->Width, {Idx, Scale});
      return P.inst(Kind::Add, I->Width, {Base, Mul});
    }
    auto K = kindFromName(Op);
    assert(K && isOpcode(*K) && "parser admitted an unknown opcode");
    std::vector<Inst *> Ops;
    for (const CfgOperand &O : I->Ops)
      Ops.push_back(operandNode(O));
    return P.inst(*K, I->Width, Ops);
  }

  Inst *blockValue(int BlockIdx) {
    auto It = BlockVals.find(BlockIdx);
    if (It != BlockVals.end())
      return It->second;
    const CfgBlock &B = F.Blocks[BlockIdx];
    Inst *BV = Lhs.Pool->block(static_cast<unsigned>(B.Preds.size()), B.Label);
    BlockVals[BlockIdx] = BV;
    return BV;
  }

  Inst *translatePhi(const CfgInst *I) {
    int BlockIdx = DefBlockOf.at(I->Name);
    const CfgBlock &B = F.Blocks[BlockIdx];
    Inst *BV = blockValue(BlockIdx);
    std::vector<Inst *> Ops{BV};
    // Order phi operands by the block's predecessor order.
    for (int P : B.Preds) {
      const std::string &Label = F.Blocks[P].Label;
      const CfgOperand *Found = nullptr;
      for (auto &[L, V] : I->Incoming)
        if (L == Label)
          Found = &V;
      assert(Found && "ssa validation admitted a phi without this pred");
      Ops.push_back(operandNode(*Found));
    }
    Inst *Phi = Lhs.Pool->inst(Kind::Phi, I->Width, Ops);
    if (Cfg.HarvestBlockpcs)
      harvestBlockpcs(BlockIdx);
    return Phi;
  }

  // Facts that hold whenever control crosses the unique edge Pred -> Succ.
  std::vector<EdgeFact> edgeFacts(int Pred, int Succ) {
    std::vector<EdgeFact> Out;
    const CfgBlock &P = F.Blocks[Pred];
    auto target = [&](const std::string &T) { return F.BlockIndex.at(T); };
    switch (P.Term.T) {
    case CfgTerminator::Type::Br:
    case CfgTerminator::Type::Ret:
      break;
    case CfgTerminator::Type::CondBr: {
      bool ThenHits = target(P.Term.Target) == Succ;
      bool ElseHits = target(P.Term.ElseTarget) == Succ;
      if (ThenHits == ElseHits)
        break; // both arms or neither: no usable fact
      EdgeFact Fact;
      Fact.Value = P.Term.Value;
      Fact.Expected = ThenHits ? 1 : 0;
      Fact.Width = 1;
      Out.push_back(Fact);
      break;
    }
    case CfgTerminator::Type::Switch: {
      unsigned HitCases = 0;
      uint64_t CaseVal = 0;
      bool DefaultHits = target(P.Term.DefaultTarget) == Succ;
      for (auto &[Val, Tgt] : P.Term.Cases)
        if (target(Tgt) == Succ) {
          ++HitCases;
          CaseVal = Val;
        }
      unsigned ValWidth = switchValueWidth(P);
      if (HitCases == 1 && !DefaultHits) {
        EdgeFact Fact;
        Fact.Value = P.Term.Value;
        Fact.Expected = CaseVal;
        Fact.Width = ValWidth;
        Out.push_back(Fact);
      } else if (HitCases == 0 && DefaultHits) {
        // The default edge rules out every case value.
        for (auto &[Val, Tgt] : P.Term.Cases) {
          EdgeFact Fact;
          Fact.ViaNe = true;
          Fact.Value = P.Term.Value;
          Fact.Expected = Val;
          Fact.Width = ValWidth;
          Out.push_back(Fact);
        }
      }
      break;
    }
    }
    return Out;
  }

  unsigned switchValueWidth(const CfgBlock &P) {
    const CfgOperand &V = P.Term.Value;
    if (V.T != CfgOperand::Type::Ref)
      return V.Width;
    auto PIt = ParamWidth.find(V.Ref);
    if (PIt != ParamWidth.end())
      return PIt->second;
    return DefOf.at(V.Ref)->Width;
  }

  // Facts established by the unique-predecessor chain above Block.
  std::vector<EdgeFact> domFacts(int Block) {
    std::vector<EdgeFact> Out;
    std::set<int> Visited{Block};
    int Cur = Block;
    while (true) {
      const CfgBlock &B = F.Blocks[Cur];
      if (B.Preds.size() != 1)
        break;
      int Pred = B.Preds[0];
      auto Facts = edgeFacts(Pred, Cur);
      Out.insert(Out.end(), Facts.begin(), Facts.end());
      if (Visited.count(Pred))
        break;
      Visited.insert(Pred);
      Cur = Pred;
    }
    return Out;
  }

  std::pair<Inst *, Inst *> factNodes(const EdgeFact &Fact) {
    Inst *V = operandNode(Fact.Value);
    Inst *C = Lhs.Pool->constant(Fact.Width, Fact.Expected);
    if (Fact.ViaNe) {
      Inst *Ne = Lhs.Pool->inst(Kind::Ne, 1, {V, C});
      return {Ne, Lhs.Pool->constant(1, 1)};
    }
    return {V, C};
  }

  void harvestBlockpcs(int BlockIdx) {
    if (BlockpcsDone.count(BlockIdx))
      return;
    BlockpcsDone.insert(BlockIdx);
    const CfgBlock &B = F.Blocks[BlockIdx];
    Inst *BV = blockValue(BlockIdx);
    for (size_t PredPos = 0; PredPos < B.Preds.size(); ++PredPos) {
      int Pred = B.Preds[PredPos];
      std::vector<EdgeFact> Facts = edgeFacts(Pred, BlockIdx);
      std::vector<EdgeFact> Dom = domFacts(Pred);
      Facts.insert(Facts.end(), Dom.begin(), Dom.end());
      for (const EdgeFact &Fact : Facts) {
        auto [V, C] = factNodes(Fact);
        Lhs.BPCs.push_back({BV, static_cast<unsigned>(PredPos), V, C});
      }
    }
  }

  void harvestPcs(int RootBlock) {
    for (const EdgeFact &Fact : domFacts(RootBlock)) {
      auto [V, C] = factNodes(Fact);
      Lhs.PCs.push_back({V, C});
    }
  }
};

} // namespace

ExtractionResult extractCandidates(const CfgFunction &F,
                                   const ExtractionConfig &Cfg) {
  ExtractionResult Out;
  for (size_t BI = 0; BI < F.Blocks.size(); ++BI) {
    const CfgBlock &B = F.Blocks[BI];
    std::vector<const CfgInst *> Roots;
    for (const CfgInst &Phi : B.Phis)
      Roots.push_back(&Phi);
    for (const CfgInst &I : B.Insts)
      Roots.push_back(&I);
    for (size_t Idx = 0; Idx < Roots.size(); ++Idx) {
      const CfgInst *RootInst = Roots[Idx];
      if (kindFromName(RootInst->Op) &&
          isWithOverflow(*kindFromName(RootInst->Op)))
        continue; // tuples are not integer-typed roots
      ++Out.Total;
      Walker W(F, Cfg);
      W.Lhs.Root = W.translate(RootInst);
      if (Cfg.HarvestPcs)
        W.harvestPcs(static_cast<int>(BI));

      Candidate C;
      C.Lhs = canonicalize(W.Lhs);
      C.Site = {F.Name, B.Label, static_cast<int>(Idx)};
      std::string Serialized = printLhs(C.Lhs);
      if (Serialized.size() > Cfg.MaxSerializedBytes) {
        ++Out.Dropped;
        continue;
      }
      Out.Candidates.push_back(std::move(C));
    }
  }
  return Out;
}

Candidate canonicalizeCandidate(Candidate C) {
  C.Lhs = canonicalize(C.Lhs);
  return C;
}

} // namespace sopt
