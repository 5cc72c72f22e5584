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

#include "sopt/solver.hpp"

#include "subprocess.hpp"

#include <cassert>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace sopt {

const char *ubPolicyName(UbPolicy P) {
  return P == UbPolicy::Exploit ? "exploit-ub" : "no-exploit-ub";
}

// ---------------------------------------------------------------------------
// Term construction helpers

std::string smtBvLiteral(uint64_t V, unsigned W) {
  V = maskToWidth(V, W);
  if (W % 4 == 0) {
    static const char *Hex = "0123456789abcdef";
    std::string Digits;
    for (unsigned I = 0; I < W / 4; ++I)
      Digits.push_back(Hex[(V >> (W - 4 * (I + 1))) & 0xf]);
    return "#x" + Digits;
  }
  std::string Bits;
  for (unsigned I = 0; I < W; ++I)
    Bits.push_back(((V >> (W - 1 - I)) & 1) ? '1' : '0');
  return "#b" + Bits;
}

namespace {

std::string andTerm(const std::vector<std::string> &Terms) {
  std::vector<std::string> Keep;
  for (const auto &T : Terms)
    if (T != "true")
      Keep.push_back(T);
  if (Keep.empty())
    return "true";
  if (Keep.size() == 1)
    return Keep[0];
  std::string Out = "(and";
  for (const auto &T : Keep)
    Out += " " + T;
  return Out + ")";
}

std::string extend(const char *Op, unsigned By, const std::string &A) {
  return "((_ " + std::string(Op) + " " + std::to_string(By) + ") " + A + ")";
}

std::string bit(const std::string &A, unsigned I) {
  return "((_ extract " + std::to_string(I) + " " + std::to_string(I) + ") " +
         A + ")";
}

// Positive no-overflow predicate for checked/flagged arithmetic.
std::string noOverflowTerm(Kind K, unsigned W, const std::string &A,
                           const std::string &B) {
  switch (K) {
  case Kind::AddNSW:
  case Kind::SAddWithOverflow:
    return "(= " + extend("sign_extend", 1, "(bvadd " + A + " " + B + ")") +
           " (bvadd " + extend("sign_extend", 1, A) + " " +
           extend("sign_extend", 1, B) + "))";
  case Kind::AddNUW:
  case Kind::UAddWithOverflow:
    return "(= " + extend("zero_extend", 1, "(bvadd " + A + " " + B + ")") +
           " (bvadd " + extend("zero_extend", 1, A) + " " +
           extend("zero_extend", 1, B) + "))";
  case Kind::SubNSW:
  case Kind::SSubWithOverflow:
    return "(= " + extend("sign_extend", 1, "(bvsub " + A + " " + B + ")") +
           " (bvsub " + extend("sign_extend", 1, A) + " " +
           extend("sign_extend", 1, B) + "))";
  case Kind::SubNUW:
  case Kind::USubWithOverflow:
    return "(bvule " + B + " " + A + ")";
  case Kind::MulNSW:
  case Kind::SMulWithOverflow:
    return "(= " + extend("sign_extend", W, "(bvmul " + A + " " + B + ")") +
           " (bvmul " + extend("sign_extend", W, A) + " " +
           extend("sign_extend", W, B) + "))";
  case Kind::MulNUW:
  case Kind::UMulWithOverflow:
    return "(= " + extend("zero_extend", W, "(bvmul " + A + " " + B + ")") +
           " (bvmul " + extend("zero_extend", W, A) + " " +
           extend("zero_extend", W, B) + "))";
  default:
    assert(false && "not a flagged op");
    return "true";
  }
}

std::string boolToBit(const std::string &Cond) {
  return "(ite " + Cond + " #b1 #b0)";
}

} // namespace

std::string smtValueTerm(Kind K, unsigned W, unsigned OpWidth,
                         const std::vector<std::string> &Ops) {
  assert(!Ops.empty());
  const std::string &A = Ops.front();
  switch (K) {
  case Kind::Add:
  case Kind::AddNSW:
  case Kind::AddNUW:
  case Kind::AddNSWNUW:
  case Kind::SAddWithOverflow:
  case Kind::UAddWithOverflow:
    return "(bvadd " + Ops[0] + " " + Ops[1] + ")";
  case Kind::Sub:
  case Kind::SubNSW:
  case Kind::SubNUW:
  case Kind::SubNSWNUW:
  case Kind::SSubWithOverflow:
  case Kind::USubWithOverflow:
    return "(bvsub " + Ops[0] + " " + Ops[1] + ")";
  case Kind::Mul:
  case Kind::MulNSW:
  case Kind::MulNUW:
  case Kind::MulNSWNUW:
  case Kind::SMulWithOverflow:
  case Kind::UMulWithOverflow:
    return "(bvmul " + Ops[0] + " " + Ops[1] + ")";
  case Kind::UDiv:
  case Kind::UDivExact:
    return "(bvudiv " + Ops[0] + " " + Ops[1] + ")";
  case Kind::SDiv:
  case Kind::SDivExact:
    return "(bvsdiv " + Ops[0] + " " + Ops[1] + ")";
  case Kind::URem:
    return "(bvurem " + Ops[0] + " " + Ops[1] + ")";
  case Kind::SRem:
    return "(bvsrem " + Ops[0] + " " + Ops[1] + ")";
  case Kind::Shl:
  case Kind::ShlNSW:
  case Kind::ShlNUW:
  case Kind::ShlNSWNUW:
    return "(bvshl " + Ops[0] + " " + Ops[1] + ")";
  case Kind::LShr:
  case Kind::LShrExact:
    return "(bvlshr " + Ops[0] + " " + Ops[1] + ")";
  case Kind::AShr:
  case Kind::AShrExact:
    return "(bvashr " + Ops[0] + " " + Ops[1] + ")";
  case Kind::And:
    return "(bvand " + Ops[0] + " " + Ops[1] + ")";
  case Kind::Or:
    return "(bvor " + Ops[0] + " " + Ops[1] + ")";
  case Kind::Xor:
    return "(bvxor " + Ops[0] + " " + Ops[1] + ")";
  case Kind::Select:
    return "(ite (= " + Ops[0] + " #b1) " + Ops[1] + " " + Ops[2] + ")";
  case Kind::ZExt:
    return extend("zero_extend", W - OpWidth, A);
  case Kind::SExt:
    return extend("sign_extend", W - OpWidth, A);
  case Kind::Trunc:
    return "((_ extract " + std::to_string(W - 1) + " 0) " + A + ")";
  case Kind::Eq:
    return boolToBit("(= " + Ops[0] + " " + Ops[1] + ")");
  case Kind::Ne:
    return boolToBit("(distinct " + Ops[0] + " " + Ops[1] + ")");
  case Kind::Ult:
    return boolToBit("(bvult " + Ops[0] + " " + Ops[1] + ")");
  case Kind::Slt:
    return boolToBit("(bvslt " + Ops[0] + " " + Ops[1] + ")");
  case Kind::Ule:
    return boolToBit("(bvule " + Ops[0] + " " + Ops[1] + ")");
  case Kind::Sle:
    return boolToBit("(bvsle " + Ops[0] + " " + Ops[1] + ")");
  case Kind::CtPop: {
    if (W == 1)
      return A;
    std::string Out = "(bvadd";
    for (unsigned I = 0; I < W; ++I)
      Out += " " + extend("zero_extend", W - 1, bit(A, I));
    return Out + ")";
  }
  case Kind::BSwap: {
    if (W == 8)
      return A;
    std::string Out = "(concat";
    for (unsigned Byte = 0; Byte < W / 8; ++Byte)
      Out += " ((_ extract " + std::to_string(8 * Byte + 7) + " " +
             std::to_string(8 * Byte) + ") " + A + ")";
    return Out + ")";
  }
  case Kind::Cttz: {
    std::string Acc = smtBvLiteral(W, W);
    for (int I = static_cast<int>(W) - 1; I >= 0; --I)
      Acc = "(ite (= " + bit(A, I) + " #b1) " + smtBvLiteral(I, W) + " " +
            Acc + ")";
    return Acc;
  }
  case Kind::Ctlz: {
    std::string Acc = smtBvLiteral(W, W);
    for (unsigned I = 0; I < W; ++I)
      Acc = "(ite (= " + bit(A, I) + " #b1) " + smtBvLiteral(W - 1 - I, W) +
            " " + Acc + ")";
    return Acc;
  }
  default:
    assert(false && "no value term for this kind");
    return A;
  }
}

std::string smtFlagTerm(Kind K, unsigned W, const std::vector<std::string> &Ops) {
  assert(isWithOverflow(K));
  return "(ite " + noOverflowTerm(K, W, Ops[0], Ops[1]) + " #b0 #b1)";
}

std::string smtLocalDefTerm(Kind K, unsigned W,
                            const std::vector<std::string> &Ops) {
  auto nonZero = [&](const std::string &T) {
    return "(distinct " + T + " " + smtBvLiteral(0, W) + ")";
  };
  auto noSdivOverflow = [&]() {
    return "(not (and (= " + Ops[0] + " " +
           smtBvLiteral(uint64_t(1) << (W - 1), W) + ") (= " + Ops[1] + " " +
           smtBvLiteral(~uint64_t(0), W) + ")))";
  };
  auto shiftInRange = [&]() {
    return "(bvult " + Ops[1] + " " + smtBvLiteral(W, W) + ")";
  };
  switch (K) {
  case Kind::AddNSW:
  case Kind::AddNUW:
  case Kind::SubNSW:
  case Kind::SubNUW:
  case Kind::MulNSW:
  case Kind::MulNUW:
    return noOverflowTerm(K, W, Ops[0], Ops[1]);
  case Kind::AddNSWNUW:
    return andTerm({noOverflowTerm(Kind::AddNSW, W, Ops[0], Ops[1]),
                    noOverflowTerm(Kind::AddNUW, W, Ops[0], Ops[1])});
  case Kind::SubNSWNUW:
    return andTerm({noOverflowTerm(Kind::SubNSW, W, Ops[0], Ops[1]),
                    noOverflowTerm(Kind::SubNUW, W, Ops[0], Ops[1])});
  case Kind::MulNSWNUW:
    return andTerm({noOverflowTerm(Kind::MulNSW, W, Ops[0], Ops[1]),
                    noOverflowTerm(Kind::MulNUW, W, Ops[0], Ops[1])});
  case Kind::UDiv:
  case Kind::URem:
    return nonZero(Ops[1]);
  case Kind::SDiv:
  case Kind::SRem:
    return andTerm({nonZero(Ops[1]), noSdivOverflow()});
  case Kind::UDivExact:
    return andTerm({nonZero(Ops[1]), "(= (bvurem " + Ops[0] + " " + Ops[1] +
                                         ") " + smtBvLiteral(0, W) + ")"});
  case Kind::SDivExact:
    return andTerm({nonZero(Ops[1]), noSdivOverflow(),
                    "(= (bvsrem " + Ops[0] + " " + Ops[1] + ") " +
                        smtBvLiteral(0, W) + ")"});
  case Kind::Shl:
  case Kind::LShr:
  case Kind::AShr:
    return shiftInRange();
  case Kind::ShlNSW:
    return andTerm({shiftInRange(), "(= (bvashr (bvshl " + Ops[0] + " " +
                                        Ops[1] + ") " + Ops[1] + ") " +
                                        Ops[0] + ")"});
  case Kind::ShlNUW:
    return andTerm({shiftInRange(), "(= (bvlshr (bvshl " + Ops[0] + " " +
                                        Ops[1] + ") " + Ops[1] + ") " +
                                        Ops[0] + ")"});
  case Kind::ShlNSWNUW:
    return andTerm({smtLocalDefTerm(Kind::ShlNSW, W, Ops),
                    smtLocalDefTerm(Kind::ShlNUW, W, Ops)});
  case Kind::LShrExact:
    return andTerm({shiftInRange(), "(= (bvshl (bvlshr " + Ops[0] + " " +
                                        Ops[1] + ") " + Ops[1] + ") " +
                                        Ops[0] + ")"});
  case Kind::AShrExact:
    return andTerm({shiftInRange(), "(= (bvshl (bvashr " + Ops[0] + " " +
                                        Ops[1] + ") " + Ops[1] + ") " +
                                        Ops[0] + ")"});
  default:
    return "true";
  }
}

// ---------------------------------------------------------------------------
// SmtEncoder

std::string SmtEncoder::val(const Inst *I) {
  if (I->K == Kind::Const)
    return smtBvLiteral(I->Val, I->Width);
  emitNode(I);
  unsigned Id = Ids.at(I);
  if (isWithOverflow(I->K))
    return "t" + std::to_string(Id) + "v";
  return "t" + std::to_string(Id);
}

std::string SmtEncoder::flag(const Inst *I) {
  assert(isWithOverflow(I->K));
  emitNode(I);
  return "t" + std::to_string(Ids.at(I)) + "f";
}

std::string SmtEncoder::def(const Inst *I) {
  if (I->K == Kind::Const || I->K == Kind::Var)
    return "true";
  emitNode(I);
  return "d" + std::to_string(Ids.at(I));
}

std::string SmtEncoder::selector(const Inst *B) {
  assert(B->K == Kind::Block);
  auto It = Ids.find(B);
  if (It != Ids.end())
    return "s" + std::to_string(It->second);
  unsigned Id = Next++;
  Ids.emplace(B, Id);
  unsigned N = B->numPreds(), SelW = 1;
  while ((1u << SelW) < N)
    ++SelW;
  std::string Sym = "s" + std::to_string(Id);
  Decls += "(declare-const " + Sym + " (_ BitVec " + std::to_string(SelW) +
           "))\n";
  if ((1u << SelW) != N)
    RangeAsserts.push_back("(bvult " + Sym + " " + smtBvLiteral(N, SelW) +
                           ")");
  BlockSyms.emplace_back(Sym, B);
  return Sym;
}

std::string SmtEncoder::selectorRange() const { return andTerm(RangeAsserts); }

void SmtEncoder::emitNode(const Inst *I) {
  if (Ids.count(I))
    return;
  assert(I->K != Kind::Const && I->K != Kind::Block);

  if (I->K == Kind::Var) {
    unsigned Id = Next++;
    Ids.emplace(I, Id);
    std::string Sym = "t" + std::to_string(Id);
    Decls += "(declare-const " + Sym + " (_ BitVec " +
             std::to_string(I->Width) + "))\n";
    VarSyms.emplace_back(Sym, I);
    return;
  }

  // Operands first; phi routes through its selector.
  std::vector<std::string> OpVals, OpDefs;
  std::string Sel;
  if (I->K == Kind::Phi) {
    Sel = selector(I->Ops[0]);
    for (size_t J = 1; J < I->Ops.size(); ++J) {
      OpVals.push_back(val(I->Ops[J]));
      OpDefs.push_back(def(I->Ops[J]));
    }
  } else if (I->K == Kind::ExtractValue) {
    const Inst *Tuple = I->Ops[0];
    OpVals.push_back(I->Ops[1]->Val == 0 ? val(Tuple) : flag(Tuple));
    OpDefs.push_back(def(Tuple));
  } else {
    for (const Inst *Op : I->Ops) {
      OpVals.push_back(val(Op));
      OpDefs.push_back(def(Op));
    }
  }

  unsigned Id = Next++;
  Ids.emplace(I, Id);
  std::string Base = "t" + std::to_string(Id);
  unsigned OpWidth = I->Ops.empty() ? 0 : I->Ops[0]->Width;

  std::string ValTerm, DefTerm;
  unsigned SelW = 0;
  if (I->K == Kind::Phi) {
    const Inst *B = I->Ops[0];
    unsigned N = B->numPreds();
    SelW = 1;
    while ((1u << SelW) < N)
      ++SelW;
    ValTerm = OpVals.back();
    DefTerm = OpDefs.back();
    for (int J = static_cast<int>(N) - 2; J >= 0; --J) {
      std::string Test = "(= " + Sel + " " + smtBvLiteral(J, SelW) + ")";
      ValTerm = "(ite " + Test + " " + OpVals[J] + " " + ValTerm + ")";
      DefTerm = "(ite " + Test + " " + OpDefs[J] + " " + DefTerm + ")";
    }
  } else if (I->K == Kind::ExtractValue) {
    ValTerm = OpVals[0];
    DefTerm = OpDefs[0];
  } else if (I->K == Kind::Select) {
    ValTerm = smtValueTerm(I->K, I->Width, OpWidth, OpVals);
    DefTerm = andTerm({OpDefs[0], "(ite (= " + OpVals[0] + " #b1) " +
                                      OpDefs[1] + " " + OpDefs[2] + ")"});
  } else {
    ValTerm = smtValueTerm(I->K, I->Width, OpWidth, OpVals);
    std::vector<std::string> Parts = OpDefs;
    Parts.push_back(smtLocalDefTerm(I->K, I->Width, OpVals));
    DefTerm = andTerm(Parts);
  }

  std::string BvSort = "(_ BitVec " + std::to_string(I->Width) + ")";
  if (isWithOverflow(I->K)) {
    Decls += "(define-fun " + Base + "v () " + BvSort + " " + ValTerm + ")\n";
    Decls += "(define-fun " + Base + "f () (_ BitVec 1) " +
             smtFlagTerm(I->K, I->Width, OpVals) + ")\n";
  } else {
    Decls += "(define-fun " + Base + " () " + BvSort + " " + ValTerm + ")\n";
  }
  Decls += "(define-fun d" + std::to_string(Id) + " () Bool " + DefTerm +
           ")\n";
}

// ---------------------------------------------------------------------------
// LHS encoding and the equivalence query

LhsEncoding encodeLHS(const LeftHandSide &Lhs, UbPolicy, SmtEncoder &Enc) {
  LhsEncoding Out;
  std::vector<std::string> Constraints;
  for (const auto &PC : Lhs.PCs) {
    std::string V = Enc.val(PC.Value), X = Enc.val(PC.Expected);
    Constraints.push_back(andTerm(
        {Enc.def(PC.Value), Enc.def(PC.Expected), "(= " + V + " " + X + ")"}));
  }
  for (const auto &B : Lhs.BPCs) {
    std::string Sel = Enc.selector(B.B);
    unsigned N = B.B->numPreds(), SelW = 1;
    while ((1u << SelW) < N)
      ++SelW;
    std::string Body = andTerm({Enc.def(B.Value), Enc.def(B.Expected),
                                "(= " + Enc.val(B.Value) + " " +
                                    Enc.val(B.Expected) + ")"});
    Constraints.push_back("(or (distinct " + Sel + " " +
                          smtBvLiteral(B.PredIndex, SelW) + ") " + Body + ")");
  }
  Out.RootVal = Enc.val(Lhs.Root);
  Out.RootDef = Enc.def(Lhs.Root);
  Out.Constraint = andTerm(Constraints);
  Out.Decls = Enc.decls();
  Out.VarSyms = Enc.varSymbols();
  Out.BlockSyms = Enc.blockSymbols();
  return Out;
}

EquivalenceQuery buildEquivalenceQuery(const LeftHandSide &Lhs,
                                       const RightHandSide &Rhs,
                                       UbPolicy Policy) {
  SmtEncoder Enc;
  LhsEncoding L = encodeLHS(Lhs, Policy, Enc);
  std::string RVal = Enc.val(Rhs.Root);
  std::string RDef = Enc.def(Rhs.Root);

  EquivalenceQuery Out;
  Out.VarSyms = Enc.varSymbols();
  Out.BlockSyms = Enc.blockSymbols();

  std::ostringstream OS;
  OS << "(set-logic BV)\n" << Enc.decls();
  std::string Range = Enc.selectorRange();
  if (Range != "true")
    OS << "(assert " << Range << ")\n";
  if (L.Constraint != "true")
    OS << "(assert " << L.Constraint << ")\n";
  if (Policy == UbPolicy::Exploit && L.RootDef != "true")
    OS << "(assert " << L.RootDef << ")\n";
  OS << "(assert (not (and " << RDef << " (= " << L.RootVal << " " << RVal
     << "))))\n";
  OS << "(check-sat)\n";

  Out.Q.K = Query::Kind::Equivalence;
  for (const auto &[Sym, I] : Out.VarSyms)
    Out.Q.VarOrder.push_back(Sym);
  for (const auto &[Sym, I] : Out.BlockSyms)
    Out.Q.VarOrder.push_back(Sym);
  if (!Out.Q.VarOrder.empty()) {
    OS << "(get-value (";
    for (size_t I = 0; I < Out.Q.VarOrder.size(); ++I)
      OS << (I ? " " : "") << Out.Q.VarOrder[I];
    OS << "))\n";
  }
  Out.Q.Text = OS.str();
  return Out;
}

Env envFromModel(
    const Model &M,
    const std::vector<std::pair<std::string, const Inst *>> &Vars,
    const std::vector<std::pair<std::string, const Inst *>> &Blocks) {
  Env E;
  for (const auto &[Sym, I] : Vars) {
    auto It = M.Values.find(Sym);
    E.Vars[I] = maskToWidth(It == M.Values.end() ? 0 : It->second, I->Width);
  }
  for (const auto &[Sym, B] : Blocks) {
    auto It = M.Values.find(Sym);
    uint64_t V = It == M.Values.end() ? 0 : It->second;
    if (V >= B->numPreds())
      V = 0;
    E.BlockChoices[B] = static_cast<unsigned>(V);
  }
  return E;
}

// ---------------------------------------------------------------------------
// Solver output parsing

namespace {

struct SExpr {
  std::string Atom;
  std::vector<SExpr> List;
  bool IsAtom = false;
};

class SExprParser {
public:
  explicit SExprParser(std::string_view S) : S(S) {}

  std::vector<SExpr> parseAll() {
    std::vector<SExpr> Out;
    while (true) {
      skipWs();
      if (Pos >= S.size())
        break;
      Out.push_back(parseOne());
    }
    return Out;
  }

private:
  void skipWs() {
    while (Pos < S.size() &&
           (std::isspace((unsigned char)S[Pos]) || S[Pos] == ';')) {
      if (S[Pos] == ';')
        while (Pos < S.size() && S[Pos] != '\n')
          ++Pos;
      else
        ++Pos;
    }
  }

  SExpr parseOne() {
    skipWs();
    SExpr E;
    if (Pos >= S.size())
      return E;
    if (S[Pos] == '(') {
      ++Pos;
      while (true) {
        skipWs();
        if (Pos >= S.size())
          break;
        if (S[Pos] == ')') {
          ++Pos;
          break;
        }
        E.List.push_back(parseOne());
      }
      return E;
    }
    if (S[Pos] == '"') {
      size_t Start = Pos++;
      while (Pos < S.size() && S[Pos] != '"')
        ++Pos;
      if (Pos < S.size())
        ++Pos;
      E.IsAtom = true;
      E.Atom = std::string(S.substr(Start, Pos - Start));
      return E;
    }
    size_t Start = Pos;
    while (Pos < S.size() && !std::isspace((unsigned char)S[Pos]) &&
           S[Pos] != '(' && S[Pos] != ')')
      ++Pos;
    E.IsAtom = true;
    E.Atom = std::string(S.substr(Start, Pos - Start));
    return E;
  }

  std::string_view S;
  size_t Pos = 0;
};

bool parseBvValue(const SExpr &E, uint64_t &Out) {
  if (E.IsAtom) {
    const std::string &A = E.Atom;
    if (A.size() > 2 && A[0] == '#' && A[1] == 'x') {
      Out = 0;
      for (size_t I = 2; I < A.size(); ++I) {
        char C = static_cast<char>(std::tolower((unsigned char)A[I]));
        unsigned D = std::isdigit((unsigned char)C) ? C - '0' : C - 'a' + 10;
        Out = (Out << 4) | D;
      }
      return true;
    }
    if (A.size() > 2 && A[0] == '#' && A[1] == 'b') {
      Out = 0;
      for (size_t I = 2; I < A.size(); ++I)
        Out = (Out << 1) | (A[I] == '1' ? 1 : 0);
      return true;
    }
    if (A == "true") {
      Out = 1;
      return true;
    }
    if (A == "false") {
      Out = 0;
      return true;
    }
    return false;
  }
  // (_ bvN W)
  if (E.List.size() == 3 && E.List[0].IsAtom && E.List[0].Atom == "_" &&
      E.List[1].IsAtom && E.List[1].Atom.rfind("bv", 0) == 0) {
    Out = std::strtoull(E.List[1].Atom.c_str() + 2, nullptr, 10);
    return true;
  }
  return false;
}

} // namespace

SolverConfig SolverConfig::discover() {
  SolverConfig C;
  if (const char *EnvSpec = std::getenv("SOPT_SOLVER")) {
    std::istringstream IS(EnvSpec);
    std::string Tok;
    while (IS >> Tok) {
      if (C.Path.empty())
        C.Path = Tok;
      else
        C.Args.push_back(Tok);
    }
    if (!C.Path.empty())
      return C;
  }
  if (const char *PathEnv = std::getenv("PATH")) {
    std::string Paths(PathEnv);
    size_t Pos = 0;
    while (Pos <= Paths.size()) {
      size_t Colon = Paths.find(':', Pos);
      std::string Dir = Paths.substr(
          Pos, Colon == std::string::npos ? std::string::npos : Colon - Pos);
      if (!Dir.empty()) {
        std::string Candidate = Dir + "/z3";
        if (access(Candidate.c_str(), X_OK) == 0) {
          C.Path = Candidate;
          C.Args = {"-in"};
          return C;
        }
      }
      if (Colon == std::string::npos)
        break;
      Pos = Colon + 1;
    }
  }
  return C;
}

SolverVerdict SolverRunner::run(const Query &Q, unsigned TimeoutMillis) {
  Calls.fetch_add(1);
  SolverVerdict V;
  if (!Config.valid()) {
    V.K = SolverVerdict::Kind::Error;
    V.Message = "no solver configured (set --solver or SOPT_SOLVER)";
    return V;
  }

  if (!Config.DumpDir.empty()) {
    uint64_t Seq = DumpSeq.fetch_add(1);
    const char *KindTag = Q.K == Query::Kind::Equivalence ? "equiv"
                          : Q.K == Query::Kind::CegisFind ? "find"
                                                          : "verify";
    char Name[64];
    snprintf(Name, sizeof(Name), "/q%06llu_%s.smt2",
             static_cast<unsigned long long>(Seq), KindTag);
    std::ofstream OS(Config.DumpDir + Name);
    OS << Q.Text;
  }

  ExecResult R = runProcess(Config.Path, Config.Args, Q.Text, TimeoutMillis);
  if (R.TimedOut) {
    V.K = SolverVerdict::Kind::Timeout;
    return V;
  }
  if (R.SpawnFailed) {
    V.K = SolverVerdict::Kind::Error;
    V.Message = "failed to spawn solver '" + Config.Path + "'";
    return V;
  }

  // Find the verdict line.
  std::istringstream IS(R.Out);
  std::string Line, Verdict;
  size_t VerdictEnd = 0, Consumed = 0;
  while (std::getline(IS, Line)) {
    Consumed += Line.size() + 1;
    std::string Trimmed;
    for (char C : Line)
      if (!std::isspace((unsigned char)C))
        Trimmed.push_back(C);
    if (Trimmed == "sat" || Trimmed == "unsat" || Trimmed == "unknown" ||
        Trimmed == "timeout") {
      Verdict = Trimmed;
      VerdictEnd = Consumed;
      break;
    }
  }

  if (Verdict == "unsat") {
    V.K = SolverVerdict::Kind::Unsat;
    return V;
  }
  if (Verdict == "timeout") {
    V.K = SolverVerdict::Kind::Timeout;
    return V;
  }
  if (Verdict == "unknown") {
    V.K = SolverVerdict::Kind::Error;
    V.Message = "solver returned unknown";
    return V;
  }
  if (Verdict != "sat") {
    V.K = SolverVerdict::Kind::Error;
    std::string Snippet = R.Out.substr(0, 200);
    if (Snippet.empty())
      Snippet = R.Err.substr(0, 200);
    V.Message = "unrecognized solver output (exit " +
                std::to_string(R.ExitCode) + "): " + Snippet;
    return V;
  }

  V.K = SolverVerdict::Kind::Sat;
  if (Q.VarOrder.empty())
    return V;

  SExprParser P(std::string_view(R.Out).substr(VerdictEnd));
  for (const SExpr &Top : P.parseAll()) {
    if (Top.IsAtom)
      continue;
    for (const SExpr &Pair : Top.List) {
      if (Pair.IsAtom || Pair.List.size() != 2 || !Pair.List[0].IsAtom)
        continue;
      uint64_t Val = 0;
      if (parseBvValue(Pair.List[1], Val))
        V.M.Values[Pair.List[0].Atom] = Val;
    }
  }
  for (const auto &Sym : Q.VarOrder) {
    if (!V.M.Values.count(Sym)) {
      V.K = SolverVerdict::Kind::Error;
      V.Message = "model missing symbol " + Sym;
      return V;
    }
  }
  return V;
}

} // namespace sopt
