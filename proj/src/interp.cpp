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

#include "sopt/interp.hpp"

#include <cassert>
#include <sstream>
#include <unordered_map>

namespace sopt {

namespace {

uint64_t signBit(uint64_t V, unsigned W) { return (V >> (W - 1)) & 1; }

int64_t toSigned(uint64_t V, unsigned W) {
  if (W < 64 && signBit(V, W))
    return static_cast<int64_t>(V | ~((uint64_t(1) << W) - 1));
  return static_cast<int64_t>(V);
}

uint64_t minSigned(unsigned W) { return uint64_t(1) << (W - 1); }

bool uaddOv(uint64_t A, uint64_t B, unsigned W) {
  return maskToWidth(A + B, W) < A;
}
bool saddOv(uint64_t A, uint64_t B, unsigned W) {
  __int128 R = (__int128)toSigned(A, W) + toSigned(B, W);
  return R < -(__int128)minSigned(W) || R >= (__int128)minSigned(W);
}
bool usubOv(uint64_t A, uint64_t B, unsigned) { return B > A; }
bool ssubOv(uint64_t A, uint64_t B, unsigned W) {
  __int128 R = (__int128)toSigned(A, W) - toSigned(B, W);
  return R < -(__int128)minSigned(W) || R >= (__int128)minSigned(W);
}
bool umulOv(uint64_t A, uint64_t B, unsigned W) {
  unsigned __int128 R = (unsigned __int128)A * B;
  return W >= 64 ? (R >> 64) != 0 : R >= ((unsigned __int128)1 << W);
}
bool smulOv(uint64_t A, uint64_t B, unsigned W) {
  __int128 R = (__int128)toSigned(A, W) * toSigned(B, W);
  return R < -(__int128)minSigned(W) || R >= (__int128)minSigned(W);
}

struct Evaluator {
  const Env &E;
  std::unordered_map<const Inst *, EvalValue> Memo;

  explicit Evaluator(const Env &E) : E(E) {}

  EvalValue get(const Inst *I) {
    auto It = Memo.find(I);
    if (It != Memo.end())
      return It->second;
    EvalValue V = compute(I);
    Memo.emplace(I, V);
    return V;
  }

  EvalValue compute(const Inst *I) {
    unsigned W = I->Width;
    switch (I->K) {
    case Kind::Var: {
      auto It = E.Vars.find(I);
      assert(It != E.Vars.end() && "unbound variable");
      return {maskToWidth(It->second, W), 0, false, false, false};
    }
    case Kind::Const:
      return {I->Val, 0, false, false, false};
    case Kind::Block:
      assert(false && "block values are not evaluated directly");
      return {};
    case Kind::Phi: {
      auto It = E.BlockChoices.find(I->Ops[0]);
      assert(It != E.BlockChoices.end() && "unbound block choice");
      unsigned Idx = It->second;
      assert(Idx < I->Ops[0]->numPreds() && "block choice out of range");
      return get(I->Ops[Idx + 1]);
    }
    case Kind::Select: {
      EvalValue C = get(I->Ops[0]);
      EvalValue Arm = get(I->Ops[C.Val == 1 ? 1 : 2]);
      EvalValue R = Arm;
      R.UB = C.UB || Arm.UB;
      R.Poison = !R.UB && (C.Poison || Arm.Poison);
      return R;
    }
    default:
      break;
    }

    // Strict operations: evaluate all operands first.
    std::vector<EvalValue> Ops;
    Ops.reserve(I->Ops.size());
    bool OpUB = false, OpPoison = false;
    for (const Inst *Op : I->Ops) {
      Ops.push_back(get(Op));
      OpUB |= Ops.back().UB;
      OpPoison |= Ops.back().Poison;
    }

    uint64_t A = Ops.size() > 0 ? Ops[0].Val : 0;
    uint64_t B = Ops.size() > 1 ? Ops[1].Val : 0;
    EvalValue R;
    bool LocalPoison = false, LocalUB = false;

    auto shiftAmtOk = [&]() { return B < W; };

    switch (I->K) {
    case Kind::Add:
      R.Val = maskToWidth(A + B, W);
      break;
    case Kind::AddNSW:
      R.Val = maskToWidth(A + B, W);
      LocalPoison = saddOv(A, B, W);
      break;
    case Kind::AddNUW:
      R.Val = maskToWidth(A + B, W);
      LocalPoison = uaddOv(A, B, W);
      break;
    case Kind::AddNSWNUW:
      R.Val = maskToWidth(A + B, W);
      LocalPoison = saddOv(A, B, W) || uaddOv(A, B, W);
      break;
    case Kind::Sub:
      R.Val = maskToWidth(A - B, W);
      break;
    case Kind::SubNSW:
      R.Val = maskToWidth(A - B, W);
      LocalPoison = ssubOv(A, B, W);
      break;
    case Kind::SubNUW:
      R.Val = maskToWidth(A - B, W);
      LocalPoison = usubOv(A, B, W);
      break;
    case Kind::SubNSWNUW:
      R.Val = maskToWidth(A - B, W);
      LocalPoison = ssubOv(A, B, W) || usubOv(A, B, W);
      break;
    case Kind::Mul:
      R.Val = maskToWidth(A * B, W);
      break;
    case Kind::MulNSW:
      R.Val = maskToWidth(A * B, W);
      LocalPoison = smulOv(A, B, W);
      break;
    case Kind::MulNUW:
      R.Val = maskToWidth(A * B, W);
      LocalPoison = umulOv(A, B, W);
      break;
    case Kind::MulNSWNUW:
      R.Val = maskToWidth(A * B, W);
      LocalPoison = smulOv(A, B, W) || umulOv(A, B, W);
      break;
    case Kind::UDiv:
    case Kind::UDivExact:
      if (B == 0) {
        R.Val = maskToWidth(~uint64_t(0), W);
        LocalUB = true;
      } else {
        R.Val = A / B;
        if (I->K == Kind::UDivExact)
          LocalPoison = A % B != 0;
      }
      break;
    case Kind::SDiv:
    case Kind::SDivExact: {
      int64_t SA = toSigned(A, W), SB = toSigned(B, W);
      if (B == 0) {
        R.Val = maskToWidth(SA < 0 ? 1 : ~uint64_t(0), W);
        LocalUB = true;
      } else if (A == minSigned(W) && SB == -1) {
        R.Val = minSigned(W);
        LocalUB = true;
      } else {
        R.Val = maskToWidth(static_cast<uint64_t>(SA / SB), W);
        if (I->K == Kind::SDivExact)
          LocalPoison = SA % SB != 0;
      }
      break;
    }
    case Kind::URem:
      if (B == 0) {
        R.Val = A;
        LocalUB = true;
      } else {
        R.Val = A % B;
      }
      break;
    case Kind::SRem: {
      int64_t SA = toSigned(A, W), SB = toSigned(B, W);
      if (B == 0) {
        R.Val = A;
        LocalUB = true;
      } else if (A == minSigned(W) && SB == -1) {
        R.Val = 0;
        LocalUB = true;
      } else {
        R.Val = maskToWidth(static_cast<uint64_t>(SA % SB), W);
      }
      break;
    }
    case Kind::Shl:
    case Kind::ShlNSW:
    case Kind::ShlNUW:
    case Kind::ShlNSWNUW: {
      R.Val = shiftAmtOk() ? maskToWidth(A << B, W) : 0;
      LocalPoison = !shiftAmtOk();
      if (shiftAmtOk()) {
        if (I->K == Kind::ShlNUW || I->K == Kind::ShlNSWNUW)
          LocalPoison |= (R.Val >> B) != A;
        if (I->K == Kind::ShlNSW || I->K == Kind::ShlNSWNUW) {
          uint64_t Back = maskToWidth(
              static_cast<uint64_t>(toSigned(R.Val, W) >> B), W);
          LocalPoison |= Back != A;
        }
      }
      break;
    }
    case Kind::LShr:
    case Kind::LShrExact:
      R.Val = shiftAmtOk() ? A >> B : 0;
      LocalPoison = !shiftAmtOk();
      if (shiftAmtOk() && I->K == Kind::LShrExact)
        LocalPoison |= maskToWidth(R.Val << B, W) != A;
      break;
    case Kind::AShr:
    case Kind::AShrExact: {
      uint64_t Splat = signBit(A, W) ? maskToWidth(~uint64_t(0), W) : 0;
      R.Val = shiftAmtOk()
                  ? maskToWidth(static_cast<uint64_t>(toSigned(A, W) >>
                                                      (B & 63)),
                                W)
                  : Splat;
      LocalPoison = !shiftAmtOk();
      if (shiftAmtOk() && I->K == Kind::AShrExact)
        LocalPoison |= maskToWidth(R.Val << B, W) != A;
      break;
    }
    case Kind::And:
      R.Val = A & B;
      break;
    case Kind::Or:
      R.Val = A | B;
      break;
    case Kind::Xor:
      R.Val = A ^ B;
      break;
    case Kind::ZExt:
      R.Val = A;
      break;
    case Kind::SExt:
      R.Val = maskToWidth(static_cast<uint64_t>(toSigned(A, I->Ops[0]->Width)),
                          W);
      break;
    case Kind::Trunc:
      R.Val = maskToWidth(A, W);
      break;
    case Kind::Eq:
      R.Val = A == B;
      break;
    case Kind::Ne:
      R.Val = A != B;
      break;
    case Kind::Ult:
      R.Val = A < B;
      break;
    case Kind::Slt:
      R.Val = toSigned(A, I->Ops[0]->Width) < toSigned(B, I->Ops[0]->Width);
      break;
    case Kind::Ule:
      R.Val = A <= B;
      break;
    case Kind::Sle:
      R.Val = toSigned(A, I->Ops[0]->Width) <= toSigned(B, I->Ops[0]->Width);
      break;
    case Kind::SAddWithOverflow:
      R.Val = maskToWidth(A + B, W);
      R.Flag = saddOv(A, B, W);
      R.IsTuple = true;
      break;
    case Kind::UAddWithOverflow:
      R.Val = maskToWidth(A + B, W);
      R.Flag = uaddOv(A, B, W);
      R.IsTuple = true;
      break;
    case Kind::SSubWithOverflow:
      R.Val = maskToWidth(A - B, W);
      R.Flag = ssubOv(A, B, W);
      R.IsTuple = true;
      break;
    case Kind::USubWithOverflow:
      R.Val = maskToWidth(A - B, W);
      R.Flag = usubOv(A, B, W);
      R.IsTuple = true;
      break;
    case Kind::SMulWithOverflow:
      R.Val = maskToWidth(A * B, W);
      R.Flag = smulOv(A, B, W);
      R.IsTuple = true;
      break;
    case Kind::UMulWithOverflow:
      R.Val = maskToWidth(A * B, W);
      R.Flag = umulOv(A, B, W);
      R.IsTuple = true;
      break;
    case Kind::ExtractValue:
      R.Val = I->Ops[1]->Val == 0 ? Ops[0].Val : Ops[0].Flag;
      break;
    case Kind::CtPop:
      R.Val = static_cast<uint64_t>(__builtin_popcountll(A));
      break;
    case Kind::BSwap: {
      uint64_t Out = 0;
      for (unsigned Byte = 0; Byte < W / 8; ++Byte)
        Out |= ((A >> (8 * Byte)) & 0xff) << (8 * (W / 8 - 1 - Byte));
      R.Val = Out;
      break;
    }
    case Kind::Cttz:
      R.Val = A == 0 ? W : static_cast<uint64_t>(__builtin_ctzll(A));
      break;
    case Kind::Ctlz:
      R.Val = A == 0 ? W
                     : static_cast<uint64_t>(__builtin_clzll(A)) - (64 - W);
      break;
    default:
      assert(false && "unhandled kind");
    }

    R.UB = OpUB || LocalUB;
    R.Poison = !R.UB && (OpPoison || LocalPoison);
    return R;
  }
};

EvalResult toResult(const EvalValue &V) {
  EvalResult R;
  if (V.UB) {
    R.Kind = EvalResult::K::ImmediateUB;
  } else if (V.Poison) {
    R.Kind = EvalResult::K::Poison;
  } else if (V.IsTuple) {
    R.Kind = EvalResult::K::Tuple;
    R.Val = V.Val;
    R.Flag = V.Flag;
  } else {
    R.Kind = EvalResult::K::Value;
    R.Val = V.Val;
  }
  return R;
}

} // namespace

std::string formatEvalResult(const EvalResult &R) {
  switch (R.Kind) {
  case EvalResult::K::Value:
    return std::to_string(R.Val);
  case EvalResult::K::Tuple:
    return "{" + std::to_string(R.Val) + "," + std::to_string(R.Flag) + "}";
  case EvalResult::K::Poison:
    return "poison";
  case EvalResult::K::ImmediateUB:
    return "ub";
  }
  return "?";
}

EvalValue evalTotal(const Inst *Root, const Env &E) {
  Evaluator Ev(E);
  return Ev.get(Root);
}

EvalResult eval(const Inst *Root, const Env &E) {
  return toResult(evalTotal(Root, E));
}

LhsEval evalLHS(const LeftHandSide &Lhs, const Env &E) {
  Evaluator Ev(E);
  LhsEval Out;
  Out.Constrained = true;
  for (const auto &PC : Lhs.PCs) {
    EvalValue V = Ev.get(PC.Value), X = Ev.get(PC.Expected);
    if (!V.defined() || !X.defined() || V.Val != X.Val)
      Out.Constrained = false;
  }
  for (const auto &B : Lhs.BPCs) {
    auto It = E.BlockChoices.find(B.B);
    assert(It != E.BlockChoices.end() && "unbound block choice");
    if (It->second != B.PredIndex)
      continue;
    EvalValue V = Ev.get(B.Value), X = Ev.get(B.Expected);
    if (!V.defined() || !X.defined() || V.Val != X.Val)
      Out.Constrained = false;
  }
  Out.Result = toResult(Ev.get(Lhs.Root));
  return Out;
}

std::optional<ExhaustiveTable> exhaustiveTable(const LeftHandSide &Lhs,
                                               unsigned MaxBits) {
  ExhaustiveTable T;
  T.Vars = lhsVars(Lhs);
  T.Blocks = lhsBlocks(Lhs);
  double Bits = 0;
  for (Inst *V : T.Vars)
    Bits += V->Width;
  for (Inst *B : T.Blocks) {
    unsigned N = B->numPreds(), L = 0;
    while ((1u << L) < N)
      ++L;
    Bits += L;
  }
  if (Bits > MaxBits)
    return std::nullopt;

  Env E;
  for (Inst *V : T.Vars)
    E.Vars[V] = 0;
  for (Inst *B : T.Blocks)
    E.BlockChoices[B] = 0;

  while (true) {
    LhsEval Le = evalLHS(Lhs, E);
    T.Rows.push_back({E, Le.Constrained, Le.Result});
    // Odometer step over vars, then block choices.
    size_t I = 0;
    for (; I < T.Vars.size(); ++I) {
      Inst *V = T.Vars[I];
      uint64_t Next = maskToWidth(E.Vars[V] + 1, V->Width);
      E.Vars[V] = Next;
      if (Next != 0)
        break;
    }
    if (I < T.Vars.size())
      continue;
    size_t J = 0;
    for (; J < T.Blocks.size(); ++J) {
      Inst *B = T.Blocks[J];
      unsigned Next = E.BlockChoices[B] + 1;
      if (Next < B->numPreds()) {
        E.BlockChoices[B] = Next;
        break;
      }
      E.BlockChoices[B] = 0;
    }
    if (J == T.Blocks.size())
      break;
  }
  return T;
}

std::string tableCsv(const ExhaustiveTable &T) {
  std::ostringstream OS;
  for (size_t I = 0; I < T.Vars.size(); ++I)
    OS << "v" << I << ",";
  for (size_t I = 0; I < T.Blocks.size(); ++I)
    OS << "b" << I << ",";
  OS << "constrained,result\n";
  for (const auto &Row : T.Rows) {
    for (Inst *V : T.Vars)
      OS << Row.E.Vars.at(V) << ",";
    for (Inst *B : T.Blocks)
      OS << Row.E.BlockChoices.at(B) << ",";
    OS << (Row.Constrained ? 1 : 0) << "," << formatEvalResult(Row.Result)
       << "\n";
  }
  return OS.str();
}

} // namespace sopt
