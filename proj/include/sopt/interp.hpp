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

#ifndef SOPT_INTERP_HPP
#define SOPT_INTERP_HPP

#include "sopt/ir.hpp"

#include <map>
#include <optional>

namespace sopt {

// Concrete bindings for every free Var and every Block's chosen predecessor.
struct Env {
  std::map<const Inst *, uint64_t> Vars;
  std::map<const Inst *, unsigned> BlockChoices;
};

// The evaluator keeps two layers: a total value (matching SMT-LIB's total
// bitvector semantics, e.g. bvudiv x 0 = all-ones) and poison/UB flags.
// The paper-level result is derived from both.
struct EvalValue {
  uint64_t Val = 0;
  uint64_t Flag = 0; // overflow bit of a with.overflow tuple
  bool IsTuple = false;
  bool Poison = false;
  bool UB = false;

  bool defined() const { return !Poison && !UB; }
};

struct EvalResult {
  enum class K { Value, Tuple, Poison, ImmediateUB };
  K Kind = K::Value;
  uint64_t Val = 0;
  uint64_t Flag = 0;

  bool isValue() const { return Kind == K::Value; }
  bool defined() const { return Kind == K::Value || Kind == K::Tuple; }
  bool operator==(const EvalResult &O) const {
    if (Kind != O.Kind)
      return false;
    if (Kind == K::Value)
      return Val == O.Val;
    if (Kind == K::Tuple)
      return Val == O.Val && Flag == O.Flag;
    return true;
  }
};

std::string formatEvalResult(const EvalResult &R);

// Total-layer evaluation including poison/UB tracking. Env must bind every
// reachable Var and Block.
EvalValue evalTotal(const Inst *Root, const Env &E);

// Paper-level semantics: poison propagates through everything but the
// unselected arms of phi/select; division by zero is immediate UB.
EvalResult eval(const Inst *Root, const Env &E);

struct LhsEval {
  bool Constrained = false;
  EvalResult Result;
};

// Constrained iff every pc holds (both sides defined and equal) and every
// blockpc whose predecessor index matches the env's choice holds.
LhsEval evalLHS(const LeftHandSide &Lhs, const Env &E);

struct TableRow {
  Env E;
  bool Constrained;
  EvalResult Result;
};

struct ExhaustiveTable {
  std::vector<TableRow> Rows;
  std::vector<Inst *> Vars;   // enumeration order
  std::vector<Inst *> Blocks; // enumeration order
};

// Enumerates every env of the LHS. Returns nullopt when the total input
// entropy (var bits plus block-choice bits) exceeds MaxBits.
std::optional<ExhaustiveTable> exhaustiveTable(const LeftHandSide &Lhs,
                                               unsigned MaxBits = 20);

std::string tableCsv(const ExhaustiveTable &T);

} // namespace sopt

#endif // SOPT_INTERP_HPP
