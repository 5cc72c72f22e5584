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

#ifndef SOPT_SYNTH_HPP
#define SOPT_SYNTH_HPP

#include "sopt/solver.hpp"
#include "sopt/verify.hpp"

namespace sopt {

enum class SynthMode { Full, ConstantsOnly, BoolRootsOnly };

const char *synthModeName(SynthMode M);

struct SynthConfig {
  int MaxCost = 3;
  SynthMode Mode = SynthMode::Full;
  int NumConstComponents = 1;
  // Instruction kinds usable as components; empty means the default set.
  // phi is never allowed.
  std::vector<Kind> ComponentSet;
  unsigned PerLhsTimeoutMillis = 60000;
  unsigned PerQueryTimeoutMillis = 10000;
  UbPolicy Policy = UbPolicy::Exploit;

  static std::vector<Kind> defaultComponentSet();
  // Stable configuration fingerprint; part of the cache key.
  std::string fingerprint(const CostModel &CM) const;
};

// One instantiated component. Kind::Const marks a free constant.
// IsOverflowFlag marks the composite extractvalue(op.with.overflow(a,b), 1)
// instantiation of a checked-math kind (output width 1, cost 2).
struct Component {
  Kind K = Kind::Const;
  unsigned OutWidth = 0;
  std::vector<unsigned> OpWidths;
  int Weight = 0;
  bool IsOverflowFlag = false;

  bool operator==(const Component &O) const {
    return K == O.K && OutWidth == O.OutWidth && OpWidths == O.OpWidths &&
           IsOverflowFlag == O.IsOverflowFlag;
  }
};

struct ComponentLibrary {
  std::vector<Component> Comps;      // opcode components
  std::vector<Component> ConstComps; // free constants (weight 0)
  unsigned DefaultWidth = 0;

  // Subset of components with weight <= Bound (constants always included).
  ComponentLibrary atCostLevel(int Bound) const;
};

// Instantiates every kind of Set at the default width W (the largest of any
// input and the root), then adds width adapters: zext+sext for each narrower
// input width, trunc to the root width when W exceeds it, zext/sext from the
// 1-bit comparison outputs, and a trunc-to-1 for select conditions.
ComponentLibrary adaptWidths(const LeftHandSide &Lhs,
                             const std::vector<Kind> &Set,
                             int NumConstComponents, const CostModel &CM);

struct SynthResult {
  enum class Kind { Found, NotFound, Timeout, Error };
  Kind K = Kind::NotFound;
  std::optional<RightHandSide> Rhs;
  int Cost = 0;
  std::string Error;
};

struct FindResult {
  enum class Kind { Sat, Unsat, Timeout, Error };
  Kind K = Kind::Error;
  std::optional<RightHandSide> Rhs; // wiring materialized as an RHS
  // Clause excluding exactly this wiring, usable in later find queries.
  std::string BlockClause;
  std::string Error;
};

// One round of the inductive step: a quantifier-free query over location
// variables, constant symbols and the concrete counterexample inputs.
// Sat yields a wiring that matches the LHS on every given counterexample;
// Unsat means no wiring of this library (within CostBound) matches them.
FindResult findCandidate(const LeftHandSide &Lhs, const ComponentLibrary &Lib,
                         const std::vector<Env> &Counterexamples,
                         int CostBound, UbPolicy Policy, SolverRunner &Runner,
                         unsigned TimeoutMillis,
                         const std::vector<std::string> &BlockedWirings = {},
                         SynthMode Mode = SynthMode::Full);

// Deterministic cleanup of a found candidate: multiplications by a
// power-of-two constant become shifts; commutative operands are put in
// canonical order. Semantics-preserving by construction.
RightHandSide normalizeSynthesizedRhs(const LeftHandSide &Lhs,
                                      RightHandSide Rhs);

// Cost-bounded CEGIS: tries target costs 0, 1, ..., MaxCost and returns the
// first verified RHS, which is therefore cost-minimal with respect to the
// component set and cost model.
SynthResult synthesize(const LeftHandSide &Lhs, const SynthConfig &Cfg,
                       SolverRunner &Runner, const CostModel &CM = {});

} // namespace sopt

#endif // SOPT_SYNTH_HPP
