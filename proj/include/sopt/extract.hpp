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

#ifndef SOPT_EXTRACT_HPP
#define SOPT_EXTRACT_HPP

#include "sopt/ir.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sopt {

// A small SSA control-flow-graph language standing in for a real compiler
// IR. Instructions mirror the dataflow opcodes plus a few frontend-only
// forms (ugt/sgt/uge/sge comparisons, gep address arithmetic, undef
// literals) that extraction lowers away.

struct CfgOperand {
  enum class Type { Ref, Const, Undef };
  Type T = Type::Const;
  std::string Ref;    // for Ref
  uint64_t Val = 0;   // for Const
  unsigned Width = 0; // for Const/Undef
};

struct CfgInst {
  std::string Name; // result name, without '%'
  unsigned Width = 0;
  std::string Op;
  std::vector<CfgOperand> Ops;
  // phi only: (incoming label, incoming value)
  std::vector<std::pair<std::string, CfgOperand>> Incoming;
  int Line = 0;
};

struct CfgTerminator {
  enum class Type { Br, CondBr, Switch, Ret } T = Type::Ret;
  CfgOperand Value; // CondBr condition / Switch scrutinee / Ret value
  std::string Target;                                  // Br / CondBr then
  std::string ElseTarget;                              // CondBr else
  std::vector<std::pair<uint64_t, std::string>> Cases; // Switch
  std::string DefaultTarget;                           // Switch default
  int Line = 0;
};

struct CfgBlock {
  std::string Label;
  std::vector<CfgInst> Phis;
  std::vector<CfgInst> Insts;
  CfgTerminator Term;
  // Distinct predecessor blocks, in discovery order. Filled by the parser.
  std::vector<int> Preds;
};

struct CfgFunction {
  std::string Name;
  std::vector<std::pair<std::string, unsigned>> Params;
  std::vector<CfgBlock> Blocks; // entry first
  std::map<std::string, int> BlockIndex;
};

struct CfgParseResult {
  std::vector<CfgFunction> Functions;
  std::vector<Diagnostic> Diags;
  bool ok() const { return Diags.empty(); }
};

CfgParseResult parseCfg(std::string_view Text);

struct ExtractionConfig {
  size_t MaxSerializedBytes = 1024;
  std::optional<unsigned> MaxDepth;
  bool HarvestPcs = true;
  bool HarvestBlockpcs = true;
};

struct SiteId {
  std::string Function;
  std::string Block;
  int Index = 0; // instruction position in the block, phis first

  std::string str() const {
    return Function + ":" + Block + ":" + std::to_string(Index);
  }
};

struct Candidate {
  LeftHandSide Lhs; // canonical
  SiteId Site;
};

struct ExtractionResult {
  std::vector<Candidate> Candidates;
  uint64_t Dropped = 0; // over the serialized-size limit
  uint64_t Total = 0;   // candidate roots considered
};

// One candidate per integer-typed instruction result. The backward walk
// stops at parameters and revisited program points; dominating conditional
// branches become pcs and convergent control flow becomes blockpcs.
ExtractionResult extractCandidates(const CfgFunction &F,
                                   const ExtractionConfig &Cfg);

// ir canonicalization applied to a candidate (greater-than comparisons and
// address arithmetic are already lowered during the walk).
Candidate canonicalizeCandidate(Candidate C);

} // namespace sopt

#endif // SOPT_EXTRACT_HPP
