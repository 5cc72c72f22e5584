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

#ifndef SOPT_IR_HPP
#define SOPT_IR_HPP

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sopt {

// Every instruction kind, plus the three non-instruction node kinds
// (Var, Const, Block). Signedness lives in the instruction, not the value;
// nsw/nuw/exact behaviors are separate kinds rather than flags.
enum class Kind : uint8_t {
  Var,
  Const,
  Block,

  Add,
  AddNSW,
  AddNUW,
  AddNSWNUW,
  Sub,
  SubNSW,
  SubNUW,
  SubNSWNUW,
  Mul,
  MulNSW,
  MulNUW,
  MulNSWNUW,
  UDiv,
  SDiv,
  UDivExact,
  SDivExact,
  URem,
  SRem,
  Shl,
  ShlNSW,
  ShlNUW,
  ShlNSWNUW,
  LShr,
  LShrExact,
  AShr,
  AShrExact,
  And,
  Or,
  Xor,
  Select,
  ZExt,
  SExt,
  Trunc,
  Eq,
  Ne,
  Ult,
  Slt,
  Ule,
  Sle,
  Phi,
  SAddWithOverflow,
  UAddWithOverflow,
  SSubWithOverflow,
  USubWithOverflow,
  SMulWithOverflow,
  UMulWithOverflow,
  ExtractValue,
  CtPop,
  BSwap,
  Cttz,
  Ctlz,
};

// Count of real instruction kinds (everything after Var/Const/Block).
inline constexpr int NumOpcodes =
    static_cast<int>(Kind::Ctlz) - static_cast<int>(Kind::Add) + 1;
static_assert(NumOpcodes == 51, "instruction set must have 51 members");

inline constexpr unsigned MaxWidth = 64;

const char *kindName(Kind K);
std::optional<Kind> kindFromName(std::string_view Name);

bool isOpcode(Kind K);
bool isCommutative(Kind K);
bool isComparison(Kind K);
bool isWithOverflow(Kind K);
bool isDivRem(Kind K);
bool isShift(Kind K);
bool isCast(Kind K);
// Number of operands an opcode takes, or -1 when variadic (phi).
int arity(Kind K);

// Truncate a value to W bits (canonical two's-complement form).
inline uint64_t maskToWidth(uint64_t V, unsigned W) {
  return W >= 64 ? V : (V & ((uint64_t(1) << W) - 1));
}

// A node in the dataflow DAG. Nodes are created through an InstPool, are
// never mutated after construction (canonicalize reorders operand lists
// before a LHS is shared), and are compared by identity.
struct Inst {
  Kind K;
  // Bit width of the value. 0 for Block nodes. For *.with.overflow this is
  // the width of the wrapped result; the 1-bit flag is implicit and only
  // extractvalue can observe it.
  unsigned Width = 0;
  // Const: the canonical two's-complement value. Block: predecessor count.
  uint64_t Val = 0;
  std::vector<Inst *> Ops;
  // Source-level name if any (parser keeps it for diagnostics only; the
  // printer renumbers).
  std::string Name;
  // Creation index within the pool; total order used by canonicalize.
  unsigned DefIndex = 0;

  unsigned numPreds() const { return static_cast<unsigned>(Val); }
};

// Arena that owns all Inst nodes of one LHS/optimization.
class InstPool {
public:
  Inst *var(unsigned Width, std::string Name = {});
  Inst *constant(unsigned Width, uint64_t Value);
  Inst *block(unsigned NumPreds, std::string Name = {});
  Inst *inst(Kind K, unsigned Width, std::vector<Inst *> Ops);

  size_t size() const { return Storage.size(); }

private:
  Inst *fresh();
  std::deque<Inst> Storage;
};

struct PathCondition {
  Inst *Value;
  Inst *Expected;
};

struct BlockPC {
  Inst *B; // Block node
  unsigned PredIndex;
  Inst *Value;
  Inst *Expected;
};

struct LeftHandSide {
  std::shared_ptr<InstPool> Pool;
  std::vector<PathCondition> PCs;
  std::vector<BlockPC> BPCs;
  Inst *Root = nullptr;
};

// A replacement DAG rooted at `result`; may reference nodes of the paired
// LHS (those are costed at zero).
struct RightHandSide {
  Inst *Root = nullptr;
};

struct CompleteOptimization {
  LeftHandSide Lhs;
  RightHandSide Rhs;
};

struct Diagnostic {
  int Line = 0;
  int Col = 0;
  std::string Message;
};

std::string formatDiagnostics(const std::vector<Diagnostic> &Diags);

// Result of parsing a textual LHS or complete optimization.
struct ParseResult {
  std::optional<LeftHandSide> Lhs;
  std::optional<RightHandSide> Rhs; // set when a `result` line was present
  std::vector<Diagnostic> Diags;

  bool ok() const { return Diags.empty() && Lhs.has_value(); }
  bool isComplete() const { return ok() && Rhs.has_value(); }
};

ParseResult parseInput(std::string_view Text);

// Parse an RHS fragment (defs + result line) in the context of an
// already-parsed LHS whose canonical printed names are visible to it.
struct RhsParseResult {
  std::optional<RightHandSide> Rhs;
  std::vector<Diagnostic> Diags;
};
RhsParseResult parseRhs(const LeftHandSide &Lhs, std::string_view Text);

// Deterministic serialization. Nodes are renumbered %0, %1, ... in
// definition order; parse(print(x)) is structurally identical to x.
std::string printLhs(const LeftHandSide &Lhs);
std::string printOptimization(const LeftHandSide &Lhs,
                              const RightHandSide &Rhs);
// Only the RHS lines (new defs + result), numbered after the LHS's nodes.
std::string printRhs(const LeftHandSide &Lhs, const RightHandSide &Rhs);

std::vector<Diagnostic> typecheck(const LeftHandSide &Lhs);
std::vector<Diagnostic> typecheck(const CompleteOptimization &Opt);

// Sorts commutative operand lists into the canonical order (constants last,
// otherwise by definition index). Idempotent; semantics-preserving.
LeftHandSide canonicalize(LeftHandSide Lhs);

struct CostModel {
  int DefaultWeight = 1;
  int DivRemWeight = 3;

  int weight(Kind K) const;
  // Stable hash over the weights; part of the cache key fingerprint.
  std::string fingerprint() const;
};

// Weighted count of opcode nodes reachable from Root. Var/Const/Block are
// free. ExcludeNodes (the paired LHS's nodes, for RHS costing) are skipped
// together with everything below them.
int cost(const Inst *Root, const CostModel &CM);
int costRhs(const LeftHandSide &Lhs, const RightHandSide &Rhs,
            const CostModel &CM);
int costLhs(const LeftHandSide &Lhs, const CostModel &CM);

// All nodes reachable from the LHS (pcs, blockpcs, root), in canonical
// definition order. Vars only / blocks only helpers preserve that order.
std::vector<Inst *> lhsNodes(const LeftHandSide &Lhs);
std::vector<Inst *> lhsVars(const LeftHandSide &Lhs);
std::vector<Inst *> lhsBlocks(const LeftHandSide &Lhs);

// Structural equality of two LHSs (used by tests; equivalent to comparing
// canonical prints).
bool structurallyEqual(const LeftHandSide &A, const LeftHandSide &B);

} // namespace sopt

#endif // SOPT_IR_HPP
