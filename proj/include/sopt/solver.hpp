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

#ifndef SOPT_SOLVER_HPP
#define SOPT_SOLVER_HPP

#include "sopt/interp.hpp"
#include "sopt/ir.hpp"

#include <atomic>
#include <map>
#include <string>
#include <vector>

namespace sopt {

// Whether verification may assume the LHS is free of undefined behavior.
// Exploit takes LHS definedness as a hypothesis; NoExploit requires the RHS
// to match the LHS's total-semantics value wherever the path conditions
// hold, regardless of LHS definedness. RHS definedness is always required.
enum class UbPolicy { Exploit, NoExploit };

const char *ubPolicyName(UbPolicy P);

struct Query {
  enum class Kind { Equivalence, CegisFind, CegisVerify };
  Kind K = Kind::Equivalence;
  std::string Text;
  // Symbols to extract from a sat model, in order.
  std::vector<std::string> VarOrder;
};

struct Model {
  std::map<std::string, uint64_t> Values;
};

struct SolverVerdict {
  enum class Kind { Unsat, Sat, Timeout, Error };
  Kind K = Kind::Error;
  Model M;
  std::string Message;
};

struct SolverConfig {
  std::string Path;              // solver executable
  std::vector<std::string> Args; // argument template
  std::string DumpDir;           // when set, every query is written here

  bool valid() const { return !Path.empty(); }
  // Resolution order: SOPT_SOLVER (split on spaces), then `z3` on PATH.
  static SolverConfig discover();
};

// Spawns one solver process per query, writes the SMT-LIB text to its
// stdin, enforces a wall-clock timeout (the process group is killed on
// expiry) and parses the sat/unsat/model output.
class SolverRunner {
public:
  explicit SolverRunner(SolverConfig C) : Config(std::move(C)) {}

  SolverVerdict run(const Query &Q, unsigned TimeoutMillis);
  uint64_t callCount() const { return Calls.load(); }
  const SolverConfig &config() const { return Config; }

private:
  SolverConfig Config;
  std::atomic<uint64_t> Calls{0};
  std::atomic<uint64_t> DumpSeq{0};
};

// Textual SMT encoding of one or more DAGs sharing a node namespace.
// Symbol names are derived from the canonical node numbering, so encoding
// the same (canonical) input twice yields byte-identical text.
class SmtEncoder {
public:
  // Value symbol of a node (emits define-funs / declare-consts on demand).
  std::string val(const Inst *I);
  // Overflow-flag symbol of a with.overflow node.
  std::string flag(const Inst *I);
  // Definedness symbol of a node ("true" when trivially defined).
  std::string def(const Inst *I);
  // Selector symbol for a Block node.
  std::string selector(const Inst *B);

  const std::string &decls() const { return Decls; }
  // Conjunction of selector range assertions ("true" when none needed).
  std::string selectorRange() const;

  const std::vector<std::pair<std::string, const Inst *>> &varSymbols() const {
    return VarSyms;
  }
  const std::vector<std::pair<std::string, const Inst *>> &
  blockSymbols() const {
    return BlockSyms;
  }

private:
  void emitNode(const Inst *I);

  std::map<const Inst *, unsigned> Ids;
  std::string Decls;
  std::vector<std::pair<std::string, const Inst *>> VarSyms, BlockSyms;
  std::vector<std::string> RangeAsserts;
  unsigned Next = 0;
};

// SMT text helpers shared by the LHS encoder and the synthesis queries.
std::string smtBvLiteral(uint64_t V, unsigned W);
std::string smtValueTerm(Kind K, unsigned W, unsigned OpWidth,
                         const std::vector<std::string> &Ops);
std::string smtFlagTerm(Kind K, unsigned W,
                        const std::vector<std::string> &Ops);
// Local definedness condition of one node over its operand value terms
// ("true" when the operation is always defined).
std::string smtLocalDefTerm(Kind K, unsigned W,
                            const std::vector<std::string> &Ops);

struct LhsEncoding {
  std::string Decls;
  std::string RootVal;
  std::string RootDef;
  // Path-condition constraint: pcs, blockpcs and selector ranges.
  std::string Constraint;
  std::vector<std::pair<std::string, const Inst *>> VarSyms, BlockSyms;
};

LhsEncoding encodeLHS(const LeftHandSide &Lhs, UbPolicy Policy,
                      SmtEncoder &Enc);

struct EquivalenceQuery {
  Query Q;
  std::vector<std::pair<std::string, const Inst *>> VarSyms, BlockSyms;
};

// Satisfiable iff some valuation satisfies the constraints yet the two
// sides differ under the given policy (see UbPolicy).
EquivalenceQuery buildEquivalenceQuery(const LeftHandSide &Lhs,
                                       const RightHandSide &Rhs,
                                       UbPolicy Policy);

// Rebuild an interp Env from a solver model over the given symbol maps.
Env envFromModel(const Model &M,
                 const std::vector<std::pair<std::string, const Inst *>> &Vars,
                 const std::vector<std::pair<std::string, const Inst *>> &Blocks);

} // namespace sopt

#endif // SOPT_SOLVER_HPP
