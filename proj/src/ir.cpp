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

#include "sopt/ir.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sopt {

namespace {

struct KindNameEntry {
  Kind K;
  const char *Name;
};

const KindNameEntry KindNames[] = {
    {Kind::Var, "var"},
    {Kind::Const, "const"},
    {Kind::Block, "block"},
    {Kind::Add, "add"},
    {Kind::AddNSW, "addnsw"},
    {Kind::AddNUW, "addnuw"},
    {Kind::AddNSWNUW, "addnswnuw"},
    {Kind::Sub, "sub"},
    {Kind::SubNSW, "subnsw"},
    {Kind::SubNUW, "subnuw"},
    {Kind::SubNSWNUW, "subnswnuw"},
    {Kind::Mul, "mul"},
    {Kind::MulNSW, "mulnsw"},
    {Kind::MulNUW, "mulnuw"},
    {Kind::MulNSWNUW, "mulnswnuw"},
    {Kind::UDiv, "udiv"},
    {Kind::SDiv, "sdiv"},
    {Kind::UDivExact, "udivexact"},
    {Kind::SDivExact, "sdivexact"},
    {Kind::URem, "urem"},
    {Kind::SRem, "srem"},
    {Kind::Shl, "shl"},
    {Kind::ShlNSW, "shlnsw"},
    {Kind::ShlNUW, "shlnuw"},
    {Kind::ShlNSWNUW, "shlnswnuw"},
    {Kind::LShr, "lshr"},
    {Kind::LShrExact, "lshrexact"},
    {Kind::AShr, "ashr"},
    {Kind::AShrExact, "ashrexact"},
    {Kind::And, "and"},
    {Kind::Or, "or"},
    {Kind::Xor, "xor"},
    {Kind::Select, "select"},
    {Kind::ZExt, "zext"},
    {Kind::SExt, "sext"},
    {Kind::Trunc, "trunc"},
    {Kind::Eq, "eq"},
    {Kind::Ne, "ne"},
    {Kind::Ult, "ult"},
    {Kind::Slt, "slt"},
    {Kind::Ule, "ule"},
    {Kind::Sle, "sle"},
    {Kind::Phi, "phi"},
    {Kind::SAddWithOverflow, "sadd.with.overflow"},
    {Kind::UAddWithOverflow, "uadd.with.overflow"},
    {Kind::SSubWithOverflow, "ssub.with.overflow"},
    {Kind::USubWithOverflow, "usub.with.overflow"},
    {Kind::SMulWithOverflow, "smul.with.overflow"},
    {Kind::UMulWithOverflow, "umul.with.overflow"},
    {Kind::ExtractValue, "extractvalue"},
    {Kind::CtPop, "ctpop"},
    {Kind::BSwap, "bswap"},
    {Kind::Cttz, "cttz"},
    {Kind::Ctlz, "ctlz"},
};

} // namespace

const char *kindName(Kind K) {
  for (const auto &E : KindNames)
    if (E.K == K)
      return E.Name;
  return "<unknown>";
}

std::optional<Kind> kindFromName(std::string_view Name) {
  for (const auto &E : KindNames)
    if (Name == E.Name)
      return E.K;
  return std::nullopt;
}

bool isOpcode(Kind K) { return K >= Kind::Add && K <= Kind::Ctlz; }

bool isCommutative(Kind K) {
  switch (K) {
  case Kind::Add:
  case Kind::AddNSW:
  case Kind::AddNUW:
  case Kind::AddNSWNUW:
  case Kind::Mul:
  case Kind::MulNSW:
  case Kind::MulNUW:
  case Kind::MulNSWNUW:
  case Kind::And:
  case Kind::Or:
  case Kind::Xor:
  case Kind::Eq:
  case Kind::Ne:
    return true;
  default:
    return false;
  }
}

bool isComparison(Kind K) {
  switch (K) {
  case Kind::Eq:
  case Kind::Ne:
  case Kind::Ult:
  case Kind::Slt:
  case Kind::Ule:
  case Kind::Sle:
    return true;
  default:
    return false;
  }
}

bool isWithOverflow(Kind K) {
  switch (K) {
  case Kind::SAddWithOverflow:
  case Kind::UAddWithOverflow:
  case Kind::SSubWithOverflow:
  case Kind::USubWithOverflow:
  case Kind::SMulWithOverflow:
  case Kind::UMulWithOverflow:
    return true;
  default:
    return false;
  }
}

bool isDivRem(Kind K) {
  switch (K) {
  case Kind::UDiv:
  case Kind::SDiv:
  case Kind::UDivExact:
  case Kind::SDivExact:
  case Kind::URem:
  case Kind::SRem:
    return true;
  default:
    return false;
  }
}

bool isShift(Kind K) {
  switch (K) {
  case Kind::Shl:
  case Kind::ShlNSW:
  case Kind::ShlNUW:
  case Kind::ShlNSWNUW:
  case Kind::LShr:
  case Kind::LShrExact:
  case Kind::AShr:
  case Kind::AShrExact:
    return true;
  default:
    return false;
  }
}

bool isCast(Kind K) {
  return K == Kind::ZExt || K == Kind::SExt || K == Kind::Trunc;
}

int arity(Kind K) {
  if (K == Kind::Select)
    return 3;
  if (K == Kind::Phi)
    return -1;
  if (isCast(K) || K == Kind::CtPop || K == Kind::BSwap || K == Kind::Cttz ||
      K == Kind::Ctlz)
    return 1;
  if (isOpcode(K))
    return 2;
  return 0;
}

Inst *InstPool::fresh() {
  Storage.emplace_back();
  Inst *I = &Storage.back();
  I->DefIndex = static_cast<unsigned>(Storage.size() - 1);
  return I;
}

Inst *InstPool::var(unsigned Width, std::string Name) {
  Inst *I = fresh();
  I->K = Kind::Var;
  I->Width = Width;
  I->Name = std::move(Name);
  return I;
}

Inst *InstPool::constant(unsigned Width, uint64_t Value) {
  Inst *I = fresh();
  I->K = Kind::Const;
  I->Width = Width;
  I->Val = maskToWidth(Value, Width);
  return I;
}

Inst *InstPool::block(unsigned NumPreds, std::string Name) {
  Inst *I = fresh();
  I->K = Kind::Block;
  I->Width = 0;
  I->Val = NumPreds;
  I->Name = std::move(Name);
  return I;
}

Inst *InstPool::inst(Kind K, unsigned Width, std::vector<Inst *> Ops) {
  Inst *I = fresh();
  I->K = K;
  I->Width = Width;
  I->Ops = std::move(Ops);
  return I;
}

std::string formatDiagnostics(const std::vector<Diagnostic> &Diags) {
  std::ostringstream OS;
  for (const auto &D : Diags) {
    if (D.Line > 0)
      OS << D.Line << ":" << D.Col << ": ";
    OS << D.Message << "\n";
  }
  return OS.str();
}

// ---------------------------------------------------------------------------
// Traversal helpers

namespace {

void visitPostOrder(Inst *I, std::unordered_set<Inst *> &Seen,
                    std::vector<Inst *> &Out) {
  if (!I || Seen.count(I))
    return;
  Seen.insert(I);
  for (Inst *Op : I->Ops)
    visitPostOrder(Op, Seen, Out);
  Out.push_back(I);
}

std::vector<Inst *> collectNodes(const LeftHandSide &Lhs) {
  std::unordered_set<Inst *> Seen;
  std::vector<Inst *> Out;
  for (const auto &PC : Lhs.PCs) {
    visitPostOrder(PC.Value, Seen, Out);
    visitPostOrder(PC.Expected, Seen, Out);
  }
  for (const auto &B : Lhs.BPCs) {
    visitPostOrder(B.B, Seen, Out);
    visitPostOrder(B.Value, Seen, Out);
    visitPostOrder(B.Expected, Seen, Out);
  }
  visitPostOrder(Lhs.Root, Seen, Out);
  return Out;
}

} // namespace

std::vector<Inst *> lhsNodes(const LeftHandSide &Lhs) {
  return collectNodes(Lhs);
}

std::vector<Inst *> lhsVars(const LeftHandSide &Lhs) {
  std::vector<Inst *> Out;
  for (Inst *I : collectNodes(Lhs))
    if (I->K == Kind::Var)
      Out.push_back(I);
  return Out;
}

std::vector<Inst *> lhsBlocks(const LeftHandSide &Lhs) {
  std::vector<Inst *> Out;
  for (Inst *I : collectNodes(Lhs))
    if (I->K == Kind::Block)
      Out.push_back(I);
  return Out;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

std::string constText(const Inst *I) {
  return std::to_string(I->Val) + ":i" + std::to_string(I->Width);
}

class Printer {
public:
  std::string operandText(Inst *I) const {
    if (I->K == Kind::Const)
      return constText(I);
    auto It = Names.find(I);
    assert(It != Names.end() && "operand printed before definition");
    return It->second;
  }

  void defineAll(Inst *Root, std::ostringstream &OS) {
    if (!Root || Root->K == Kind::Const)
      return;
    if (Names.count(Root))
      return;
    for (Inst *Op : Root->Ops)
      defineAll(Op, OS);
    if (Names.count(Root))
      return;
    std::string Name = "%" + std::to_string(Next++);
    switch (Root->K) {
    case Kind::Var:
      OS << Name << ":i" << Root->Width << " = var\n";
      break;
    case Kind::Block:
      OS << Name << " = block " << Root->numPreds() << "\n";
      break;
    default: {
      OS << Name << ":i" << Root->Width << " = " << kindName(Root->K);
      bool First = true;
      for (Inst *Op : Root->Ops) {
        OS << (First ? " " : ", ") << operandText(Op);
        First = false;
      }
      OS << "\n";
      break;
    }
    }
    Names.emplace(Root, std::move(Name));
  }

  void printLhsBody(const LeftHandSide &Lhs, std::ostringstream &OS) {
    for (const auto &PC : Lhs.PCs) {
      defineAll(PC.Value, OS);
      defineAll(PC.Expected, OS);
    }
    for (const auto &B : Lhs.BPCs) {
      defineAll(B.B, OS);
      defineAll(B.Value, OS);
      defineAll(B.Expected, OS);
    }
    defineAll(Lhs.Root, OS);
    for (const auto &PC : Lhs.PCs)
      OS << "pc " << operandText(PC.Value) << " " << operandText(PC.Expected)
         << "\n";
    for (const auto &B : Lhs.BPCs)
      OS << "blockpc " << operandText(B.B) << " " << B.PredIndex << " "
         << operandText(B.Value) << " " << operandText(B.Expected) << "\n";
    OS << "infer " << operandText(Lhs.Root) << "\n";
  }

  void printRhsBody(const RightHandSide &Rhs, std::ostringstream &OS) {
    defineAll(Rhs.Root, OS);
    OS << "result " << operandText(Rhs.Root) << "\n";
  }

private:
  std::unordered_map<Inst *, std::string> Names;
  unsigned Next = 0;
};

} // namespace

std::string printLhs(const LeftHandSide &Lhs) {
  std::ostringstream OS;
  Printer P;
  P.printLhsBody(Lhs, OS);
  return OS.str();
}

std::string printOptimization(const LeftHandSide &Lhs,
                              const RightHandSide &Rhs) {
  std::ostringstream OS;
  Printer P;
  P.printLhsBody(Lhs, OS);
  P.printRhsBody(Rhs, OS);
  return OS.str();
}

std::string printRhs(const LeftHandSide &Lhs, const RightHandSide &Rhs) {
  std::ostringstream LhsOS, OS;
  Printer P;
  P.printLhsBody(Lhs, LhsOS);
  P.printRhsBody(Rhs, OS);
  return OS.str();
}

bool structurallyEqual(const LeftHandSide &A, const LeftHandSide &B) {
  return printLhs(A) == printLhs(B);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum Type {
    Percent,  // %name
    Ident,    // bare identifier
    Number,   // integer, possibly with :iN suffix attached separately
    Colon,    // ':'
    Equals,
    Comma,
    End,
  } T;
  std::string Text;
  int Col = 0;
  bool Negative = false;
  uint64_t Value = 0;
};

class LineLexer {
public:
  LineLexer(std::string_view S, int Line, std::vector<Diagnostic> &Diags)
      : S(S), Line(Line), Diags(Diags) {}

  Token next() {
    while (Pos < S.size() && (S[Pos] == ' ' || S[Pos] == '\t'))
      ++Pos;
    Token Tok;
    Tok.Col = static_cast<int>(Pos) + 1;
    if (Pos >= S.size() || S[Pos] == ';') {
      Tok.T = Token::End;
      return Tok;
    }
    char C = S[Pos];
    if (C == '%') {
      size_t Start = ++Pos;
      while (Pos < S.size() && (std::isalnum((unsigned char)S[Pos]) ||
                                S[Pos] == '_' || S[Pos] == '.'))
        ++Pos;
      Tok.T = Token::Percent;
      Tok.Text = std::string(S.substr(Start, Pos - Start));
      if (Tok.Text.empty())
        error(Tok.Col, "expected name after '%'");
      return Tok;
    }
    if (C == '=') {
      ++Pos;
      Tok.T = Token::Equals;
      return Tok;
    }
    if (C == ',') {
      ++Pos;
      Tok.T = Token::Comma;
      return Tok;
    }
    if (C == ':') {
      ++Pos;
      Tok.T = Token::Colon;
      return Tok;
    }
    if (C == '-' || std::isdigit((unsigned char)C)) {
      Tok.T = Token::Number;
      Tok.Negative = C == '-';
      size_t Start = Pos;
      if (Tok.Negative)
        ++Pos;
      bool Hex = false;
      if (Pos + 1 < S.size() && S[Pos] == '0' &&
          (S[Pos + 1] == 'x' || S[Pos + 1] == 'X')) {
        Hex = true;
        Pos += 2;
      }
      size_t DigStart = Pos;
      while (Pos < S.size() &&
             (Hex ? std::isxdigit((unsigned char)S[Pos])
                  : std::isdigit((unsigned char)S[Pos])))
        ++Pos;
      if (Pos == DigStart) {
        error(Tok.Col, "malformed number");
        Tok.T = Token::End;
        return Tok;
      }
      std::string Digits(S.substr(DigStart, Pos - DigStart));
      uint64_t V = 0;
      bool Overflow = false;
      for (char D : Digits) {
        uint64_t Prev = V;
        if (Hex)
          V = V * 16 + (std::isdigit((unsigned char)D)
                            ? D - '0'
                            : std::tolower((unsigned char)D) - 'a' + 10);
        else
          V = V * 10 + (D - '0');
        if (V < Prev)
          Overflow = true;
      }
      if (Overflow)
        error(Tok.Col, "integer literal out of range");
      Tok.Value = V;
      Tok.Text = std::string(S.substr(Start, Pos - Start));
      return Tok;
    }
    if (std::isalpha((unsigned char)C) || C == '_') {
      size_t Start = Pos;
      while (Pos < S.size() && (std::isalnum((unsigned char)S[Pos]) ||
                                S[Pos] == '_' || S[Pos] == '.'))
        ++Pos;
      Tok.T = Token::Ident;
      Tok.Text = std::string(S.substr(Start, Pos - Start));
      return Tok;
    }
    error(Tok.Col, std::string("unexpected character '") + C + "'");
    ++Pos;
    Tok.T = Token::End;
    return Tok;
  }

  void error(int Col, std::string Msg) {
    Diags.push_back({Line, Col, std::move(Msg)});
  }

private:
  std::string_view S;
  size_t Pos = 0;
  int Line;
  std::vector<Diagnostic> &Diags;
};

class InputParser {
public:
  explicit InputParser(std::string_view Text) : Text(Text) {
    Pool = std::make_shared<InstPool>();
  }

  ParseResult run() {
    ParseResult R;
    size_t Pos = 0;
    int Line = 0;
    while (Pos <= Text.size()) {
      size_t Eol = Text.find('\n', Pos);
      std::string_view LineText =
          Text.substr(Pos, Eol == std::string_view::npos ? std::string_view::npos
                                                         : Eol - Pos);
      ++Line;
      parseLine(LineText, Line);
      if (Eol == std::string_view::npos)
        break;
      Pos = Eol + 1;
    }
    if (Diags.empty() && !Root)
      Diags.push_back({Line, 1, "missing 'infer' line"});
    if (!Diags.empty()) {
      R.Diags = std::move(Diags);
      return R;
    }
    LeftHandSide Lhs;
    Lhs.Pool = Pool;
    Lhs.PCs = std::move(PCs);
    Lhs.BPCs = std::move(BPCs);
    Lhs.Root = Root;
    auto TypeDiags = typecheck(Lhs);
    if (ResultRoot) {
      RightHandSide Rhs{ResultRoot};
      CompleteOptimization Opt{Lhs, Rhs};
      auto OptDiags = typecheck(Opt);
      TypeDiags.insert(TypeDiags.end(), OptDiags.begin(), OptDiags.end());
    }
    if (!TypeDiags.empty()) {
      R.Diags = std::move(TypeDiags);
      return R;
    }
    R.Lhs = std::move(Lhs);
    if (ResultRoot)
      R.Rhs = RightHandSide{ResultRoot};
    return R;
  }

  // Parse in the context of existing names (for RHS fragments).
  void seedNames(const std::map<std::string, Inst *> &Seed) {
    Names = Seed;
  }

  std::shared_ptr<InstPool> Pool;
  std::map<std::string, Inst *> Names;
  std::vector<PathCondition> PCs;
  std::vector<BlockPC> BPCs;
  Inst *Root = nullptr;
  Inst *ResultRoot = nullptr;
  std::vector<Diagnostic> Diags;

  void parseLine(std::string_view LineText, int Line) {
    LineLexer Lex(LineText, Line, Diags);
    Token T = Lex.next();
    if (T.T == Token::End)
      return;
    if (T.T == Token::Percent) {
      parseDef(T, Lex, Line);
      return;
    }
    if (T.T == Token::Ident) {
      if (T.Text == "pc") {
        Inst *V = parseOperand(Lex, Line);
        Inst *E = parseOperand(Lex, Line);
        if (V && E)
          PCs.push_back({V, E});
        expectEnd(Lex, Line);
        return;
      }
      if (T.Text == "blockpc") {
        Token BTok = Lex.next();
        Inst *B = nullptr;
        if (BTok.T != Token::Percent)
          Lex.error(BTok.Col, "expected block reference after 'blockpc'");
        else
          B = lookup(BTok, Line);
        Token Idx = Lex.next();
        if (Idx.T != Token::Number || Idx.Negative) {
          Lex.error(Idx.Col, "expected predecessor index");
          return;
        }
        Inst *V = parseOperand(Lex, Line);
        Inst *E = parseOperand(Lex, Line);
        if (B && V && E)
          BPCs.push_back({B, static_cast<unsigned>(Idx.Value), V, E});
        expectEnd(Lex, Line);
        return;
      }
      if (T.Text == "infer") {
        Token N = Lex.next();
        if (N.T != Token::Percent) {
          Lex.error(N.Col, "expected value reference after 'infer'");
          return;
        }
        if (Root) {
          Lex.error(N.Col, "duplicate 'infer' line");
          return;
        }
        Root = lookup(N, Line);
        expectEnd(Lex, Line);
        return;
      }
      if (T.Text == "result") {
        if (ResultRoot) {
          Lex.error(T.Col, "duplicate 'result' line");
          return;
        }
        ResultRoot = parseOperand(Lex, Line);
        expectEnd(Lex, Line);
        return;
      }
    }
    Lex.error(T.Col, "expected definition, pc, blockpc, infer or result");
  }

  void expectEnd(LineLexer &Lex, int) {
    Token T = Lex.next();
    if (T.T != Token::End)
      Lex.error(T.Col, "trailing tokens on line");
  }

  Inst *lookup(const Token &T, int Line) {
    auto It = Names.find(T.Text);
    if (It == Names.end()) {
      Diags.push_back({Line, T.Col,
                       "'%" + T.Text + "' referenced before definition"});
      return nullptr;
    }
    return It->second;
  }

  // Reads %ref or CONST. Returns nullptr after reporting a diagnostic.
  Inst *parseOperand(LineLexer &Lex, int Line) {
    Token T = Lex.next();
    return operandFromToken(T, Lex, Line);
  }

  Inst *operandFromToken(Token T, LineLexer &Lex, int Line) {
    if (T.T == Token::Percent)
      return lookup(T, Line);
    if (T.T == Token::Number) {
      Token Colon = Lex.next();
      if (Colon.T != Token::Colon) {
        Lex.error(Colon.Col, "constant requires a width, e.g. 1:i8");
        return nullptr;
      }
      unsigned W = parseWidthSuffix(Lex, Line);
      if (!W)
        return nullptr;
      return makeConst(T, W, Lex);
    }
    Lex.error(T.Col, "expected value reference or constant");
    return nullptr;
  }

  unsigned parseWidthSuffix(LineLexer &Lex, int) {
    Token T = Lex.next();
    if (T.T != Token::Ident || T.Text.size() < 2 || T.Text[0] != 'i') {
      Lex.error(T.Col, "expected width 'iN'");
      return 0;
    }
    unsigned W = 0;
    for (size_t I = 1; I < T.Text.size(); ++I) {
      if (!std::isdigit((unsigned char)T.Text[I])) {
        Lex.error(T.Col, "expected width 'iN'");
        return 0;
      }
      W = W * 10 + (T.Text[I] - '0');
      if (W > 100000)
        break;
    }
    if (W < 1 || W > MaxWidth) {
      Lex.error(T.Col, "width must be between 1 and " +
                           std::to_string(MaxWidth) + " bits");
      return 0;
    }
    return W;
  }

  Inst *makeConst(const Token &T, unsigned W, LineLexer &Lex) {
    uint64_t V = T.Value;
    if (T.Negative) {
      // -V must fit in W signed bits.
      uint64_t Limit = uint64_t(1) << (W - 1);
      if (V > Limit) {
        Lex.error(T.Col, "constant " + T.Text + " does not fit in i" +
                             std::to_string(W));
        return nullptr;
      }
      V = maskToWidth(~V + 1, W);
    } else if (W < 64 && V >= (uint64_t(1) << W)) {
      Lex.error(T.Col,
                "constant " + T.Text + " does not fit in i" + std::to_string(W));
      return nullptr;
    }
    return Pool->constant(W, V);
  }

  void parseDef(const Token &NameTok, LineLexer &Lex, int Line) {
    if (Names.count(NameTok.Text)) {
      Lex.error(NameTok.Col, "'%" + NameTok.Text + "' redefined");
      return;
    }
    Token T = Lex.next();
    unsigned Width = 0;
    if (T.T == Token::Colon) {
      Width = parseWidthSuffix(Lex, Line);
      if (!Width)
        return;
      T = Lex.next();
    }
    if (T.T != Token::Equals) {
      Lex.error(T.Col, "expected '=' in definition");
      return;
    }
    Token Op = Lex.next();
    if (Op.T != Token::Ident) {
      Lex.error(Op.Col, "expected opcode");
      return;
    }
    if (Op.Text == "var") {
      if (!Width) {
        Lex.error(Op.Col, "var requires a width");
        return;
      }
      Names[NameTok.Text] = Pool->var(Width, NameTok.Text);
      expectEnd(Lex, Line);
      return;
    }
    if (Op.Text == "block") {
      if (Width) {
        Lex.error(Op.Col, "block values take no width");
        return;
      }
      Token N = Lex.next();
      if (N.T != Token::Number || N.Negative || N.Value < 1) {
        Lex.error(N.Col, "block requires a positive predecessor count");
        return;
      }
      Names[NameTok.Text] =
          Pool->block(static_cast<unsigned>(N.Value), NameTok.Text);
      expectEnd(Lex, Line);
      return;
    }
    auto K = kindFromName(Op.Text);
    if (!K || !isOpcode(*K)) {
      Lex.error(Op.Col, "unknown opcode '" + Op.Text + "'");
      return;
    }
    if (!Width) {
      Lex.error(Op.Col, "instruction requires a result width");
      return;
    }
    std::vector<Inst *> Ops;
    Token First = Lex.next();
    if (First.T != Token::End) {
      Inst *O = operandFromToken(First, Lex, Line);
      if (!O)
        return;
      Ops.push_back(O);
      while (true) {
        Token Sep = Lex.next();
        if (Sep.T == Token::End)
          break;
        if (Sep.T != Token::Comma) {
          Lex.error(Sep.Col, "expected ',' between operands");
          return;
        }
        Inst *Next = parseOperand(Lex, Line);
        if (!Next)
          return;
        Ops.push_back(Next);
      }
    }
    int Arity = arity(*K);
    if (Arity >= 0 && static_cast<int>(Ops.size()) != Arity) {
      Lex.error(Op.Col, std::string(kindName(*K)) + " expects " +
                            std::to_string(Arity) + " operands, got " +
                            std::to_string(Ops.size()));
      return;
    }
    if (*K == Kind::Phi && Ops.size() < 2) {
      Lex.error(Op.Col, "phi expects a block and at least one value");
      return;
    }
    Names[NameTok.Text] = Pool->inst(*K, Width, std::move(Ops));
    Names[NameTok.Text]->Name = NameTok.Text;
  }

private:
  std::string_view Text;
};

} // namespace

ParseResult parseInput(std::string_view Text) {
  InputParser P(Text);
  return P.run();
}

RhsParseResult parseRhs(const LeftHandSide &Lhs, std::string_view Text) {
  RhsParseResult R;
  // Establish the canonical names the RHS text may refer to.
  std::map<std::string, Inst *> Seed;
  {
    std::unordered_set<Inst *> Seen;
    std::vector<Inst *> Ordered = collectNodes(Lhs);
    unsigned Next = 0;
    for (Inst *I : Ordered)
      if (I->K != Kind::Const)
        Seed[std::to_string(Next++)] = I;
  }
  InputParser P(Text);
  P.Pool = Lhs.Pool;
  P.seedNames(Seed);
  size_t Pos = 0;
  int Line = 0;
  while (Pos <= Text.size()) {
    size_t Eol = Text.find('\n', Pos);
    std::string_view LineText =
        Text.substr(Pos, Eol == std::string_view::npos ? std::string_view::npos
                                                       : Eol - Pos);
    ++Line;
    P.parseLine(LineText, Line);
    if (Eol == std::string_view::npos)
      break;
    Pos = Eol + 1;
  }
  if (P.Root)
    P.Diags.push_back({0, 0, "unexpected 'infer' in RHS fragment"});
  if (!P.ResultRoot && P.Diags.empty())
    P.Diags.push_back({Line, 1, "missing 'result' line"});
  if (!P.Diags.empty()) {
    R.Diags = std::move(P.Diags);
    return R;
  }
  RightHandSide Rhs{P.ResultRoot};
  CompleteOptimization Opt{Lhs, Rhs};
  auto TypeDiags = typecheck(Opt);
  if (!TypeDiags.empty()) {
    R.Diags = std::move(TypeDiags);
    return R;
  }
  R.Rhs = Rhs;
  return R;
}

// ---------------------------------------------------------------------------
// Typechecking

namespace {

std::string instLabel(const Inst *I) {
  if (!I->Name.empty())
    return "%" + I->Name;
  if (I->K == Kind::Const)
    return constText(I);
  return "%#" + std::to_string(I->DefIndex);
}

class TypeChecker {
public:
  std::vector<Diagnostic> Diags;

  void checkDag(Inst *I) {
    if (Done.count(I))
      return;
    if (Active.count(I)) {
      Diags.push_back({0, 0, "cycle through " + instLabel(I)});
      return;
    }
    Active.insert(I);
    for (Inst *Op : I->Ops)
      checkDag(Op);
    Active.erase(I);
    Done.insert(I);
    checkNode(I);
  }

  void err(const Inst *I, std::string Msg) {
    Diags.push_back({0, 0, instLabel(I) + ": " + std::move(Msg)});
  }

  bool isValueNode(const Inst *I) {
    return I->K != Kind::Block && !isWithOverflow(I->K);
  }

  void checkNode(Inst *I) {
    if (I->K == Kind::Var) {
      if (I->Width < 1 || I->Width > MaxWidth)
        err(I, "bitvectors must be between 1 and 64 bits wide");
      return;
    }
    if (I->K == Kind::Const) {
      if (I->Width < 1 || I->Width > MaxWidth)
        err(I, "bitvectors must be between 1 and 64 bits wide");
      else if (I->Val != maskToWidth(I->Val, I->Width))
        err(I, "constant value exceeds its width");
      return;
    }
    if (I->K == Kind::Block) {
      if (I->numPreds() < 1)
        err(I, "block must have at least one predecessor");
      return;
    }
    if (I->Width < 1 || I->Width > MaxWidth) {
      err(I, "bitvectors must be between 1 and 64 bits wide");
      return;
    }
    int Arity = arity(I->K);
    if (Arity >= 0 && static_cast<int>(I->Ops.size()) != Arity) {
      err(I, std::string(kindName(I->K)) + " expects " +
                 std::to_string(Arity) + " operands");
      return;
    }
    switch (I->K) {
    case Kind::Select: {
      Inst *C = I->Ops[0], *A = I->Ops[1], *B = I->Ops[2];
      if (!isValueNode(C) || C->Width != 1)
        err(I, "first argument to select must be one bit wide");
      if (!isValueNode(A) || !isValueNode(B) || A->Width != I->Width ||
          B->Width != I->Width)
        err(I, "select arms must match the result width");
      return;
    }
    case Kind::ZExt:
    case Kind::SExt: {
      Inst *A = I->Ops[0];
      if (!isValueNode(A))
        err(I, "cast of a non-bitvector value");
      else if (I->Width <= A->Width)
        err(I, std::string(kindName(I->K)) +
                   " must extend its argument by at least one bit");
      return;
    }
    case Kind::Trunc: {
      Inst *A = I->Ops[0];
      if (!isValueNode(A))
        err(I, "cast of a non-bitvector value");
      else if (I->Width >= A->Width)
        err(I, "trunc must reduce the width of its argument by at least one "
               "bit");
      return;
    }
    case Kind::Phi: {
      if (I->Ops.empty() || I->Ops[0]->K != Kind::Block) {
        err(I, "first operand of phi must be a block value");
        return;
      }
      Inst *B = I->Ops[0];
      if (I->Ops.size() - 1 != B->numPreds())
        err(I, "phi arity does not match its block's predecessor count");
      for (size_t J = 1; J < I->Ops.size(); ++J)
        if (!isValueNode(I->Ops[J]) || I->Ops[J]->Width != I->Width)
          err(I, "phi operands must match the result width");
      return;
    }
    case Kind::ExtractValue: {
      Inst *T = I->Ops[0], *Idx = I->Ops[1];
      if (!isWithOverflow(T->K)) {
        err(I, "extractvalue requires a with.overflow tuple");
        return;
      }
      if (Idx->K != Kind::Const || Idx->Width != 32 ||
          (Idx->Val != 0 && Idx->Val != 1)) {
        err(I, "extractvalue index must be the literal 0:i32 or 1:i32");
        return;
      }
      unsigned Want = Idx->Val == 0 ? T->Width : 1;
      if (I->Width != Want)
        err(I, "extractvalue result width does not match the tuple element");
      return;
    }
    case Kind::BSwap: {
      Inst *A = I->Ops[0];
      if (!isValueNode(A) || A->Width != I->Width)
        err(I, "operand width must match the result width");
      else if (I->Width % 8 != 0)
        err(I, "bswap requires a byte-granular width");
      return;
    }
    case Kind::CtPop:
    case Kind::Cttz:
    case Kind::Ctlz: {
      Inst *A = I->Ops[0];
      if (!isValueNode(A) || A->Width != I->Width)
        err(I, "operand width must match the result width");
      return;
    }
    default:
      break;
    }
    if (isComparison(I->K)) {
      Inst *A = I->Ops[0], *B = I->Ops[1];
      if (!isValueNode(A) || !isValueNode(B) || A->Width != B->Width)
        err(I, "comparison operand widths must match");
      if (I->Width != 1)
        err(I, "comparison instructions return a single bit");
      return;
    }
    // Remaining binary ops (arithmetic, logic, shifts, with.overflow):
    // both operand widths equal the result width.
    for (Inst *Op : I->Ops)
      if (!isValueNode(Op) || Op->Width != I->Width) {
        err(I, "operand widths for " + std::string(kindName(I->K)) +
                   " must match");
        return;
      }
  }

  std::unordered_set<Inst *> Active, Done;
};

} // namespace

std::vector<Diagnostic> typecheck(const LeftHandSide &Lhs) {
  TypeChecker TC;
  for (const auto &PC : Lhs.PCs) {
    TC.checkDag(PC.Value);
    TC.checkDag(PC.Expected);
    if (PC.Value->K == Kind::Block || isWithOverflow(PC.Value->K) ||
        PC.Expected->K == Kind::Block || isWithOverflow(PC.Expected->K))
      TC.Diags.push_back({0, 0, "pc sides must be bitvector values"});
    else if (PC.Value->Width != PC.Expected->Width)
      TC.Diags.push_back({0, 0, "pc sides must have equal widths"});
  }
  for (const auto &B : Lhs.BPCs) {
    TC.checkDag(B.B);
    TC.checkDag(B.Value);
    TC.checkDag(B.Expected);
    if (B.B->K != Kind::Block)
      TC.Diags.push_back({0, 0, "blockpc requires a block value"});
    else if (B.PredIndex >= B.B->numPreds())
      TC.Diags.push_back(
          {0, 0, "blockpc predecessor index out of range for " +
                     instLabel(B.B)});
    if (B.Value->K == Kind::Block || isWithOverflow(B.Value->K) ||
        B.Expected->K == Kind::Block || isWithOverflow(B.Expected->K))
      TC.Diags.push_back({0, 0, "blockpc sides must be bitvector values"});
    else if (B.Value->Width != B.Expected->Width)
      TC.Diags.push_back({0, 0, "blockpc sides must have equal widths"});
  }
  if (Lhs.Root) {
    TC.checkDag(Lhs.Root);
    if (Lhs.Root->K == Kind::Block || isWithOverflow(Lhs.Root->K))
      TC.Diags.push_back({0, 0, "infer target must be a bitvector value"});
  } else {
    TC.Diags.push_back({0, 0, "left-hand side has no root"});
  }
  return TC.Diags;
}

std::vector<Diagnostic> typecheck(const CompleteOptimization &Opt) {
  std::vector<Diagnostic> Diags = typecheck(Opt.Lhs);
  if (!Opt.Rhs.Root) {
    Diags.push_back({0, 0, "right-hand side has no root"});
    return Diags;
  }
  TypeChecker TC;
  TC.checkDag(Opt.Rhs.Root);
  Diags.insert(Diags.end(), TC.Diags.begin(), TC.Diags.end());
  if (Opt.Rhs.Root->K == Kind::Block || isWithOverflow(Opt.Rhs.Root->K))
    Diags.push_back({0, 0, "result must be a bitvector value"});
  else if (Opt.Lhs.Root && Opt.Rhs.Root->Width != Opt.Lhs.Root->Width)
    Diags.push_back({0, 0, "result width does not match the infer target"});
  return Diags;
}

// ---------------------------------------------------------------------------
// Canonicalization

namespace {

void canonicalizeNode(Inst *I, std::unordered_set<Inst *> &Seen) {
  if (!I || Seen.count(I))
    return;
  Seen.insert(I);
  for (Inst *Op : I->Ops)
    canonicalizeNode(Op, Seen);
  if (isCommutative(I->K)) {
    std::stable_sort(I->Ops.begin(), I->Ops.end(),
                     [](const Inst *A, const Inst *B) {
                       bool CA = A->K == Kind::Const, CB = B->K == Kind::Const;
                       if (CA != CB)
                         return CB; // constants last
                       if (CA)
                         return std::make_pair(A->Val, A->Width) <
                                std::make_pair(B->Val, B->Width);
                       return A->DefIndex < B->DefIndex;
                     });
  }
}

} // namespace

LeftHandSide canonicalize(LeftHandSide Lhs) {
  std::unordered_set<Inst *> Seen;
  for (const auto &PC : Lhs.PCs) {
    canonicalizeNode(PC.Value, Seen);
    canonicalizeNode(PC.Expected, Seen);
  }
  for (const auto &B : Lhs.BPCs) {
    canonicalizeNode(B.Value, Seen);
    canonicalizeNode(B.Expected, Seen);
  }
  canonicalizeNode(Lhs.Root, Seen);
  return Lhs;
}

// ---------------------------------------------------------------------------
// Cost model

int CostModel::weight(Kind K) const {
  if (!isOpcode(K))
    return 0;
  return isDivRem(K) ? DivRemWeight : DefaultWeight;
}

std::string CostModel::fingerprint() const {
  return "w" + std::to_string(DefaultWeight) + "d" +
         std::to_string(DivRemWeight);
}

namespace {

int costFrom(const Inst *Root, const CostModel &CM,
             const std::unordered_set<const Inst *> *Exclude,
             std::unordered_set<const Inst *> &Seen) {
  if (!Root || Seen.count(Root))
    return 0;
  if (Exclude && Exclude->count(Root))
    return 0;
  Seen.insert(Root);
  int Total = CM.weight(Root->K);
  for (const Inst *Op : Root->Ops)
    Total += costFrom(Op, CM, Exclude, Seen);
  return Total;
}

} // namespace

int cost(const Inst *Root, const CostModel &CM) {
  std::unordered_set<const Inst *> Seen;
  return costFrom(Root, CM, nullptr, Seen);
}

int costLhs(const LeftHandSide &Lhs, const CostModel &CM) {
  return cost(Lhs.Root, CM);
}

int costRhs(const LeftHandSide &Lhs, const RightHandSide &Rhs,
            const CostModel &CM) {
  std::unordered_set<const Inst *> Exclude;
  for (const Inst *I : collectNodes(Lhs))
    Exclude.insert(I);
  std::unordered_set<const Inst *> Seen;
  return costFrom(Rhs.Root, CM, &Exclude, Seen);
}

} // namespace sopt
