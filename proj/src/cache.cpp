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

#include "sopt/cache.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <vector>

namespace sopt {

// ---------------------------------------------------------------------------
// File-backed level 2: append log + index

namespace {

constexpr char LogMagic[8] = {'s', 'o', 'p', 't', 'l', 'o', 'g', '1'};
constexpr char IdxMagic[8] = {'s', 'o', 'p', 't', 'i', 'd', 'x', '1'};

void putU32(std::string &Out, uint32_t V) {
  for (int I = 0; I < 4; ++I)
    Out.push_back(static_cast<char>((V >> (8 * I)) & 0xff));
}
void putU64(std::string &Out, uint64_t V) {
  for (int I = 0; I < 8; ++I)
    Out.push_back(static_cast<char>((V >> (8 * I)) & 0xff));
}

bool getU32(const std::string &In, size_t &Pos, uint32_t &V) {
  if (Pos + 4 > In.size())
    return false;
  V = 0;
  for (int I = 0; I < 4; ++I)
    V |= static_cast<uint32_t>(static_cast<unsigned char>(In[Pos++])) << (8 * I);
  return true;
}
bool getU64(const std::string &In, size_t &Pos, uint64_t &V) {
  if (Pos + 8 > In.size())
    return false;
  V = 0;
  for (int I = 0; I < 8; ++I)
    V |= static_cast<uint64_t>(static_cast<unsigned char>(In[Pos++])) << (8 * I);
  return true;
}

std::string encodeRecord(const std::string &Key, const CacheEntry &E) {
  std::string Body;
  putU32(Body, static_cast<uint32_t>(Key.size()));
  Body += Key;
  char Flags = static_cast<char>((E.Rhs ? 1 : 0) | (E.Recorded ? 2 : 0));
  Body.push_back(Flags);
  putU32(Body, static_cast<uint32_t>(E.Rhs ? E.Rhs->size() : 0));
  if (E.Rhs)
    Body += *E.Rhs;
  putU64(Body, E.StaticCount);
  putU64(Body, E.DynamicCount);
  std::string Out;
  putU32(Out, static_cast<uint32_t>(Body.size()));
  Out += Body;
  return Out;
}

class FileKv : public KvBackend {
public:
  explicit FileKv(std::string Path) : Path(std::move(Path)) {}

  bool load(std::unordered_map<std::string, CacheEntry> &Out,
            std::string &Error) override {
    std::ifstream IS(Path, std::ios::binary);
    if (!IS.is_open())
      return true; // no cache yet
    std::ostringstream Buf;
    Buf << IS.rdbuf();
    std::string Data = Buf.str();
    if (Data.size() < sizeof(LogMagic) ||
        memcmp(Data.data(), LogMagic, sizeof(LogMagic)) != 0) {
      Error = "cache file '" + Path + "' has an unrecognized format";
      return false;
    }
    // The index accelerates replay; fall back to a full scan when stale.
    if (loadViaIndex(Data, Out))
      return true;
    size_t Pos = sizeof(LogMagic);
    while (Pos < Data.size()) {
      uint32_t Len = 0;
      if (!getU32(Data, Pos, Len) || Pos + Len > Data.size()) {
        Error = "cache file '" + Path + "' is truncated";
        return false;
      }
      std::string Key;
      CacheEntry E;
      if (!decodeRecord(Data.substr(Pos, Len), Key, E)) {
        Error = "cache file '" + Path + "' has a corrupt record";
        return false;
      }
      Out[Key] = std::move(E); // later records supersede earlier ones
      Pos += Len;
    }
    return true;
  }

  bool store(const std::unordered_map<std::string, CacheEntry> &Dirty,
             std::string &Error) override {
    if (Dirty.empty())
      return true;
    bool Fresh = false;
    {
      std::ifstream Probe(Path, std::ios::binary);
      Fresh = !Probe.is_open();
    }
    std::ofstream OS(Path, std::ios::binary | std::ios::app);
    if (!OS.is_open()) {
      Error = "cannot open cache file '" + Path + "' for writing";
      return false;
    }
    if (Fresh)
      OS.write(LogMagic, sizeof(LogMagic));
    // Sort for deterministic log contents.
    std::vector<const std::string *> Keys;
    for (const auto &[K, E] : Dirty)
      Keys.push_back(&K);
    std::sort(Keys.begin(), Keys.end(),
              [](const std::string *A, const std::string *B) { return *A < *B; });
    for (const std::string *K : Keys) {
      std::string Rec = encodeRecord(*K, Dirty.at(*K));
      OS.write(Rec.data(), static_cast<std::streamsize>(Rec.size()));
    }
    OS.flush();
    if (!OS.good()) {
      Error = "write to cache file '" + Path + "' failed";
      return false;
    }
    writeIndex();
    return true;
  }

private:
  static bool decodeRecord(const std::string &Body, std::string &Key,
                           CacheEntry &E) {
    size_t Pos = 0;
    uint32_t KeyLen = 0;
    if (!getU32(Body, Pos, KeyLen) || Pos + KeyLen > Body.size())
      return false;
    Key = Body.substr(Pos, KeyLen);
    Pos += KeyLen;
    if (Pos + 1 > Body.size())
      return false;
    char Flags = Body[Pos++];
    bool HasRhs = (Flags & 1) != 0;
    E.Recorded = (Flags & 2) != 0;
    uint32_t RhsLen = 0;
    if (!getU32(Body, Pos, RhsLen) || Pos + RhsLen > Body.size())
      return false;
    if (HasRhs)
      E.Rhs = Body.substr(Pos, RhsLen);
    Pos += RhsLen;
    return getU64(Body, Pos, E.StaticCount) &&
           getU64(Body, Pos, E.DynamicCount);
  }

  bool loadViaIndex(const std::string &Data,
                    std::unordered_map<std::string, CacheEntry> &Out) {
    std::ifstream IS(Path + ".idx", std::ios::binary);
    if (!IS.is_open())
      return false;
    std::ostringstream Buf;
    Buf << IS.rdbuf();
    std::string Idx = Buf.str();
    size_t Pos = 0;
    if (Idx.size() < sizeof(IdxMagic) ||
        memcmp(Idx.data(), IdxMagic, sizeof(IdxMagic)) != 0)
      return false;
    Pos = sizeof(IdxMagic);
    uint64_t Stamp = 0;
    if (!getU64(Idx, Pos, Stamp) || Stamp != Data.size())
      return false; // stale index
    while (Pos < Idx.size()) {
      uint32_t KeyLen = 0;
      if (!getU32(Idx, Pos, KeyLen) || Pos + KeyLen > Idx.size())
        return false;
      std::string Key = Idx.substr(Pos, KeyLen);
      Pos += KeyLen;
      uint64_t Offset = 0;
      if (!getU64(Idx, Pos, Offset))
        return false;
      size_t RecPos = Offset;
      uint32_t Len = 0;
      if (!getU32(Data, RecPos, Len) || RecPos + Len > Data.size())
        return false;
      std::string K2;
      CacheEntry E;
      if (!decodeRecord(Data.substr(RecPos, Len), K2, E) || K2 != Key)
        return false;
      Out[Key] = std::move(E);
    }
    return true;
  }

  void writeIndex() {
    std::ifstream IS(Path, std::ios::binary);
    if (!IS.is_open())
      return;
    std::ostringstream Buf;
    Buf << IS.rdbuf();
    std::string Data = Buf.str();
    std::unordered_map<std::string, uint64_t> Latest;
    size_t Pos = sizeof(LogMagic);
    while (Pos < Data.size()) {
      uint64_t RecStart = Pos;
      uint32_t Len = 0;
      if (!getU32(Data, Pos, Len) || Pos + Len > Data.size())
        return;
      std::string Key;
      CacheEntry E;
      if (!decodeRecord(Data.substr(Pos, Len), Key, E))
        return;
      Latest[Key] = RecStart;
      Pos += Len;
    }
    std::vector<std::pair<std::string, uint64_t>> Sorted(Latest.begin(),
                                                         Latest.end());
    std::sort(Sorted.begin(), Sorted.end());
    std::string Out(IdxMagic, sizeof(IdxMagic));
    putU64(Out, Data.size());
    for (auto &[Key, Offset] : Sorted) {
      putU32(Out, static_cast<uint32_t>(Key.size()));
      Out += Key;
      putU64(Out, Offset);
    }
    std::ofstream OS(Path + ".idx", std::ios::binary | std::ios::trunc);
    OS.write(Out.data(), static_cast<std::streamsize>(Out.size()));
  }

  std::string Path;
};

} // namespace

std::unique_ptr<KvBackend> makeFileKv(std::string Path) {
  return std::make_unique<FileKv>(std::move(Path));
}

// ---------------------------------------------------------------------------
// Store

Store::Store() = default;

Store::Store(std::string Path) {
  if (!Path.empty())
    Backend = makeFileKv(std::move(Path));
}

Store::Store(std::unique_ptr<KvBackend> B) : Backend(std::move(B)) {}

Store::~Store() {
  std::string Err;
  if (Backend)
    flush(Err);
}

bool Store::open(std::string &Error) {
  std::unique_lock Lock(Mutex);
  if (Loaded || !Backend) {
    Loaded = true;
    return true;
  }
  if (!Backend->load(L1, Error))
    return false;
  Loaded = true;
  return true;
}

CacheEntry &Store::entryLocked(const std::string &Key) { return L1[Key]; }

LookupResult Store::lookup(const std::string &Key) {
  std::shared_lock Lock(Mutex);
  auto It = L1.find(Key);
  if (It == L1.end() || !It->second.Recorded)
    return {};
  return {true, It->second};
}

std::optional<std::string> Store::record(const std::string &Key,
                                         const std::optional<std::string> &Rhs) {
  std::unique_lock Lock(Mutex);
  auto It = L1.find(Key);
  if (It != L1.end() && It->second.Recorded) {
    if (It->second.Rhs != Rhs)
      return "conflicting result for cached left-hand side (was " +
             (It->second.Rhs ? "'" + *It->second.Rhs + "'" : "null") +
             ", now " + (Rhs ? "'" + *Rhs + "'" : "null") + ")";
    return std::nullopt;
  }
  CacheEntry &E = entryLocked(Key);
  E.Rhs = Rhs;
  E.Recorded = true;
  Dirty[Key] = true;
  return std::nullopt;
}

void Store::bumpStatic(const std::string &Key) {
  std::unique_lock Lock(Mutex);
  ++entryLocked(Key).StaticCount;
  Dirty[Key] = true;
}

void Store::addDynamic(const std::string &Key, uint64_t N) {
  std::unique_lock Lock(Mutex);
  entryLocked(Key).DynamicCount += N;
  Dirty[Key] = true;
}

bool Store::flush(std::string &Error) {
  std::unique_lock Lock(Mutex);
  if (!Backend || Dirty.empty())
    return true;
  std::unordered_map<std::string, CacheEntry> ToWrite;
  for (const auto &[Key, Flag] : Dirty)
    ToWrite.emplace(Key, L1.at(Key));
  if (!Backend->store(ToWrite, Error))
    return false;
  Dirty.clear();
  return true;
}

std::map<std::string, CacheEntry> Store::snapshot() const {
  std::shared_lock Lock(Mutex);
  return {L1.begin(), L1.end()};
}

// ---------------------------------------------------------------------------
// Keys and ranking

std::string cacheKey(const LeftHandSide &CanonicalLhs,
                     const std::string &ConfigFingerprint) {
  return "; cfg " + ConfigFingerprint + "\n" + printLhs(CanonicalLhs);
}

std::vector<ReportRow> rank(const std::map<std::string, CacheEntry> &Entries,
                            RankPolicy Policy, const CostModel &CM,
                            std::optional<int> MaxLhsNodes) {
  std::vector<ReportRow> Rows;
  for (const auto &[Key, E] : Entries) {
    if (!E.Rhs)
      continue;
    ParseResult PR = parseInput(Key);
    if (!PR.ok())
      continue;
    ReportRow Row;
    Row.Key = Key;
    Row.StaticCount = E.StaticCount;
    Row.DynamicCount = E.DynamicCount;
    Row.Rhs = *E.Rhs;
    Row.LhsCost = costLhs(*PR.Lhs, CM);
    Row.LhsNodes = static_cast<int>(lhsNodes(*PR.Lhs).size());
    RhsParseResult RR = parseRhs(*PR.Lhs, *E.Rhs);
    Row.RhsCost = RR.Rhs ? costRhs(*PR.Lhs, *RR.Rhs, CM) : 0;
    if (MaxLhsNodes && Row.LhsNodes > *MaxLhsNodes)
      continue;
    switch (Policy) {
    case RankPolicy::StaticCount:
      Row.Score = Row.StaticCount;
      break;
    case RankPolicy::DynamicCount:
      Row.Score = Row.DynamicCount;
      break;
    case RankPolicy::Benefit:
    case RankPolicy::ComplexityFiltered:
      Row.Score = Row.LhsCost > Row.RhsCost
                      ? static_cast<uint64_t>(Row.LhsCost - Row.RhsCost)
                      : 0;
      break;
    }
    Rows.push_back(std::move(Row));
  }
  std::stable_sort(Rows.begin(), Rows.end(),
                   [](const ReportRow &A, const ReportRow &B) {
                     if (A.Score != B.Score)
                       return A.Score > B.Score;
                     return A.Key < B.Key;
                   });
  return Rows;
}

std::string reportRowsTsv(const std::vector<ReportRow> &Rows) {
  std::ostringstream OS;
  OS << "score\tlhs_cost\trhs_cost\tlhs_nodes\tstatic\tdynamic\tkey\trhs\n";
  for (const ReportRow &R : Rows) {
    auto Escape = [](const std::string &S) {
      std::string Out;
      for (char C : S) {
        if (C == '\n')
          Out += "\\n";
        else if (C == '\t')
          Out += "\\t";
        else
          Out.push_back(C);
      }
      return Out;
    };
    OS << R.Score << "\t" << R.LhsCost << "\t" << R.RhsCost << "\t"
       << R.LhsNodes << "\t" << R.StaticCount << "\t" << R.DynamicCount << "\t"
       << Escape(R.Key) << "\t" << Escape(R.Rhs) << "\n";
  }
  return OS.str();
}

} // namespace sopt
