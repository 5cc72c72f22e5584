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

#include "sopt/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace sopt {

std::string RunConfig::configHeader() const {
  std::ostringstream OS;
  OS << "# solver = " << (Solver.Path.empty() ? "<none>" : Solver.Path);
  for (const auto &A : Solver.Args)
    OS << " " << A;
  OS << "\n";
  OS << "# ub-policy = " << ubPolicyName(Synth.Policy) << "\n";
  OS << "# synth-mode = " << synthModeName(Synth.Mode) << "\n";
  OS << "# max-cost = " << Synth.MaxCost << "\n";
  OS << "# const-components = " << Synth.NumConstComponents << "\n";
  OS << "# per-query-timeout-ms = " << Synth.PerQueryTimeoutMillis << "\n";
  OS << "# per-lhs-timeout-ms = " << Synth.PerLhsTimeoutMillis << "\n";
  OS << "# cost-model = " << CM.fingerprint() << "\n";
  OS << "# max-serialized-bytes = " << Extraction.MaxSerializedBytes << "\n";
  OS << "# harvest-pcs = " << (Extraction.HarvestPcs ? 1 : 0) << "\n";
  OS << "# harvest-blockpcs = " << (Extraction.HarvestBlockpcs ? 1 : 0) << "\n";
  OS << "# cache = " << (CachePath.empty() ? "<memory>" : CachePath) << "\n";
  OS << "# parallelism = " << Parallelism << "\n";
  return OS.str();
}

std::string escapeTsvField(const std::string &S) {
  std::string Out;
  for (char C : S) {
    switch (C) {
    case '\n':
      Out += "\\n";
      break;
    case '\t':
      Out += "\\t";
      break;
    case '\\':
      Out += "\\\\";
      break;
    default:
      Out.push_back(C);
    }
  }
  return Out;
}

std::string unescapeTsvField(const std::string &S) {
  std::string Out;
  for (size_t I = 0; I < S.size(); ++I) {
    if (S[I] != '\\' || I + 1 >= S.size()) {
      Out.push_back(S[I]);
      continue;
    }
    char N = S[++I];
    if (N == 'n')
      Out.push_back('\n');
    else if (N == 't')
      Out.push_back('\t');
    else
      Out.push_back(N);
  }
  return Out;
}

std::string manifestText(const std::vector<ManifestRow> &Rows, uint64_t Total,
                         uint64_t Dropped) {
  std::ostringstream OS;
  for (const ManifestRow &R : Rows)
    OS << escapeTsvField(R.Site) << "\t" << escapeTsvField(R.File) << "\t"
       << escapeTsvField(R.Key) << "\n";
  OS << "#stat\ttotal\t" << Total << "\n";
  OS << "#stat\tdropped\t" << Dropped << "\n";
  return OS.str();
}

bool parseManifest(const std::string &Text, std::vector<ManifestRow> &Rows,
                   std::string &Error) {
  std::istringstream IS(Text);
  std::string Line;
  int N = 0;
  while (std::getline(IS, Line)) {
    ++N;
    if (Line.empty() || Line[0] == '#')
      continue;
    size_t T1 = Line.find('\t');
    size_t T2 = T1 == std::string::npos ? std::string::npos
                                        : Line.find('\t', T1 + 1);
    if (T2 == std::string::npos) {
      Error = "manifest line " + std::to_string(N) + " is not site\\tfile\\tkey";
      return false;
    }
    ManifestRow R;
    R.Site = unescapeTsvField(Line.substr(0, T1));
    R.File = unescapeTsvField(Line.substr(T1 + 1, T2 - T1 - 1));
    R.Key = unescapeTsvField(Line.substr(T2 + 1));
    Rows.push_back(std::move(R));
  }
  return true;
}

std::string mineSummaryText(const MineSummary &S) {
  std::ostringstream OS;
  OS << "files = " << S.Files << "\n";
  OS << "functions = " << S.Functions << "\n";
  OS << "distinct lhs = " << S.DistinctLhs << "\n";
  OS << "opportunities = " << S.Opportunities << "\n";
  OS << "cache hits = " << S.CacheHits << "\n";
  OS << "cache misses = " << S.CacheMisses << "\n";
  OS << "optimizations found = " << S.OptimizationsFound << "\n";
  OS << "applications = " << S.Applications << "\n";
  OS << "dropped oversized = " << S.Drops << "\n";
  OS << "solver calls = " << S.SolverCalls << "\n";
  OS << "wall seconds = " << S.WallSeconds << "\n";
  for (const std::string &E : S.Errors)
    OS << "error: " << E << "\n";
  return OS.str();
}

bool readFile(const std::string &Path, std::string &Out, std::string &Error) {
  std::ifstream IS(Path, std::ios::binary);
  if (!IS.is_open()) {
    Error = "cannot open '" + Path + "'";
    return false;
  }
  std::ostringstream Buf;
  Buf << IS.rdbuf();
  Out = Buf.str();
  return true;
}

bool writeFile(const std::string &Path, const std::string &Data,
               std::string &Error) {
  std::ofstream OS(Path, std::ios::binary | std::ios::trunc);
  if (!OS.is_open()) {
    Error = "cannot write '" + Path + "'";
    return false;
  }
  OS.write(Data.data(), static_cast<std::streamsize>(Data.size()));
  return OS.good();
}

MineSummary mine(const std::vector<std::string> &CfgPaths, RunConfig &RC,
                 Store &S, SolverRunner &Runner,
                 std::vector<ManifestRow> *ManifestOut) {
  MineSummary Sum;
  auto Start = std::chrono::steady_clock::now();
  uint64_t CallsBefore = Runner.callCount();

  struct Pending {
    std::string Key;
    LeftHandSide Lhs;
  };
  std::vector<Pending> Missing;
  std::unordered_set<std::string> SeenKeys;
  std::vector<std::pair<std::string, std::string>> Occurrences; // site, key

  for (const std::string &Path : CfgPaths) {
    std::string Text, Err;
    if (!readFile(Path, Text, Err)) {
      Sum.Errors.push_back(Err);
      continue;
    }
    CfgParseResult PR = parseCfg(Text);
    if (!PR.ok()) {
      Sum.Errors.push_back(Path + ": " + formatDiagnostics(PR.Diags));
      continue;
    }
    ++Sum.Files;
    for (const CfgFunction &F : PR.Functions) {
      ++Sum.Functions;
      ExtractionResult ER = extractCandidates(F, RC.Extraction);
      Sum.Drops += ER.Dropped;
      for (Candidate &C : ER.Candidates) {
        std::string Key = cacheKey(C.Lhs, RC.fingerprint());
        ++Sum.Opportunities;
        Occurrences.emplace_back(Path + ":" + C.Site.str(), Key);
        bool FirstSeen = SeenKeys.insert(Key).second;
        if (!FirstSeen) {
          ++Sum.CacheHits;
        } else if (S.lookup(Key).Hit) {
          ++Sum.CacheHits;
        } else {
          ++Sum.CacheMisses;
          Missing.push_back({Key, C.Lhs});
        }
      }
    }
  }
  Sum.DistinctLhs = SeenKeys.size();

  // Synthesize every missing LHS on a bounded worker pool; the cache is the
  // only shared state.
  std::atomic<size_t> NextIdx{0};
  std::mutex ErrMutex;
  auto Work = [&]() {
    while (true) {
      size_t I = NextIdx.fetch_add(1);
      if (I >= Missing.size())
        return;
      // Mining wants strictly cheaper RHSs, so the search stops below the
      // LHS's own cost.
      SynthConfig Local = RC.Synth;
      Local.MaxCost = std::max(
          0, std::min(Local.MaxCost, costLhs(Missing[I].Lhs, RC.CM) - 1));
      SynthResult R = synthesize(Missing[I].Lhs, Local, Runner, RC.CM);
      std::optional<std::string> RhsText;
      if (R.K == SynthResult::Kind::Found)
        RhsText = printRhs(Missing[I].Lhs, *R.Rhs);
      else if (R.K == SynthResult::Kind::Error) {
        std::lock_guard Lock(ErrMutex);
        Sum.Errors.push_back("synthesis error: " + R.Error);
      }
      // NotFound and Timeout both record the null RHS.
      auto Conflict = S.record(Missing[I].Key, RhsText);
      if (Conflict) {
        std::lock_guard Lock(ErrMutex);
        Sum.Errors.push_back(*Conflict);
      }
    }
  };
  unsigned NumWorkers = std::max(1u, std::min<unsigned>(
                                         RC.Parallelism,
                                         static_cast<unsigned>(Missing.size())));
  if (Missing.size() <= 1 || NumWorkers == 1) {
    Work();
  } else {
    std::vector<std::thread> Threads;
    for (unsigned I = 0; I < NumWorkers; ++I)
      Threads.emplace_back(Work);
    for (auto &T : Threads)
      T.join();
  }

  // Counters and manifest, in deterministic candidate order.
  std::unordered_set<std::string> FoundKeys;
  for (const auto &[Site, Key] : Occurrences) {
    S.bumpStatic(Key);
    LookupResult L = S.lookup(Key);
    if (L.Hit && L.Entry.Rhs) {
      ++Sum.Applications;
      FoundKeys.insert(Key);
    }
    if (ManifestOut)
      ManifestOut->push_back({Site, "", Key});
  }
  Sum.OptimizationsFound = FoundKeys.size();

  std::string FlushErr;
  if (!S.flush(FlushErr))
    Sum.Errors.push_back(FlushErr);

  Sum.SolverCalls = Runner.callCount() - CallsBefore;
  Sum.WallSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - Start)
          .count();
  return Sum;
}

IngestResult ingestDynamicCounts(const std::string &CountsText,
                                 const std::vector<ManifestRow> &Manifest,
                                 Store &S) {
  IngestResult Out;
  std::unordered_map<std::string, std::string> SiteToKey;
  for (const ManifestRow &R : Manifest)
    SiteToKey[R.Site] = R.Key;

  std::istringstream IS(CountsText);
  std::string Line;
  int N = 0;
  while (std::getline(IS, Line)) {
    ++N;
    if (Line.empty() || Line[0] == '#')
      continue;
    size_t Tab = Line.find('\t');
    if (Tab == std::string::npos) {
      Out.Errors.push_back("counts line " + std::to_string(N) +
                           " is not site\\tcount");
      continue;
    }
    std::string Site = Line.substr(0, Tab);
    uint64_t Count = std::strtoull(Line.c_str() + Tab + 1, nullptr, 10);
    auto It = SiteToKey.find(Site);
    if (It == SiteToKey.end()) {
      ++Out.UnknownSites;
      continue;
    }
    S.addDynamic(It->second, Count);
    ++Out.Applied;
  }
  return Out;
}

} // namespace sopt
