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

#ifndef SOPT_CACHE_HPP
#define SOPT_CACHE_HPP

#include "sopt/ir.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace sopt {

// A cached outcome for one canonical LHS. A present-but-null RHS is a
// first-class result: it records that synthesis found nothing. Recorded
// distinguishes a stored outcome from an entry that only carries counters.
struct CacheEntry {
  std::optional<std::string> Rhs;
  uint64_t StaticCount = 0;
  uint64_t DynamicCount = 0;
  bool Recorded = false;
};

// The level-2 store behind the in-memory cache. The bundled implementation
// is a file (append log plus index); a networked key-value client would
// implement the same interface.
class KvBackend {
public:
  virtual ~KvBackend() = default;
  virtual bool load(std::unordered_map<std::string, CacheEntry> &Out,
                    std::string &Error) = 0;
  virtual bool store(const std::unordered_map<std::string, CacheEntry> &Dirty,
                     std::string &Error) = 0;
};

// Append-log file with a sidecar index ("<path>.idx"). Superseded records
// remain in the log; the latest record per key wins on replay. The index is
// a pure accelerator and is rebuilt whenever its stamp mismatches the log.
std::unique_ptr<KvBackend> makeFileKv(std::string Path);

struct LookupResult {
  bool Hit = false;
  CacheEntry Entry;
};

// Two-level cache: a synchronized in-memory map over an optional persistent
// backend. Level-2 hits are promoted to level-1; flush() writes dirty
// entries through.
class Store {
public:
  Store(); // memory-only
  explicit Store(std::string Path);
  explicit Store(std::unique_ptr<KvBackend> Backend);
  ~Store();

  bool open(std::string &Error);

  LookupResult lookup(const std::string &Key);
  // Idempotent for identical values; a different RHS for an existing key is
  // an error (it signals nondeterminism upstream).
  std::optional<std::string> record(const std::string &Key,
                                    const std::optional<std::string> &Rhs);
  void bumpStatic(const std::string &Key);
  void addDynamic(const std::string &Key, uint64_t N);

  bool flush(std::string &Error);
  std::map<std::string, CacheEntry> snapshot() const;

private:
  CacheEntry &entryLocked(const std::string &Key);

  mutable std::shared_mutex Mutex;
  std::unordered_map<std::string, CacheEntry> L1;
  std::unordered_map<std::string, bool> Dirty;
  std::unique_ptr<KvBackend> Backend;
  bool Loaded = false;
};

// Builds the cache key for a canonical LHS under a configuration
// fingerprint. The fingerprint rides in a comment line, so a key parses as
// ordinary IR text.
std::string cacheKey(const LeftHandSide &CanonicalLhs,
                     const std::string &ConfigFingerprint);

enum class RankPolicy { StaticCount, DynamicCount, Benefit, ComplexityFiltered };

struct ReportRow {
  std::string Key;
  uint64_t Score = 0;
  int LhsCost = 0;
  int RhsCost = 0;
  int LhsNodes = 0;
  uint64_t StaticCount = 0;
  uint64_t DynamicCount = 0;
  std::string Rhs;
};

// Stable descending order by the policy's score. Entries with a null RHS
// are not optimizations and are omitted. ComplexityFiltered ranks by
// benefit after dropping LHSs with more than MaxLhsNodes nodes; the node
// filter also applies to other policies when MaxLhsNodes is set.
std::vector<ReportRow> rank(const std::map<std::string, CacheEntry> &Entries,
                            RankPolicy Policy, const CostModel &CM,
                            std::optional<int> MaxLhsNodes = std::nullopt);

std::string reportRowsTsv(const std::vector<ReportRow> &Rows);

} // namespace sopt

#endif // SOPT_CACHE_HPP
