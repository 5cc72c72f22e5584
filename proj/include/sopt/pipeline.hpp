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

#ifndef SOPT_PIPELINE_HPP
#define SOPT_PIPELINE_HPP

#include "sopt/cache.hpp"
#include "sopt/extract.hpp"
#include "sopt/synth.hpp"

namespace sopt {

// Everything one run needs; validated up front and echoed into report
// headers for reproducibility.
struct RunConfig {
  SolverConfig Solver;
  SynthConfig Synth;
  CostModel CM;
  ExtractionConfig Extraction;
  std::string CachePath;
  unsigned Parallelism = 4;
  unsigned CheckTimeoutMillis = DefaultCheckTimeoutMillis;

  std::string fingerprint() const { return Synth.fingerprint(CM); }
  std::string configHeader() const;
};

std::string escapeTsvField(const std::string &S);
std::string unescapeTsvField(const std::string &S);

struct ManifestRow {
  std::string Site;
  std::string File; // candidate .sopt file when written, else empty
  std::string Key;
};

std::string manifestText(const std::vector<ManifestRow> &Rows, uint64_t Total,
                         uint64_t Dropped);
bool parseManifest(const std::string &Text, std::vector<ManifestRow> &Rows,
                   std::string &Error);

struct MineSummary {
  uint64_t Files = 0;
  uint64_t Functions = 0;
  uint64_t DistinctLhs = 0;
  uint64_t Opportunities = 0; // candidates within the size limit
  uint64_t CacheHits = 0;
  uint64_t CacheMisses = 0;
  uint64_t OptimizationsFound = 0; // distinct keys with a non-null RHS
  uint64_t Applications = 0;       // candidate occurrences with a non-null RHS
  uint64_t Drops = 0;              // candidates over the size limit
  uint64_t SolverCalls = 0;
  double WallSeconds = 0;
  std::vector<std::string> Errors;
};

std::string mineSummaryText(const MineSummary &S);

// extract -> canonicalize -> cache lookup -> synthesize on miss -> record.
// Per-file failures are logged and the run continues.
MineSummary mine(const std::vector<std::string> &CfgPaths, RunConfig &RC,
                 Store &S, SolverRunner &Runner,
                 std::vector<ManifestRow> *ManifestOut = nullptr);

// Adds dynamic profile counts (site-id TAB count) to the cache, mapping
// sites to keys through an extraction manifest.
struct IngestResult {
  uint64_t Applied = 0;
  uint64_t UnknownSites = 0;
  std::vector<std::string> Errors;
};
IngestResult ingestDynamicCounts(const std::string &CountsText,
                                 const std::vector<ManifestRow> &Manifest,
                                 Store &S);

bool readFile(const std::string &Path, std::string &Out, std::string &Error);
bool writeFile(const std::string &Path, const std::string &Data,
               std::string &Error);

} // namespace sopt

#endif // SOPT_PIPELINE_HPP
