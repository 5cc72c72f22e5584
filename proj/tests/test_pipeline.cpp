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

#include "testutil.hpp"

#include <doctest.h>
#include <filesystem>

using namespace sopt;
using namespace sopt::testutil;

TEST_SUITE_BEGIN("pipeline");

namespace {

RunConfig testRunConfig() {
  RunConfig RC;
  RC.Solver = solverConfigForTests();
  RC.Synth.PerLhsTimeoutMillis = 240000;
  RC.Synth.PerQueryTimeoutMillis = 60000;
  RC.Synth.MaxCost = 1;
  RC.Parallelism = 2;
  return RC;
}

} // namespace

TEST_CASE("tsv escaping round-trips") {
  std::string S = "a\tb\nc\\d";
  CHECK(unescapeTsvField(escapeTsvField(S)) == S);
  CHECK(escapeTsvField(S).find('\n') == std::string::npos);
  CHECK(escapeTsvField(S).find('\t') == std::string::npos);
}

TEST_CASE("manifest round-trips") {
  std::vector<ManifestRow> Rows = {
      {"f.cfg:@f:join:2", "cand_000000.sopt", "; cfg x\n%0:i8 = var\ninfer %0\n"},
      {"g.cfg:@g:merge:1", "", "; cfg y\n%0:i1 = var\ninfer %0\n"}};
  std::string Text = manifestText(Rows, 7, 3);
  CHECK(Text.find("#stat\ttotal\t7") != std::string::npos);
  CHECK(Text.find("#stat\tdropped\t3") != std::string::npos);
  std::vector<ManifestRow> Back;
  std::string Err;
  REQUIRE(parseManifest(Text, Back, Err));
  REQUIRE(Back.size() == 2);
  CHECK(Back[0].Site == Rows[0].Site);
  CHECK(Back[0].Key == Rows[0].Key);
  CHECK(Back[1].File == "");
}

TEST_CASE("empty corpus gives an all-zero summary") {
  RunConfig RC = testRunConfig();
  Store S;
  std::string Err;
  REQUIRE(S.open(Err));
  SolverRunner Runner(RC.Solver);
  MineSummary Sum = mine({}, RC, S, Runner);
  CHECK(Sum.Files == 0);
  CHECK(Sum.Opportunities == 0);
  CHECK(Sum.DistinctLhs == 0);
  CHECK(Sum.OptimizationsFound == 0);
  CHECK(Sum.Applications == 0);
  CHECK(Sum.SolverCalls == 0);
  CHECK(Sum.Errors.empty());
}

TEST_CASE("mine over the figure corpus finds the figure optimizations") {
  RunConfig RC = testRunConfig();
  Store S;
  std::string Err;
  REQUIRE(S.open(Err));
  SolverRunner Runner(RC.Solver);
  std::vector<ManifestRow> Manifest;
  MineSummary Sum = mine({fixturePath("fig2.cfg"), fixturePath("fig3.cfg")},
                         RC, S, Runner, &Manifest);
  std::string FirstError = Sum.Errors.empty() ? "" : Sum.Errors[0];
  REQUIRE_MESSAGE(Sum.Errors.empty(), FirstError);
  CHECK(Sum.Files == 2);
  CHECK(Sum.Functions == 2);
  CHECK(Sum.OptimizationsFound >= 2);
  CHECK(Sum.Opportunities == Sum.CacheHits + Sum.CacheMisses);
  CHECK(Sum.DistinctLhs <= Sum.Opportunities);
  CHECK(Sum.Applications >= Sum.OptimizationsFound);
  CHECK(Manifest.size() == Sum.Opportunities);
  CHECK(Sum.SolverCalls > 0);

  // identical corpus again: every lookup hits, no solver calls,
  // every static count doubles
  auto SnapBefore = S.snapshot();
  MineSummary Sum2 = mine({fixturePath("fig2.cfg"), fixturePath("fig3.cfg")},
                          RC, S, Runner);
  CHECK(Sum2.SolverCalls == 0);
  CHECK(Sum2.CacheMisses == 0);
  CHECK(Sum2.CacheHits == Sum2.Opportunities);
  CHECK(Sum2.OptimizationsFound == Sum.OptimizationsFound);
  auto SnapAfter = S.snapshot();
  REQUIRE(SnapBefore.size() == SnapAfter.size());
  for (const auto &[Key, E] : SnapBefore) {
    CHECK(SnapAfter.at(Key).StaticCount == 2 * E.StaticCount);
  }
}

TEST_CASE("mine reports are deterministic with a warm cache") {
  RunConfig RC = testRunConfig();
  Store S;
  std::string Err;
  REQUIRE(S.open(Err));
  SolverRunner Runner(RC.Solver);
  (void)mine({fixturePath("fig3.cfg")}, RC, S, Runner);
  auto Rows1 = rank(S.snapshot(), RankPolicy::Benefit, RC.CM);
  std::string Tsv1 = reportRowsTsv(Rows1);
  (void)mine({fixturePath("fig3.cfg")}, RC, S, Runner);
  auto Rows2 = rank(S.snapshot(), RankPolicy::Benefit, RC.CM);
  std::string Tsv2 = reportRowsTsv(Rows2);
  // counts doubled, so compare everything except the count columns
  CHECK(Rows1.size() == Rows2.size());
  for (size_t I = 0; I < Rows1.size(); ++I) {
    CHECK(Rows1[I].Key == Rows2[I].Key);
    CHECK(Rows1[I].Rhs == Rows2[I].Rhs);
    CHECK(Rows1[I].Score == Rows2[I].Score);
  }
  // and a third run with identical cache state gives identical bytes
  auto Rows3 = rank(S.snapshot(), RankPolicy::Benefit, RC.CM);
  CHECK(reportRowsTsv(Rows3) == Tsv2);
}

TEST_CASE("dynamic count ingestion maps sites through the manifest") {
  RunConfig RC = testRunConfig();
  Store S;
  std::string Err;
  REQUIRE(S.open(Err));
  SolverRunner Runner(RC.Solver);
  std::vector<ManifestRow> Manifest;
  (void)mine({fixturePath("fig3.cfg")}, RC, S, Runner, &Manifest);
  REQUIRE_FALSE(Manifest.empty());

  std::string Counts = Manifest[0].Site + "\t41\n" + Manifest[0].Site +
                       "\t1\nunknown:site:0\t9\n";
  IngestResult IR = ingestDynamicCounts(Counts, Manifest, S);
  CHECK(IR.Applied == 2);
  CHECK(IR.UnknownSites == 1);
  LookupResult L = S.lookup(Manifest[0].Key);
  REQUIRE(L.Hit);
  CHECK(L.Entry.DynamicCount == 42);
}

TEST_CASE("config header names every knob") {
  RunConfig RC = testRunConfig();
  std::string H = RC.configHeader();
  for (const char *Needle :
       {"solver", "ub-policy", "synth-mode", "max-cost", "cost-model",
        "cache", "parallelism", "harvest-blockpcs"})
    CHECK_MESSAGE(H.find(Needle) != std::string::npos, Needle);
}

TEST_SUITE_END();
