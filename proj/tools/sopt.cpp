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
#include "sopt/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace sopt;

namespace {

struct CommonOpts {
  std::string Solver;
  std::string SolverArgs;
  std::string Cache;
  std::string EmitQueries;
  unsigned TimeoutMs = 10000;
  unsigned LhsTimeoutMs = 60000;
  unsigned Jobs = 4;
  bool NoExploitUb = false;
};

void addCommon(CLI::App *Cmd, CommonOpts &C) {
  Cmd->add_option("--solver", C.Solver, "solver executable (default: $SOPT_SOLVER or z3 on PATH)");
  Cmd->add_option("--solver-args", C.SolverArgs, "solver argument template, space separated");
  Cmd->add_option("--cache", C.Cache, "cache file path");
  Cmd->add_option("--emit-queries", C.EmitQueries, "dump every solver query into this directory");
  Cmd->add_option("--timeout-ms", C.TimeoutMs, "per-query solver timeout (ms)");
  Cmd->add_option("--lhs-timeout-ms", C.LhsTimeoutMs, "per-LHS synthesis budget (ms)");
  Cmd->add_option("--jobs", C.Jobs, "worker pool size");
  Cmd->add_flag("--no-exploit-ub", C.NoExploitUb, "do not exploit left-hand-side undefined behavior");
}

SolverConfig solverConfig(const CommonOpts &C) {
  SolverConfig SC = SolverConfig::discover();
  if (!C.Solver.empty()) {
    SC.Path = C.Solver;
    SC.Args.clear();
  }
  if (!C.SolverArgs.empty()) {
    SC.Args.clear();
    std::istringstream IS(C.SolverArgs);
    std::string Tok;
    while (IS >> Tok)
      SC.Args.push_back(Tok);
  }
  if (!C.EmitQueries.empty()) {
    std::error_code EC;
    std::filesystem::create_directories(C.EmitQueries, EC);
    SC.DumpDir = C.EmitQueries;
  }
  return SC;
}

RunConfig runConfig(const CommonOpts &C) {
  RunConfig RC;
  RC.Solver = solverConfig(C);
  RC.Synth.Policy = C.NoExploitUb ? UbPolicy::NoExploit : UbPolicy::Exploit;
  RC.Synth.PerQueryTimeoutMillis = C.TimeoutMs;
  RC.Synth.PerLhsTimeoutMillis = C.LhsTimeoutMs;
  RC.CachePath = C.Cache;
  RC.Parallelism = C.Jobs;
  RC.CheckTimeoutMillis = C.TimeoutMs;
  return RC;
}

int die(const std::string &Msg) {
  std::cerr << "sopt: " << Msg << "\n";
  return 2;
}

std::vector<std::string> expandCorpus(const std::vector<std::string> &Paths,
                                      const std::string &Ext) {
  std::vector<std::string> Out;
  for (const std::string &P : Paths) {
    std::error_code EC;
    if (std::filesystem::is_directory(P, EC)) {
      std::vector<std::string> Files;
      for (const auto &E : std::filesystem::directory_iterator(P, EC))
        if (E.is_regular_file() && E.path().extension() == Ext)
          Files.push_back(E.path().string());
      std::sort(Files.begin(), Files.end());
      Out.insert(Out.end(), Files.begin(), Files.end());
    } else {
      Out.push_back(P);
    }
  }
  return Out;
}

int cmdCheck(const std::vector<std::string> &Files, const CommonOpts &C) {
  SolverRunner Runner(solverConfig(C));
  UbPolicy Policy = C.NoExploitUb ? UbPolicy::NoExploit : UbPolicy::Exploit;
  bool AnyInvalid = false, AnyError = false;
  for (const std::string &Path : Files) {
    std::string Text, Err;
    if (!readFile(Path, Text, Err))
      return die(Err);
    ParseResult PR = parseInput(Text);
    if (!PR.ok()) {
      std::cerr << Path << ":\n" << formatDiagnostics(PR.Diags);
      return 2;
    }
    if (!PR.Rhs) {
      std::cerr << Path << ": no 'result' line; nothing to check\n";
      return 2;
    }
    CompleteOptimization Opt{canonicalize(*PR.Lhs), *PR.Rhs};
    Verdict V = check(Opt, Policy, Runner, C.TimeoutMs);
    switch (V.K) {
    case Verdict::Kind::Valid:
      std::cout << Path << ": valid\n";
      break;
    case Verdict::Kind::Invalid:
      std::cout << Path << ": invalid\n"
                << formatCounterexample(Opt.Lhs, *V.CE);
      AnyInvalid = true;
      break;
    case Verdict::Kind::Timeout:
      std::cout << Path << ": timeout\n";
      AnyError = true;
      break;
    case Verdict::Kind::Error:
      std::cout << Path << ": error: " << V.Message << "\n";
      AnyError = true;
      break;
    }
  }
  if (AnyError)
    return 2;
  return AnyInvalid ? 1 : 0;
}

int cmdInfer(const std::string &File, const CommonOpts &C, int MaxCost,
             bool ConstantsOnly, bool BoolRootsOnly) {
  SolverRunner Runner(solverConfig(C));
  std::string Text, Err;
  if (!readFile(File, Text, Err))
    return die(Err);
  ParseResult PR = parseInput(Text);
  if (!PR.ok()) {
    std::cerr << File << ":\n" << formatDiagnostics(PR.Diags);
    return 2;
  }
  SynthConfig Cfg;
  Cfg.MaxCost = MaxCost;
  Cfg.Policy = C.NoExploitUb ? UbPolicy::NoExploit : UbPolicy::Exploit;
  Cfg.PerQueryTimeoutMillis = C.TimeoutMs;
  Cfg.PerLhsTimeoutMillis = C.LhsTimeoutMs;
  if (ConstantsOnly)
    Cfg.Mode = SynthMode::ConstantsOnly;
  else if (BoolRootsOnly)
    Cfg.Mode = SynthMode::BoolRootsOnly;

  LeftHandSide Lhs = canonicalize(*PR.Lhs);
  SynthResult R = synthesize(Lhs, Cfg, Runner, CostModel{});
  switch (R.K) {
  case SynthResult::Kind::Found:
    std::cout << printRhs(Lhs, *R.Rhs);
    return 0;
  case SynthResult::Kind::NotFound:
    std::cout << "; no result\n";
    return 0;
  case SynthResult::Kind::Timeout:
    std::cout << "; timeout\n";
    return 2;
  case SynthResult::Kind::Error:
    return die(R.Error);
  }
  return 2;
}

int cmdExtract(const std::vector<std::string> &Files, const std::string &OutDir,
               const CommonOpts &C, RunConfig &RC) {
  std::error_code EC;
  std::filesystem::create_directories(OutDir, EC);
  (void)C;
  std::vector<ManifestRow> Manifest;
  uint64_t Total = 0, Dropped = 0, FileSeq = 0;
  for (const std::string &Path : expandCorpus(Files, ".cfg")) {
    std::string Text, Err;
    if (!readFile(Path, Text, Err))
      return die(Err);
    CfgParseResult PR = parseCfg(Text);
    if (!PR.ok()) {
      std::cerr << Path << ":\n" << formatDiagnostics(PR.Diags);
      return 2;
    }
    for (const CfgFunction &F : PR.Functions) {
      ExtractionResult ER = extractCandidates(F, RC.Extraction);
      Total += ER.Total;
      Dropped += ER.Dropped;
      for (const Candidate &Cand : ER.Candidates) {
        char Name[32];
        snprintf(Name, sizeof(Name), "cand_%06llu.sopt",
                 static_cast<unsigned long long>(FileSeq++));
        std::string OutPath = OutDir + "/" + Name;
        std::string Err2;
        if (!writeFile(OutPath, printLhs(Cand.Lhs), Err2))
          return die(Err2);
        Manifest.push_back({Path + ":" + Cand.Site.str(), Name,
                            cacheKey(Cand.Lhs, RC.fingerprint())});
      }
    }
  }
  std::string Err;
  if (!writeFile(OutDir + "/manifest.tsv", manifestText(Manifest, Total, Dropped),
                 Err))
    return die(Err);
  std::cout << "candidates = " << Manifest.size() << "\n"
            << "dropped = " << Dropped << "\n";
  return 0;
}

int cmdMine(const std::vector<std::string> &Paths, const CommonOpts &C,
            RunConfig &RC, const std::string &ManifestOut) {
  SolverRunner Runner(RC.Solver);
  Store S(RC.CachePath.empty() ? Store() : Store(RC.CachePath));
  std::string Err;
  if (!S.open(Err))
    return die(Err);
  (void)C;
  std::vector<ManifestRow> Manifest;
  MineSummary Sum = mine(expandCorpus(Paths, ".cfg"), RC, S, Runner,
                         ManifestOut.empty() ? nullptr : &Manifest);
  std::cout << RC.configHeader();
  std::cout << mineSummaryText(Sum);
  if (!ManifestOut.empty()) {
    if (!writeFile(ManifestOut, manifestText(Manifest, Sum.Opportunities + Sum.Drops,
                                             Sum.Drops),
                   Err))
      return die(Err);
  }
  return Sum.Errors.empty() ? 0 : 2;
}

int cmdReport(const CommonOpts &C, RunConfig &RC, const std::string &RankBy,
              int MaxLhsNodes, const std::string &IngestFile,
              const std::string &ManifestFile) {
  if (RC.CachePath.empty())
    return die("report requires --cache");
  Store S{RC.CachePath};
  std::string Err;
  if (!S.open(Err))
    return die(Err);
  (void)C;

  if (!IngestFile.empty()) {
    if (ManifestFile.empty())
      return die("--ingest-dynamic requires --manifest");
    std::string Counts, ManifestText;
    if (!readFile(IngestFile, Counts, Err) ||
        !readFile(ManifestFile, ManifestText, Err))
      return die(Err);
    std::vector<ManifestRow> Rows;
    if (!parseManifest(ManifestText, Rows, Err))
      return die(Err);
    IngestResult IR = ingestDynamicCounts(Counts, Rows, S);
    std::cout << "ingested = " << IR.Applied << "\n"
              << "unknown sites = " << IR.UnknownSites << "\n";
    for (const std::string &E : IR.Errors)
      std::cerr << E << "\n";
    if (!S.flush(Err))
      return die(Err);
    if (RankBy.empty())
      return IR.Errors.empty() ? 0 : 2;
  }

  RankPolicy Policy = RankPolicy::Benefit;
  if (RankBy == "static")
    Policy = RankPolicy::StaticCount;
  else if (RankBy == "dynamic")
    Policy = RankPolicy::DynamicCount;
  else if (RankBy == "benefit")
    Policy = RankPolicy::Benefit;
  else if (!RankBy.empty())
    return die("unknown rank policy '" + RankBy + "'");

  std::optional<int> MaxNodes;
  if (MaxLhsNodes > 0)
    MaxNodes = MaxLhsNodes;
  auto Rows = rank(S.snapshot(), Policy, RC.CM, MaxNodes);
  std::cout << RC.configHeader();
  std::cout << reportRowsTsv(Rows);
  return 0;
}

} // namespace

int main(int Argc, char **Argv) {
  CLI::App App{"sopt: a synthesizing superoptimizer for a bitvector dataflow IR"};
  App.require_subcommand(1);

  CommonOpts C;

  auto *Check = App.add_subcommand("check", "verify complete optimizations");
  std::vector<std::string> CheckFiles;
  Check->add_option("files", CheckFiles, "optimization files")->required();
  addCommon(Check, C);

  auto *Infer = App.add_subcommand("infer", "synthesize a right-hand side");
  std::string InferFile;
  int MaxCost = 3;
  bool ConstantsOnly = false, BoolRootsOnly = false;
  Infer->add_option("file", InferFile, "left-hand-side file")->required();
  Infer->add_option("--max-cost", MaxCost, "maximum RHS cost to try");
  Infer->add_flag("--constants-only", ConstantsOnly, "synthesize constants only");
  Infer->add_flag("--bool-roots-only", BoolRootsOnly, "only 1-bit roots");
  addCommon(Infer, C);

  auto *Extract = App.add_subcommand("extract", "extract candidate LHSs from CFG files");
  std::vector<std::string> ExtractFiles;
  std::string OutDir;
  size_t MaxBytes = 1024;
  unsigned MaxDepth = 0;
  bool NoPcs = false, NoBlockpcs = false;
  Extract->add_option("files", ExtractFiles, "CFG files or directories")->required();
  Extract->add_option("--out", OutDir, "output directory")->required();
  Extract->add_option("--max-bytes", MaxBytes, "serialized LHS size limit");
  Extract->add_option("--max-depth", MaxDepth, "depth-limited extraction");
  Extract->add_flag("--no-pcs", NoPcs, "do not harvest path conditions");
  Extract->add_flag("--no-blockpcs", NoBlockpcs, "do not harvest blockpcs");
  addCommon(Extract, C);

  auto *Mine = App.add_subcommand("mine", "extract, synthesize and cache over a corpus");
  std::vector<std::string> MinePaths;
  std::string MineManifest;
  int MineMaxCost = 3;
  bool MineConstantsOnly = false, MineBoolRootsOnly = false;
  Mine->add_option("paths", MinePaths, "CFG files or directories")->required();
  Mine->add_option("--manifest-out", MineManifest, "write a site manifest");
  Mine->add_option("--max-cost", MineMaxCost, "maximum RHS cost to try");
  Mine->add_flag("--constants-only", MineConstantsOnly, "synthesize constants only");
  Mine->add_flag("--bool-roots-only", MineBoolRootsOnly, "only 1-bit roots");
  Mine->add_option("--max-bytes", MaxBytes, "serialized LHS size limit");
  Mine->add_flag("--no-pcs", NoPcs, "do not harvest path conditions");
  Mine->add_flag("--no-blockpcs", NoBlockpcs, "do not harvest blockpcs");
  addCommon(Mine, C);

  auto *Report = App.add_subcommand("report", "rank cached optimizations");
  std::string RankBy, IngestFile, ManifestFile;
  int MaxLhsNodes = 0;
  Report->add_option("--rank", RankBy, "static | dynamic | benefit");
  Report->add_option("--max-lhs-nodes", MaxLhsNodes, "drop LHSs with more nodes");
  Report->add_option("--ingest-dynamic", IngestFile, "dynamic counts file (site\\tcount)");
  Report->add_option("--manifest", ManifestFile, "extraction manifest for site lookup");
  addCommon(Report, C);

  CLI11_PARSE(App, Argc, Argv);

  RunConfig RC = runConfig(C);
  RC.Extraction.MaxSerializedBytes = MaxBytes;
  if (MaxDepth > 0)
    RC.Extraction.MaxDepth = MaxDepth;
  RC.Extraction.HarvestPcs = !NoPcs;
  RC.Extraction.HarvestBlockpcs = !NoBlockpcs;

  if (Check->parsed())
    return cmdCheck(CheckFiles, C);
  if (Infer->parsed())
    return cmdInfer(InferFile, C, MaxCost, ConstantsOnly, BoolRootsOnly);
  if (Extract->parsed())
    return cmdExtract(ExtractFiles, OutDir, C, RC);
  if (Mine->parsed()) {
    RC.Synth.MaxCost = MineMaxCost;
    if (MineConstantsOnly)
      RC.Synth.Mode = SynthMode::ConstantsOnly;
    else if (MineBoolRootsOnly)
      RC.Synth.Mode = SynthMode::BoolRootsOnly;
    return cmdMine(MinePaths, C, RC, MineManifest);
  }
  if (Report->parsed())
    return cmdReport(C, RC, RankBy, MaxLhsNodes, IngestFile, ManifestFile);
  return 2;
}
