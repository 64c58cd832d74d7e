#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avsec/config.hpp"
#include "avsec/metrics.hpp"
#include "avsec/pipeline.hpp"

namespace avsec {

struct ExperimentPlan {
  std::vector<std::string> scenes;   // builtin names or scene-file paths; empty = full suite
  std::vector<AvKind> avs;           // empty = all four
  std::vector<AttackKind> attacks;   // baseline joined automatically
  uint64_t seed = 0;                 // added to each scene's own seed
  std::string out_dir = "out";
  PipelineConfig config;
};

ExperimentPlan plan_from_json(const std::string& text);  // throws ConfigError
std::string plan_to_json(const ExperimentPlan& plan);

struct PlanRunResult {
  bool ok = false;
  std::string out_dir;  // resolved against AVSEC_OUT_ROOT
  std::vector<std::string> errors;
  std::vector<ScenedIncrement> increments;
  std::vector<SummaryCell> summary;
};

// Runs every (scene, av, attack) cell into out_dir/{scene}/{av}/{attack}/
// (metrics.csv, tracks.csv, safety.csv, attacker_log.csv), then writes
// increments.csv, summary.csv, config.json and manifest.json at the root.
// Scene resolution happens before any work starts; a missing scene file
// throws with its path. workers <= 0 picks the hardware concurrency.
PlanRunResult run_plan(const ExperimentPlan& plan, int workers = 0);

// Grouped-bar SVGs (ft_inc, mt_inc, unsafe_fraction) per attack, bars per av.
// Baseline cells are skipped; an empty summary writes nothing. Every bar
// carries data-attack / data-av / data-value attributes for machine checks.
std::vector<std::string> emit_plots(const std::vector<SummaryCell>& summary,
                                    const std::string& dir);

std::vector<SummaryCell> parse_summary_csv(const std::string& text);

// $AVSEC_OUT_ROOT prefixes relative output paths when set.
std::string resolve_out_dir(const std::string& out_dir);

}  // namespace avsec
