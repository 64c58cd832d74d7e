#pragma once

#include <string>

#include "avsec/attacker.hpp"
#include "avsec/integrity.hpp"
#include "avsec/perception.hpp"
#include "avsec/safety.hpp"
#include "avsec/tracking.hpp"

namespace avsec {

// Everything tunable in one bundle. Defaults are the reference operating
// point; JSON overrides are partial (absent keys keep their defaults).
struct PipelineConfig {
  IntegrityConfig integrity;
  LidarDetectorConfig detector;
  Camera2dNoiseConfig camera2d;
  Camera3dNoiseConfig camera3d;
  FusionConfig fusion;
  AttackerConfig attacker;
  RssParams rss;
  double metrics_gate = 2.0;        // BEV meters for truth matching
  int truth_min_lidar_points = 8;   // visibility floor for scored truths
  bool drop_on_integrity_failure = false;
};

std::string config_to_json(const PipelineConfig& cfg);

// Parses overrides on top of defaults. Throws ConfigError on malformed JSON
// or unknown keys.
PipelineConfig config_from_json(const std::string& text);

// Same, but layered on an existing config.
void apply_config_json(PipelineConfig& cfg, const std::string& text);

}  // namespace avsec
