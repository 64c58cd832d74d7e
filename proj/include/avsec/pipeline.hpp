#pragma once

#include <vector>

#include "avsec/attacker.hpp"
#include "avsec/config.hpp"
#include "avsec/integrity.hpp"
#include "avsec/metrics.hpp"
#include "avsec/safety.hpp"
#include "avsec/scene.hpp"
#include "avsec/tracking.hpp"

namespace avsec {

// Everything derivable from the scene alone, rendered once and shared by all
// (attack, av) runs: clean sweeps, ground truth, pre-seeded camera detections
// (identical streams regardless of the lidar attack), true safety verdicts.
struct SceneData {
  Scene scene;
  std::vector<Sweep> sweeps;
  std::vector<std::vector<GroundTruthObject>> truth;
  std::vector<std::vector<BoxDetection>> camera2d;
  std::vector<std::vector<BoxDetection>> camera3d;
  std::vector<SafetyVerdict> truth_safety;
  std::vector<double> ego_speed;
};

SceneData prepare_scene(const Scene& scene, const PipelineConfig& cfg);

// Attacker pass over the clean sweeps plus everything victim-side that
// depends only on the attacked stream: lidar detections and integrity
// verdicts (shared across the four victim architectures).
struct AttackData {
  AttackKind kind = AttackKind::kNone;
  std::vector<Sweep> sweeps;
  std::vector<std::vector<BoxDetection>> lidar_dets;
  std::vector<IntegrityVerdict> integrity;
  std::vector<AttackerLogRow> attacker_log;
};

AttackData run_attack(const SceneData& data, AttackKind kind, const PipelineConfig& cfg);

struct FrameTracks {
  int frame = 0;
  std::vector<Track> tracks;
};

struct VictimRun {
  AvKind av = AvKind::kAv1;
  AttackKind attack = AttackKind::kNone;
  std::vector<FrameMetrics> frames;
  std::vector<SafetyVerdict> perceived;
  std::vector<FrameTracks> tracks;
};

VictimRun run_victim(const SceneData& data, const AttackData& attack, AvKind av,
                     const PipelineConfig& cfg);

std::string frame_metrics_csv(const std::vector<FrameMetrics>& frames);
std::string tracks_csv(const std::vector<FrameTracks>& tracks);
std::string safety_csv(const std::vector<SafetyVerdict>& perceived,
                       const std::vector<SafetyVerdict>& truth);

}  // namespace avsec
