#include "avsec/pipeline.hpp"

#include <cmath>
#include <sstream>

namespace avsec {

namespace {

constexpr uint64_t kCamera2dSalt = 0x2d;
constexpr uint64_t kCamera3dSalt = 0x3d;

std::vector<SafetyObject> truth_safety_objects(const std::vector<GroundTruthObject>& truth) {
  std::vector<SafetyObject> out;
  out.reserve(truth.size());
  for (const GroundTruthObject& g : truth) {
    out.push_back(SafetyObject{g.id, g.box.center, g.velocity});
  }
  return out;
}

}  // namespace

SceneData prepare_scene(const Scene& scene, const PipelineConfig& cfg) {
  SceneData data;
  data.scene = scene;
  data.sweeps.reserve(scene.frames);
  data.truth.reserve(scene.frames);
  data.camera2d.reserve(scene.frames);
  data.camera3d.reserve(scene.frames);
  data.truth_safety.reserve(scene.frames);
  data.ego_speed.reserve(scene.frames);
  for (int k = 0; k < scene.frames; ++k) {
    RenderResult r = render_sweep(scene, k);
    const std::vector<CameraTruthBox> cam_truth = render_camera_truth(scene, k);
    Rng rng2d = Rng::derive(scene.seed, kCamera2dSalt, static_cast<uint64_t>(k));
    Rng rng3d = Rng::derive(scene.seed, kCamera3dSalt, static_cast<uint64_t>(k));
    data.camera2d.push_back(detect_camera_2d(cam_truth, scene.camera, cfg.camera2d, rng2d));
    data.camera3d.push_back(detect_camera_mono3d(r.truth, scene.camera, cfg.camera3d, rng3d));
    const double t = scene.frame_time(k);
    const Vec3 ev = scene.ego.velocity_at(t);
    data.ego_speed.push_back(std::hypot(ev.x, ev.y));
    data.truth_safety.push_back(
        evaluate_frame(k, truth_safety_objects(r.truth), data.ego_speed.back(), cfg.rss));
    data.truth.push_back(std::move(r.truth));
    data.sweeps.push_back(std::move(r.sweep));
  }
  return data;
}

AttackData run_attack(const SceneData& data, AttackKind kind, const PipelineConfig& cfg) {
  AttackData out;
  out.kind = kind;
  const Scene& scene = data.scene;
  Attacker attacker(kind, cfg.attacker, scene.sensor, scene.frame_rate);
  TimingEstimator timing(scene.sensor.sweep_period(), cfg.integrity);
  out.sweeps.reserve(scene.frames);
  out.lidar_dets.reserve(scene.frames);
  out.integrity.reserve(scene.frames);
  for (int k = 0; k < scene.frames; ++k) {
    const double t0 = scene.frame_time(k);
    Sweep attacked = attacker.step(data.sweeps[k], t0);
    const double arrival = attacked.points.empty() ? t0 : attacked.points.front().t;
    out.integrity.push_back(
        check_all(attacked, scene.sensor, timing, arrival, cfg.integrity));
    out.lidar_dets.push_back(
        detect_lidar(attacked, scene.sensor.mount_height, cfg.detector));
    out.sweeps.push_back(std::move(attacked));
  }
  out.attacker_log = attacker.log();
  return out;
}

VictimRun run_victim(const SceneData& data, const AttackData& attack, AvKind av,
                     const PipelineConfig& cfg) {
  VictimRun run;
  run.av = av;
  run.attack = attack.kind;
  const Scene& scene = data.scene;
  const double dt = 1.0 / scene.frame_rate;
  VictimAv victim(av, cfg.fusion, scene.camera, dt);
  static const std::vector<BoxDetection> kNoDets;

  for (int k = 0; k < scene.frames; ++k) {
    const bool integrity_ok = attack.integrity[k].all();
    const std::vector<BoxDetection>& lidar =
        cfg.drop_on_integrity_failure && !integrity_ok ? kNoDets : attack.lidar_dets[k];
    const std::vector<Track> tracks = victim.step(lidar, data.camera2d[k], data.camera3d[k]);

    std::vector<std::array<double, 2>> pred;
    std::vector<SafetyObject> perceived_objects;
    pred.reserve(tracks.size());
    for (const Track& trk : tracks) {
      pred.push_back({trk.x(0), trk.x(1)});
      perceived_objects.push_back(SafetyObject{trk.id, trk.position(), trk.velocity()});
    }
    std::vector<std::array<double, 2>> scored;
    for (const GroundTruthObject& g : data.truth[k]) {
      if (g.lidar_points >= cfg.truth_min_lidar_points) {
        scored.push_back({g.box.center.x, g.box.center.y});
      }
    }
    const MatchCounts counts = match_and_count(pred, scored, cfg.metrics_gate);
    const SafetyVerdict perceived =
        evaluate_frame(k, perceived_objects, data.ego_speed[k], cfg.rss);
    const SafetyVerdict& truth = data.truth_safety[k];

    FrameMetrics fm;
    fm.frame = k;
    fm.false_positives = counts.unmatched_predictions;
    fm.false_negatives = counts.unmatched_truths;
    fm.false_tracks = counts.unmatched_predictions;
    fm.missed_tracks = counts.unmatched_truths;
    fm.unsafe_count = perceived.unsafe_count;
    fm.true_unsafe_count = truth.unsafe_count;
    fm.false_alarm = perceived_vs_true(perceived, truth) == SafetyComparison::kFalseAlarm;
    fm.integrity_pass = integrity_ok;
    run.frames.push_back(fm);
    run.perceived.push_back(perceived);
    run.tracks.push_back(FrameTracks{k, tracks});
  }
  return run;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char* status_name(TrackStatus s) {
  return s == TrackStatus::kConfirmed ? "confirmed" : "tentative";
}

const char* pipeline_name(TrackPipeline p) {
  switch (p) {
    case TrackPipeline::kLidar: return "lidar";
    case TrackPipeline::kCamera3d: return "camera3d";
    case TrackPipeline::kFused: return "fused";
  }
  return "lidar";
}

}  // namespace

std::string frame_metrics_csv(const std::vector<FrameMetrics>& frames) {
  std::ostringstream os;
  os << "frame,fp,fn,ft,mt,unsafe,true_unsafe,false_alarm,integrity_pass\n";
  for (const FrameMetrics& f : frames) {
    os << f.frame << ',' << f.false_positives << ',' << f.false_negatives << ','
       << f.false_tracks << ',' << f.missed_tracks << ',' << f.unsafe_count << ','
       << f.true_unsafe_count << ',' << (f.false_alarm ? 1 : 0) << ','
       << (f.integrity_pass ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string tracks_csv(const std::vector<FrameTracks>& tracks) {
  std::ostringstream os;
  os << "frame,track_id,px,py,pz,vx,vy,vz,length,width,height,yaw,status,pipeline\n";
  for (const FrameTracks& ft : tracks) {
    for (const Track& t : ft.tracks) {
      os << ft.frame << ',' << t.id;
      for (int i = 0; i < 10; ++i) {
        // state order px py pz vx vy vz l w h yaw matches the header
        os << ',' << fmt(t.x(i));
      }
      os << ',' << status_name(t.status) << ',' << pipeline_name(t.pipeline) << '\n';
    }
  }
  return os.str();
}

std::string safety_csv(const std::vector<SafetyVerdict>& perceived,
                       const std::vector<SafetyVerdict>& truth) {
  std::ostringstream os;
  os << "frame,perceived_unsafe,true_unsafe,comparison\n";
  for (size_t k = 0; k < perceived.size(); ++k) {
    const SafetyVerdict& p = perceived[k];
    const SafetyVerdict& t = truth[k];
    const SafetyComparison c = perceived_vs_true(p, t);
    const char* name = c == SafetyComparison::kFalseAlarm
                           ? "false_alarm"
                           : c == SafetyComparison::kMissedDanger ? "missed_danger"
                                                                  : "consistent";
    os << p.frame << ',' << p.unsafe_count << ',' << t.unsafe_count << ',' << name << '\n';
  }
  return os.str();
}

}  // namespace avsec
