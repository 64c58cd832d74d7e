#include "avsec/config.hpp"

#include <json.hpp>

namespace avsec {

namespace {

using nlohmann::json;

json integrity_json(const IntegrityConfig& c) {
  return {{"beta_fraction", c.beta_fraction},
          {"gamma", c.gamma},
          {"sigma_gamma", c.sigma_gamma},
          {"process_noise_scale", c.process_noise_scale}};
}

json detector_json(const LidarDetectorConfig& c) {
  return {{"cluster_eps", c.cluster_eps},
          {"min_points", c.min_points},
          {"ground_margin", c.ground_margin},
          {"score_norm", c.score_norm},
          {"prior_length", c.prior_length},
          {"prior_width", c.prior_width},
          {"side_view_extent", c.side_view_extent},
          {"face_view_extent", c.face_view_extent},
          {"max_growable_extent", c.max_growable_extent},
          {"min_dim", c.min_dim},
          {"min_height", c.min_height}};
}

json camera2d_json(const Camera2dNoiseConfig& c) {
  return {{"sigma_px", c.sigma_px}, {"p_fn", c.p_fn}, {"lambda_fp", c.lambda_fp}};
}

json camera3d_json(const Camera3dNoiseConfig& c) {
  return {{"depth_sigma_scale", c.depth_sigma_scale},
          {"lateral_sigma", c.lateral_sigma},
          {"vertical_sigma", c.vertical_sigma},
          {"dim_sigma", c.dim_sigma},
          {"yaw_sigma", c.yaw_sigma},
          {"p_fn", c.p_fn},
          {"lambda_fp", c.lambda_fp},
          {"fp_range_min", c.fp_range_min},
          {"fp_range_max", c.fp_range_max}};
}

json fusion_json(const FusionConfig& c) {
  return {{"association_gate", c.association_gate},
          {"association_gate_px", c.association_gate_px},
          {"confirm_hits", c.confirm_hits},
          {"delete_misses", c.delete_misses},
          {"ci_weight", c.ci_weight},
          {"asymmetry_window_len", c.asymmetry_window_len},
          {"asymmetry_min_camera_ratio", c.asymmetry_min_camera_ratio},
          {"q_pos", c.q_pos},
          {"q_vel", c.q_vel},
          {"q_box", c.q_box},
          {"r_lidar_pos", c.r_lidar_pos},
          {"r_lidar_dim", c.r_lidar_dim},
          {"r_lidar_yaw", c.r_lidar_yaw},
          {"r_cam3d_pos", c.r_cam3d_pos},
          {"r_cam3d_dim", c.r_cam3d_dim},
          {"r_cam3d_yaw", c.r_cam3d_yaw},
          {"sigma_px", c.sigma_px},
          {"p0_pos", c.p0_pos},
          {"p0_vel", c.p0_vel},
          {"p0_dim", c.p0_dim},
          {"p0_yaw", c.p0_yaw}};
}

json attacker_json(const AttackerConfig& c) {
  return {{"stable_duration", c.stable_duration},
          {"attack_duration", c.attack_duration},
          {"rho_start", c.rho_start},
          {"rho_end", c.rho_end},
          {"theta_start", c.theta_start},
          {"theta_end", c.theta_end},
          {"buffer_capacity", c.buffer_capacity},
          {"trigger_frame", c.trigger_frame},
          {"smoothing_repeats", c.smoothing_repeats},
          {"min_track_age", c.min_track_age},
          {"bearing_gate", c.bearing_gate},
          {"range_gate_min", c.range_gate_min},
          {"range_gate_max", c.range_gate_max},
          {"lateral_vel_min", c.lateral_vel_min},
          {"lateral_vel_max", c.lateral_vel_max},
          {"forward_vel_min", c.forward_vel_min},
          {"forward_vel_max", c.forward_vel_max},
          {"trace_density", c.trace_density},
          {"trace_length", c.trace_length},
          {"trace_width", c.trace_width},
          {"trace_height", c.trace_height},
          {"box_inflation", c.box_inflation},
          {"min_trace_for_fit", c.min_trace_for_fit},
          {"tps_max_points", c.tps_max_points},
          {"tps_ridge", c.tps_ridge},
          {"knn_neighbors", c.knn_neighbors},
          {"min_fake_range", c.min_fake_range},
          {"height_channels", c.height_channels},
          {"height_max_samples", c.height_max_samples},
          {"bev_gate", c.bev_gate},
          {"bev_confirm_hits", c.bev_confirm_hits},
          {"bev_delete_misses", c.bev_delete_misses},
          {"bev_q_pos", c.bev_q_pos},
          {"bev_q_vel", c.bev_q_vel},
          {"bev_r_pos", c.bev_r_pos},
          {"bev_p0_pos", c.bev_p0_pos},
          {"bev_p0_vel", c.bev_p0_vel},
          {"detector", detector_json(c.detector)}};
}

json rss_json(const RssParams& c) {
  return {{"response_time", c.response_time},
          {"a_max_accel", c.a_max_accel},
          {"b_min_brake", c.b_min_brake},
          {"b_max_brake", c.b_max_brake},
          {"lane_margin", c.lane_margin}};
}

template <typename T>
void pull(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("unknown config key: " + scope + key);
  }
}

void parse_integrity(const json& j, IntegrityConfig& c) {
  check_keys(j, {"beta_fraction", "gamma", "sigma_gamma", "process_noise_scale"},
             "integrity.");
  pull(j, "beta_fraction", c.beta_fraction);
  pull(j, "gamma", c.gamma);
  pull(j, "sigma_gamma", c.sigma_gamma);
  pull(j, "process_noise_scale", c.process_noise_scale);
}

void parse_detector(const json& j, LidarDetectorConfig& c, const std::string& scope) {
  check_keys(j,
             {"cluster_eps", "min_points", "ground_margin", "score_norm", "prior_length",
              "prior_width", "side_view_extent", "face_view_extent", "max_growable_extent",
              "min_dim", "min_height"},
             scope);
  pull(j, "cluster_eps", c.cluster_eps);
  pull(j, "min_points", c.min_points);
  pull(j, "ground_margin", c.ground_margin);
  pull(j, "score_norm", c.score_norm);
  pull(j, "prior_length", c.prior_length);
  pull(j, "prior_width", c.prior_width);
  pull(j, "side_view_extent", c.side_view_extent);
  pull(j, "face_view_extent", c.face_view_extent);
  pull(j, "max_growable_extent", c.max_growable_extent);
  pull(j, "min_dim", c.min_dim);
  pull(j, "min_height", c.min_height);
}

void parse_camera2d(const json& j, Camera2dNoiseConfig& c) {
  check_keys(j, {"sigma_px", "p_fn", "lambda_fp"}, "camera2d.");
  pull(j, "sigma_px", c.sigma_px);
  pull(j, "p_fn", c.p_fn);
  pull(j, "lambda_fp", c.lambda_fp);
}

void parse_camera3d(const json& j, Camera3dNoiseConfig& c) {
  check_keys(j,
             {"depth_sigma_scale", "lateral_sigma", "vertical_sigma", "dim_sigma",
              "yaw_sigma", "p_fn", "lambda_fp", "fp_range_min", "fp_range_max"},
             "camera3d.");
  pull(j, "depth_sigma_scale", c.depth_sigma_scale);
  pull(j, "lateral_sigma", c.lateral_sigma);
  pull(j, "vertical_sigma", c.vertical_sigma);
  pull(j, "dim_sigma", c.dim_sigma);
  pull(j, "yaw_sigma", c.yaw_sigma);
  pull(j, "p_fn", c.p_fn);
  pull(j, "lambda_fp", c.lambda_fp);
  pull(j, "fp_range_min", c.fp_range_min);
  pull(j, "fp_range_max", c.fp_range_max);
}

void parse_fusion(const json& j, FusionConfig& c) {
  check_keys(j,
             {"association_gate", "association_gate_px", "confirm_hits", "delete_misses",
              "ci_weight", "asymmetry_window_len", "asymmetry_min_camera_ratio", "q_pos",
              "q_vel", "q_box", "r_lidar_pos", "r_lidar_dim", "r_lidar_yaw", "r_cam3d_pos",
              "r_cam3d_dim", "r_cam3d_yaw", "sigma_px", "p0_pos", "p0_vel", "p0_dim",
              "p0_yaw"},
             "fusion.");
  pull(j, "association_gate", c.association_gate);
  pull(j, "association_gate_px", c.association_gate_px);
  pull(j, "confirm_hits", c.confirm_hits);
  pull(j, "delete_misses", c.delete_misses);
  pull(j, "ci_weight", c.ci_weight);
  pull(j, "asymmetry_window_len", c.asymmetry_window_len);
  pull(j, "asymmetry_min_camera_ratio", c.asymmetry_min_camera_ratio);
  pull(j, "q_pos", c.q_pos);
  pull(j, "q_vel", c.q_vel);
  pull(j, "q_box", c.q_box);
  pull(j, "r_lidar_pos", c.r_lidar_pos);
  pull(j, "r_lidar_dim", c.r_lidar_dim);
  pull(j, "r_lidar_yaw", c.r_lidar_yaw);
  pull(j, "r_cam3d_pos", c.r_cam3d_pos);
  pull(j, "r_cam3d_dim", c.r_cam3d_dim);
  pull(j, "r_cam3d_yaw", c.r_cam3d_yaw);
  pull(j, "sigma_px", c.sigma_px);
  pull(j, "p0_pos", c.p0_pos);
  pull(j, "p0_vel", c.p0_vel);
  pull(j, "p0_dim", c.p0_dim);
  pull(j, "p0_yaw", c.p0_yaw);
}

void parse_attacker(const json& j, AttackerConfig& c) {
  check_keys(j,
             {"stable_duration", "attack_duration", "rho_start", "rho_end", "theta_start",
              "theta_end", "buffer_capacity", "trigger_frame", "smoothing_repeats",
              "min_track_age", "bearing_gate", "range_gate_min", "range_gate_max",
              "lateral_vel_min", "lateral_vel_max", "forward_vel_min", "forward_vel_max",
              "trace_density", "trace_length", "trace_width", "trace_height",
              "box_inflation", "min_trace_for_fit", "tps_max_points", "tps_ridge",
              "knn_neighbors", "min_fake_range", "height_channels", "height_max_samples",
              "bev_gate", "bev_confirm_hits", "bev_delete_misses", "bev_q_pos", "bev_q_vel",
              "bev_r_pos", "bev_p0_pos", "bev_p0_vel", "detector"},
             "attacker.");
  pull(j, "stable_duration", c.stable_duration);
  pull(j, "attack_duration", c.attack_duration);
  pull(j, "rho_start", c.rho_start);
  pull(j, "rho_end", c.rho_end);
  pull(j, "theta_start", c.theta_start);
  pull(j, "theta_end", c.theta_end);
  pull(j, "buffer_capacity", c.buffer_capacity);
  pull(j, "trigger_frame", c.trigger_frame);
  pull(j, "smoothing_repeats", c.smoothing_repeats);
  pull(j, "min_track_age", c.min_track_age);
  pull(j, "bearing_gate", c.bearing_gate);
  pull(j, "range_gate_min", c.range_gate_min);
  pull(j, "range_gate_max", c.range_gate_max);
  pull(j, "lateral_vel_min", c.lateral_vel_min);
  pull(j, "lateral_vel_max", c.lateral_vel_max);
  pull(j, "forward_vel_min", c.forward_vel_min);
  pull(j, "forward_vel_max", c.forward_vel_max);
  pull(j, "trace_density", c.trace_density);
  pull(j, "trace_length", c.trace_length);
  pull(j, "trace_width", c.trace_width);
  pull(j, "trace_height", c.trace_height);
  pull(j, "box_inflation", c.box_inflation);
  pull(j, "min_trace_for_fit", c.min_trace_for_fit);
  pull(j, "tps_max_points", c.tps_max_points);
  pull(j, "tps_ridge", c.tps_ridge);
  pull(j, "knn_neighbors", c.knn_neighbors);
  pull(j, "min_fake_range", c.min_fake_range);
  pull(j, "height_channels", c.height_channels);
  pull(j, "height_max_samples", c.height_max_samples);
  pull(j, "bev_gate", c.bev_gate);
  pull(j, "bev_confirm_hits", c.bev_confirm_hits);
  pull(j, "bev_delete_misses", c.bev_delete_misses);
  pull(j, "bev_q_pos", c.bev_q_pos);
  pull(j, "bev_q_vel", c.bev_q_vel);
  pull(j, "bev_r_pos", c.bev_r_pos);
  pull(j, "bev_p0_pos", c.bev_p0_pos);
  pull(j, "bev_p0_vel", c.bev_p0_vel);
  if (j.contains("detector")) parse_detector(j.at("detector"), c.detector, "attacker.detector.");
}

void parse_rss(const json& j, RssParams& c) {
  check_keys(j, {"response_time", "a_max_accel", "b_min_brake", "b_max_brake", "lane_margin"},
             "rss.");
  pull(j, "response_time", c.response_time);
  pull(j, "a_max_accel", c.a_max_accel);
  pull(j, "b_min_brake", c.b_min_brake);
  pull(j, "b_max_brake", c.b_max_brake);
  pull(j, "lane_margin", c.lane_margin);
}

}  // namespace

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["integrity"] = integrity_json(cfg.integrity);
  j["detector"] = detector_json(cfg.detector);
  j["camera2d"] = camera2d_json(cfg.camera2d);
  j["camera3d"] = camera3d_json(cfg.camera3d);
  j["fusion"] = fusion_json(cfg.fusion);
  j["attacker"] = attacker_json(cfg.attacker);
  j["rss"] = rss_json(cfg.rss);
  j["metrics_gate"] = cfg.metrics_gate;
  j["truth_min_lidar_points"] = cfg.truth_min_lidar_points;
  j["drop_on_integrity_failure"] = cfg.drop_on_integrity_failure;
  return j.dump(2);
}

void apply_config_json(PipelineConfig& cfg, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j,
             {"integrity", "detector", "camera2d", "camera3d", "fusion", "attacker", "rss",
              "metrics_gate", "truth_min_lidar_points", "drop_on_integrity_failure"},
             "");
  try {
    if (j.contains("integrity")) parse_integrity(j.at("integrity"), cfg.integrity);
    if (j.contains("detector")) parse_detector(j.at("detector"), cfg.detector, "detector.");
    if (j.contains("camera2d")) parse_camera2d(j.at("camera2d"), cfg.camera2d);
    if (j.contains("camera3d")) parse_camera3d(j.at("camera3d"), cfg.camera3d);
    if (j.contains("fusion")) parse_fusion(j.at("fusion"), cfg.fusion);
    if (j.contains("attacker")) parse_attacker(j.at("attacker"), cfg.attacker);
    if (j.contains("rss")) parse_rss(j.at("rss"), cfg.rss);
    pull(j, "metrics_gate", cfg.metrics_gate);
    pull(j, "truth_min_lidar_points", cfg.truth_min_lidar_points);
    pull(j, "drop_on_integrity_failure", cfg.drop_on_integrity_failure);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
}

PipelineConfig config_from_json(const std::string& text) {
  PipelineConfig cfg;
  apply_config_json(cfg, text);
  return cfg;
}

}  // namespace avsec
