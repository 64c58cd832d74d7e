#pragma once

#include <vector>

#include "avsec/geometry.hpp"

namespace avsec {

struct RssParams {
  double response_time = 1.0;   // seconds
  double a_max_accel = 3.5;     // m/s^2
  double b_min_brake = 4.0;     // m/s^2
  double b_max_brake = 8.0;     // m/s^2
  double lane_margin = 2.5;     // meters; larger lateral offsets are vacuously safe
};

struct RssDecision {
  bool safe = true;
  double d_min = 0.0;
};

// Worst-case same-direction longitudinal rule. Velocities are along the lane,
// nonnegative; gap is bumper distance in meters. safe iff gap > d_min.
RssDecision rss_longitudinal_safe(double rear_v, double front_v, double gap,
                                  const RssParams& params);

// Ego-frame object snapshot: position relative to ego, velocity relative to
// ego (so world forward speed = ego_speed + velocity.x).
struct SafetyObject {
  int id = 0;
  Vec3 position;
  Vec3 velocity;
};

struct SafetyPair {
  int object_id = 0;
  bool longitudinal_safe = true;
  double d_actual = 0.0;
  double d_min = 0.0;
};

struct SafetyVerdict {
  int frame = 0;
  std::vector<SafetyPair> pairs;
  int unsafe_count = 0;
};

// Pairwise ego-vs-object longitudinal safety. Objects behind the ego or more
// than lane_margin off-axis are vacuously safe; approaching objects use the
// closing-speed variant (rear_v = closing speed, front_v = 0). Gaps are
// center-to-center along ego x.
SafetyVerdict evaluate_frame(int frame, const std::vector<SafetyObject>& objects,
                             double ego_speed, const RssParams& params);

enum class SafetyComparison { kConsistent, kFalseAlarm, kMissedDanger };

SafetyComparison perceived_vs_true(const SafetyVerdict& perceived, const SafetyVerdict& truth);

}  // namespace avsec
