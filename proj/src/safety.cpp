#include "avsec/safety.hpp"

#include <algorithm>
#include <cmath>

namespace avsec {

RssDecision rss_longitudinal_safe(double rear_v, double front_v, double gap,
                                  const RssParams& params) {
  const double rho = params.response_time;
  const double rv = std::max(0.0, rear_v);
  const double fv = std::max(0.0, front_v);
  const double v_after = rv + rho * params.a_max_accel;
  double d = rv * rho + 0.5 * params.a_max_accel * rho * rho +
             v_after * v_after / (2.0 * params.b_min_brake) -
             fv * fv / (2.0 * params.b_max_brake);
  d = std::max(0.0, d);
  return RssDecision{gap > d, d};
}

SafetyVerdict evaluate_frame(int frame, const std::vector<SafetyObject>& objects,
                             double ego_speed, const RssParams& params) {
  SafetyVerdict verdict;
  verdict.frame = frame;
  verdict.pairs.reserve(objects.size());
  for (const SafetyObject& obj : objects) {
    SafetyPair pair;
    pair.object_id = obj.id;
    const double dx = obj.position.x;
    const double dy = obj.position.y;
    if (dx <= 0.0 || std::abs(dy) > params.lane_margin) {
      pair.longitudinal_safe = true;
      pair.d_actual = dx;
      verdict.pairs.push_back(pair);
      continue;
    }
    const double obj_forward = ego_speed + obj.velocity.x;
    RssDecision decision;
    if (obj_forward < 0.0) {
      decision = rss_longitudinal_safe(ego_speed - obj_forward, 0.0, dx, params);
    } else {
      decision = rss_longitudinal_safe(ego_speed, obj_forward, dx, params);
    }
    pair.longitudinal_safe = decision.safe;
    pair.d_actual = dx;
    pair.d_min = decision.d_min;
    if (!decision.safe) ++verdict.unsafe_count;
    verdict.pairs.push_back(pair);
  }
  return verdict;
}

SafetyComparison perceived_vs_true(const SafetyVerdict& perceived, const SafetyVerdict& truth) {
  const bool p_unsafe = perceived.unsafe_count > 0;
  const bool t_unsafe = truth.unsafe_count > 0;
  if (p_unsafe && !t_unsafe) return SafetyComparison::kFalseAlarm;
  if (!p_unsafe && t_unsafe) return SafetyComparison::kMissedDanger;
  return SafetyComparison::kConsistent;
}

}  // namespace avsec
