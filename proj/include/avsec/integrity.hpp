#pragma once

#include <vector>

#include "avsec/datagram.hpp"
#include "avsec/geometry.hpp"

namespace avsec {

/// First-order stream integrity thresholds.
struct IntegrityConfig {
  double beta_fraction = 0.5;        // min point count as fraction of n*m
  double gamma = 9.0;                // bound on squared normalized residual
  double sigma_gamma = 1e-3;         // timing noise std, seconds
  double process_noise_scale = 0.01; // q = (scale * nominal_interval)^2
};

struct IntegrityVerdict {
  bool count_max = true;  // point count <= alpha
  bool count_min = true;  // point count >= beta
  bool timing = true;     // normalized timing residual within gamma
  bool dual = true;       // second return >= first (dual mode only)
  bool all() const { return count_max && count_min && timing && dual; }
};

/// Scalar Kalman filter on the inter-arrival interval of a timestamp stream.
/// The first timestamp only anchors the stream and the second initializes the
/// state, so checks before initialization pass vacuously.
class TimingEstimator {
 public:
  TimingEstimator(double nominal_interval, const IntegrityConfig& cfg)
      : gamma_(cfg.gamma),
        sigma2_(cfg.sigma_gamma * cfg.sigma_gamma),
        q_(cfg.process_noise_scale * nominal_interval * cfg.process_noise_scale *
           nominal_interval) {}

  /// Feed the next absolute timestamp; returns the timing verdict for it.
  bool observe(double t);

  bool ready() const { return initialized_; }
  double interval() const { return x_; }
  double variance() const { return p_; }

 private:
  double gamma_, sigma2_, q_;
  bool have_prev_ = false, initialized_ = false;
  double prev_t_ = 0.0, x_ = 0.0, p_ = 0.0;
};

/// Point count cannot exceed one return per grid cell (two in dual mode).
bool check_point_count_max(const Sweep& sweep, const SensorModel& s);

/// Point count must clear beta = beta_fraction * n * m.
bool check_point_count_min(const Sweep& sweep, const SensorModel& s, double beta_fraction);

/// Dual-return ordering: within each block pair the second return's range is
/// >= the first's wherever both are present. Non-dual datagrams pass.
bool check_dual_consistency(const std::vector<Datagram>& datagrams);

/// All four indicators for one sweep arrival at time t.
IntegrityVerdict check_all(const Sweep& sweep, const SensorModel& s, TimingEstimator& timing,
                           double t, const IntegrityConfig& cfg,
                           const std::vector<Datagram>* datagrams = nullptr);

}  // namespace avsec
