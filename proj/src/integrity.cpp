#include "avsec/integrity.hpp"

#include <cmath>

namespace avsec {

bool TimingEstimator::observe(double t) {
  if (!have_prev_) {
    prev_t_ = t;
    have_prev_ = true;
    return true;
  }
  const double measured = t - prev_t_;
  prev_t_ = t;
  if (!initialized_) {
    x_ = measured;
    p_ = sigma2_;
    initialized_ = true;
    return true;
  }
  const double y = measured - x_;
  const bool ok = (y * y) / sigma2_ <= gamma_;
  const double s = p_ + sigma2_;
  const double k = p_ / s;
  x_ += k * y;
  p_ = (1.0 - k) * p_ + q_;
  return ok;
}

bool check_point_count_max(const Sweep& sweep, const SensorModel& s) {
  const size_t alpha =
      static_cast<size_t>(s.points_per_sweep()) * (s.mode == ReturnMode::kDual ? 2 : 1);
  return sweep.points.size() <= alpha;
}

bool check_point_count_min(const Sweep& sweep, const SensorModel& s, double beta_fraction) {
  const double beta = beta_fraction * s.points_per_sweep();
  return static_cast<double>(sweep.points.size()) >= beta;
}

bool check_dual_consistency(const std::vector<Datagram>& datagrams) {
  for (const Datagram& d : datagrams) {
    if (d.mode != kModeDual) continue;
    for (size_t b = 0; b + 1 < kBlocksPerDatagram; b += 2) {
      const DatagramBlock& lo = d.blocks[b];
      const DatagramBlock& hi = d.blocks[b + 1];
      for (size_t j = 0; j < kCellsPerBlock; ++j) {
        if (lo.cells[j].range_raw == 0 || hi.cells[j].range_raw == 0) continue;
        if (hi.cells[j].range_raw < lo.cells[j].range_raw) return false;
      }
    }
  }
  return true;
}

IntegrityVerdict check_all(const Sweep& sweep, const SensorModel& s, TimingEstimator& timing,
                           double t, const IntegrityConfig& cfg,
                           const std::vector<Datagram>* datagrams) {
  IntegrityVerdict v;
  v.count_max = check_point_count_max(sweep, s);
  v.count_min = check_point_count_min(sweep, s, cfg.beta_fraction);
  v.timing = timing.observe(t);
  v.dual = datagrams ? check_dual_consistency(*datagrams) : true;
  return v;
}

}  // namespace avsec
