#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace avsec {

struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FrameMetrics {
  int frame = 0;
  int false_positives = 0;   // confirmed tracks with no truth within gate
  int false_negatives = 0;   // truths with no confirmed track within gate
  int false_tracks = 0;      // same as false_positives, track-level alias
  int missed_tracks = 0;     // same as false_negatives, track-level alias
  int unsafe_count = 0;      // perceived unsafe pairs this frame
  int true_unsafe_count = 0; // ground-truth unsafe pairs this frame
  bool false_alarm = false;  // perceived unsafe while truth safe
  bool integrity_pass = true;
};

struct MatchCounts {
  int matched = 0;
  int unmatched_predictions = 0;
  int unmatched_truths = 0;
};

// Greedy-free optimal matching on BEV centers: pairs within the gate via the
// assignment solver, leftovers counted per side.
MatchCounts match_and_count(const std::vector<std::array<double, 2>>& predictions,
                            const std::vector<std::array<double, 2>>& truths,
                            double gate);

struct IncrementReport {
  double fp_inc = 0.0;
  double fn_inc = 0.0;
  double ft_inc = 0.0;
  double mt_inc = 0.0;
  bool unsafe_scene = false;  // any frame where attacked unsafe_count differs from baseline
};

// Per-frame mean of (attacked - baseline). Throws AlignmentError when the
// frame sequences have different lengths.
IncrementReport increment_over_baseline(const std::vector<FrameMetrics>& attacked,
                                        const std::vector<FrameMetrics>& baseline);

struct ScenedIncrement {
  std::string scene;
  std::string av;
  std::string attack;
  IncrementReport report;
};

struct SummaryCell {
  std::string av;
  std::string attack;
  int scenes = 0;
  double fp_inc = 0.0;
  double fn_inc = 0.0;
  double ft_inc = 0.0;
  double mt_inc = 0.0;
  double unsafe_fraction = 0.0;
};

// Mean increments per (av, attack) cell plus the fraction of scenes whose
// safety verdicts changed. Sorted by av then attack.
std::vector<SummaryCell> aggregate_table(const std::vector<ScenedIncrement>& rows);

std::string increments_csv(const std::vector<ScenedIncrement>& rows);
std::string summary_csv(const std::vector<SummaryCell>& cells);

}  // namespace avsec
