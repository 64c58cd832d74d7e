#include "avsec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "avsec/assignment.hpp"

namespace avsec {

MatchCounts match_and_count(const std::vector<std::array<double, 2>>& predictions,
                            const std::vector<std::array<double, 2>>& truths,
                            double gate) {
  MatchCounts counts;
  const int np = static_cast<int>(predictions.size());
  const int nt = static_cast<int>(truths.size());
  if (np == 0 || nt == 0) {
    counts.unmatched_predictions = np;
    counts.unmatched_truths = nt;
    return counts;
  }
  std::vector<std::vector<double>> cost(np, std::vector<double>(nt));
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nt; ++j) {
      const double dx = predictions[i][0] - truths[j][0];
      const double dy = predictions[i][1] - truths[j][1];
      cost[i][j] = std::hypot(dx, dy);
    }
  }
  const Assignment assignment = solve_assignment(cost, gate);
  counts.matched = static_cast<int>(assignment.pairs.size());
  counts.unmatched_predictions = static_cast<int>(assignment.unmatched_rows.size());
  counts.unmatched_truths = static_cast<int>(assignment.unmatched_cols.size());
  return counts;
}

IncrementReport increment_over_baseline(const std::vector<FrameMetrics>& attacked,
                                        const std::vector<FrameMetrics>& baseline) {
  if (attacked.size() != baseline.size()) {
    throw AlignmentError("frame sequences differ in length: " +
                         std::to_string(attacked.size()) + " vs " +
                         std::to_string(baseline.size()));
  }
  IncrementReport report;
  if (attacked.empty()) return report;
  for (size_t i = 0; i < attacked.size(); ++i) {
    report.fp_inc += attacked[i].false_positives - baseline[i].false_positives;
    report.fn_inc += attacked[i].false_negatives - baseline[i].false_negatives;
    report.ft_inc += attacked[i].false_tracks - baseline[i].false_tracks;
    report.mt_inc += attacked[i].missed_tracks - baseline[i].missed_tracks;
    if (attacked[i].unsafe_count != baseline[i].unsafe_count) report.unsafe_scene = true;
  }
  const double n = static_cast<double>(attacked.size());
  report.fp_inc /= n;
  report.fn_inc /= n;
  report.ft_inc /= n;
  report.mt_inc /= n;
  return report;
}

std::vector<SummaryCell> aggregate_table(const std::vector<ScenedIncrement>& rows) {
  std::map<std::pair<std::string, std::string>, SummaryCell> cells;
  for (const ScenedIncrement& row : rows) {
    SummaryCell& cell = cells[{row.av, row.attack}];
    cell.av = row.av;
    cell.attack = row.attack;
    ++cell.scenes;
    cell.fp_inc += row.report.fp_inc;
    cell.fn_inc += row.report.fn_inc;
    cell.ft_inc += row.report.ft_inc;
    cell.mt_inc += row.report.mt_inc;
    if (row.report.unsafe_scene) cell.unsafe_fraction += 1.0;
  }
  std::vector<SummaryCell> out;
  out.reserve(cells.size());
  for (auto& [key, cell] : cells) {
    const double n = static_cast<double>(cell.scenes);
    cell.fp_inc /= n;
    cell.fn_inc /= n;
    cell.ft_inc /= n;
    cell.mt_inc /= n;
    cell.unsafe_fraction /= n;
    out.push_back(cell);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string increments_csv(const std::vector<ScenedIncrement>& rows) {
  std::ostringstream os;
  os << "scene,av,attack,fp_inc,fn_inc,ft_inc,mt_inc,unsafe_changed\n";
  for (const ScenedIncrement& row : rows) {
    os << row.scene << ',' << row.av << ',' << row.attack << ','
       << fmt(row.report.fp_inc) << ',' << fmt(row.report.fn_inc) << ','
       << fmt(row.report.ft_inc) << ',' << fmt(row.report.mt_inc) << ','
       << (row.report.unsafe_scene ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<SummaryCell>& cells) {
  std::ostringstream os;
  os << "av,attack,scenes,fp_inc,fn_inc,ft_inc,mt_inc,unsafe_fraction\n";
  for (const SummaryCell& cell : cells) {
    os << cell.av << ',' << cell.attack << ',' << cell.scenes << ','
       << fmt(cell.fp_inc) << ',' << fmt(cell.fn_inc) << ','
       << fmt(cell.ft_inc) << ',' << fmt(cell.mt_inc) << ','
       << fmt(cell.unsafe_fraction) << '\n';
  }
  return os.str();
}

}  // namespace avsec
