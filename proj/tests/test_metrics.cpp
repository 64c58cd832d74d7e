#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "avsec/metrics.hpp"
#include "avsec/rng.hpp"

using namespace avsec;

namespace {

using Bev = std::vector<std::array<double, 2>>;

// exhaustive matching oracle: maximize pairs, then minimize summed distance
struct BruteResult {
  int matched = 0;
  double cost = 0.0;
};

void brute_rec(const Bev& preds, const Bev& truths, double gate, size_t i,
               std::vector<char>& used, int matched, double cost, BruteResult& best) {
  if (i == preds.size()) {
    if (matched > best.matched ||
        (matched == best.matched && cost < best.cost - 1e-12)) {
      best = {matched, cost};
    }
    return;
  }
  brute_rec(preds, truths, gate, i + 1, used, matched, cost, best);
  for (size_t j = 0; j < truths.size(); ++j) {
    if (used[j]) continue;
    const double d = std::hypot(preds[i][0] - truths[j][0], preds[i][1] - truths[j][1]);
    if (d > gate) continue;
    used[j] = 1;
    brute_rec(preds, truths, gate, i + 1, used, matched + 1, cost + d, best);
    used[j] = 0;
  }
}

BruteResult brute_match(const Bev& preds, const Bev& truths, double gate) {
  BruteResult best;
  best.matched = -1;
  std::vector<char> used(truths.size(), 0);
  brute_rec(preds, truths, gate, 0, used, 0, 0.0, best);
  return best;
}

FrameMetrics frame_of(int fp, int fn, int unsafe) {
  FrameMetrics m;
  m.false_positives = fp;
  m.false_negatives = fn;
  m.false_tracks = fp;
  m.missed_tracks = fn;
  m.unsafe_count = unsafe;
  return m;
}

}  // namespace

TEST_CASE("two predictions near one truth leave one unmatched") {
  const Bev preds = {{0.5, 0.0}, {1.0, 0.0}};
  const Bev truths = {{0.0, 0.0}};
  const MatchCounts c = match_and_count(preds, truths, 2.0);
  CHECK(c.matched == 1);
  CHECK(c.unmatched_predictions == 1);
  CHECK(c.unmatched_truths == 0);

  // swapped roles mirror the counts
  const MatchCounts s = match_and_count(truths, preds, 2.0);
  CHECK(s.matched == 1);
  CHECK(s.unmatched_predictions == 0);
  CHECK(s.unmatched_truths == 1);
}

TEST_CASE("empty sides and out-of-gate points count as leftovers") {
  CHECK(match_and_count({}, {}, 2.0).matched == 0);
  const MatchCounts p = match_and_count({{1.0, 1.0}}, {}, 2.0);
  CHECK(p.unmatched_predictions == 1);
  const MatchCounts t = match_and_count({}, {{1.0, 1.0}, {3.0, 0.0}}, 2.0);
  CHECK(t.unmatched_truths == 2);

  const MatchCounts far = match_and_count({{0.0, 0.0}}, {{5.0, 0.0}}, 2.0);
  CHECK(far.matched == 0);
  CHECK(far.unmatched_predictions == 1);
  CHECK(far.unmatched_truths == 1);
}

TEST_CASE("matching agrees with the exhaustive oracle") {
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const int np = static_cast<int>(rng.next_u64() % 6);
    const int nt = static_cast<int>(rng.next_u64() % 6);
    Bev preds(np), truths(nt);
    for (auto& p : preds) p = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    for (auto& t : truths) t = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    const double gate = rng.uniform(0.5, 6.0);

    const MatchCounts got = match_and_count(preds, truths, gate);
    const BruteResult want = brute_match(preds, truths, gate);
    REQUIRE(got.matched == want.matched);
    CHECK(got.unmatched_predictions == np - want.matched);
    CHECK(got.unmatched_truths == nt - want.matched);
  }
}

TEST_CASE("identical runs produce zero increments") {
  std::vector<FrameMetrics> run = {frame_of(0, 1, 0), frame_of(2, 0, 1)};
  const IncrementReport r = increment_over_baseline(run, run);
  CHECK(r.fp_inc == 0.0);
  CHECK(r.fn_inc == 0.0);
  CHECK(r.ft_inc == 0.0);
  CHECK(r.mt_inc == 0.0);
  CHECK(!r.unsafe_scene);
}

TEST_CASE("increments are per-frame means over the baseline") {
  const std::vector<FrameMetrics> baseline = {frame_of(0, 0, 0), frame_of(0, 0, 0),
                                              frame_of(0, 0, 0), frame_of(0, 0, 0)};
  std::vector<FrameMetrics> attacked = baseline;
  for (auto& m : attacked) {
    m.false_tracks = m.false_positives = 1;  // +1 every frame
  }
  attacked[2].false_negatives = attacked[2].missed_tracks = 2;  // +2 on one of four
  const IncrementReport r = increment_over_baseline(attacked, baseline);
  CHECK(r.fp_inc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.ft_inc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.fn_inc == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.mt_inc == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(!r.unsafe_scene);

  attacked[3].unsafe_count = 1;  // one diverging verdict flips the scene flag
  CHECK(increment_over_baseline(attacked, baseline).unsafe_scene);

  // decreases count negative: an attack can also suppress alarms
  std::vector<FrameMetrics> muted = baseline;
  std::vector<FrameMetrics> noisy = baseline;
  for (auto& m : noisy) m.false_positives = 3;
  CHECK(increment_over_baseline(muted, noisy).fp_inc == doctest::Approx(-3.0));
}

TEST_CASE("misaligned frame sequences are rejected loudly") {
  const std::vector<FrameMetrics> four(4);
  const std::vector<FrameMetrics> five(5);
  CHECK_THROWS_AS(increment_over_baseline(four, five), AlignmentError);
  try {
    increment_over_baseline(four, five);
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('4') != std::string::npos);
    CHECK(msg.find('5') != std::string::npos);
  }
}

TEST_CASE("aggregation averages per cell and sorts") {
  ScenedIncrement a;
  a.scene = "s1";
  a.av = "av1";
  a.attack = "x1";
  a.report.fp_inc = 2.0;
  a.report.unsafe_scene = false;

  ScenedIncrement b = a;
  b.scene = "s2";
  b.report.fp_inc = 1.0;
  b.report.unsafe_scene = true;

  ScenedIncrement c = a;
  c.scene = "s1";
  c.av = "av1";
  c.attack = "baseline";
  c.report.fp_inc = 0.25;

  const auto cells = aggregate_table({a, b, c});
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].attack == "baseline");  // sorted by (av, attack)
  CHECK(cells[0].scenes == 1);
  CHECK(cells[0].fp_inc == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cells[1].attack == "x1");
  CHECK(cells[1].scenes == 2);
  CHECK(cells[1].fp_inc == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(cells[1].unsafe_fraction == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("csv outputs carry the pinned headers") {
  ScenedIncrement row;
  row.scene = "s";
  row.av = "av2";
  row.attack = "x3";
  row.report.unsafe_scene = true;
  const std::string inc = increments_csv({row});
  std::istringstream is(inc);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "scene,av,attack,fp_inc,fn_inc,ft_inc,mt_inc,unsafe_changed");
  REQUIRE(std::getline(is, line));
  CHECK(line == "s,av2,x3,0,0,0,0,1");

  const std::string sum = summary_csv(aggregate_table({row}));
  std::istringstream ss(sum);
  REQUIRE(std::getline(ss, line));
  CHECK(line == "av,attack,scenes,fp_inc,fn_inc,ft_inc,mt_inc,unsafe_fraction");
  REQUIRE(std::getline(ss, line));
  CHECK(line == "av2,x3,1,0,0,0,0,1");
}
