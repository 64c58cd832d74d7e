#include "avsec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "avsec/safety.hpp"

namespace avsec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<AttackKind> kAllAttacks = {AttackKind::kNone, AttackKind::kX1,
                                             AttackKind::kX3,  AttackKind::kX4,
                                             AttackKind::kX6,  AttackKind::kX7};

std::vector<AttackKind> canonical_attacks(std::vector<AttackKind> attacks) {
  std::vector<AttackKind> out;
  for (AttackKind kind : kAllAttacks) {
    const bool wanted = kind == AttackKind::kNone ||
                        std::find(attacks.begin(), attacks.end(), kind) != attacks.end();
    if (wanted) out.push_back(kind);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

std::string resolve_out_dir(const std::string& out_dir) {
  const char* root = std::getenv("AVSEC_OUT_ROOT");
  if (root && *root && !fs::path(out_dir).is_absolute()) {
    return (fs::path(root) / out_dir).string();
  }
  return out_dir;
}

ExperimentPlan plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("plan parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("plan root must be an object");
  ExperimentPlan plan;
  if (j.contains("scenes")) {
    for (const auto& s : j.at("scenes")) plan.scenes.push_back(s.get<std::string>());
  }
  if (j.contains("avs")) {
    for (const auto& a : j.at("avs")) {
      const int v = a.get<int>();
      if (v < 1 || v > 4) throw ConfigError("av out of range: " + std::to_string(v));
      plan.avs.push_back(static_cast<AvKind>(v));
    }
  }
  if (j.contains("attacks")) {
    for (const auto& a : j.at("attacks")) {
      const std::string name = a.get<std::string>();
      const auto kind = attack_from_name(name);
      if (!kind) throw ConfigError("unknown attack: " + name);
      plan.attacks.push_back(*kind);
    }
  }
  if (j.contains("seed")) plan.seed = j.at("seed").get<uint64_t>();
  if (j.contains("out_dir")) plan.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("config")) apply_config_json(plan.config, j.at("config").dump());
  return plan;
}

std::string plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["scenes"] = plan.scenes;
  json avs = json::array();
  for (AvKind a : plan.avs) avs.push_back(static_cast<int>(a));
  j["avs"] = avs;
  json attacks = json::array();
  for (AttackKind k : plan.attacks) attacks.push_back(attack_name(k));
  j["attacks"] = attacks;
  j["seed"] = plan.seed;
  j["out_dir"] = plan.out_dir;
  j["config"] = json::parse(config_to_json(plan.config));
  return j.dump(2);
}

PlanRunResult run_plan(const ExperimentPlan& plan, int workers) {
  PlanRunResult result;
  result.out_dir = resolve_out_dir(plan.out_dir);

  // resolve everything up front so bad input fails before any run starts
  std::vector<Scene> scenes;
  {
    const std::vector<Scene> suite = builtin_scene_suite();
    std::vector<std::string> names = plan.scenes;
    if (names.empty()) {
      for (const Scene& s : suite) names.push_back(s.name);
    }
    for (const std::string& name : names) {
      const auto it = std::find_if(suite.begin(), suite.end(),
                                   [&](const Scene& s) { return s.name == name; });
      if (it != suite.end()) {
        scenes.push_back(*it);
      } else if (fs::exists(name)) {
        scenes.push_back(load_scene(name));
      } else {
        throw std::runtime_error("scene not found: " + name);
      }
    }
  }
  for (Scene& s : scenes) s.seed += plan.seed;

  std::vector<AvKind> avs = plan.avs;
  if (avs.empty()) avs = {AvKind::kAv1, AvKind::kAv2, AvKind::kAv3, AvKind::kAv4};
  std::sort(avs.begin(), avs.end());
  avs.erase(std::unique(avs.begin(), avs.end()), avs.end());
  const std::vector<AttackKind> attacks = canonical_attacks(plan.attacks);

  fs::create_directories(result.out_dir);
  write_file(fs::path(result.out_dir) / "config.json", config_to_json(plan.config));

  std::mutex mu;
  std::vector<ScenedIncrement> increments;
  std::vector<std::string> errors;
  json manifest_runs = json::array();

  auto process_scene = [&](const Scene& scene) {
    try {
      const SceneData data = prepare_scene(scene, plan.config);
      std::vector<std::vector<FrameMetrics>> baseline_frames(5);
      std::vector<ScenedIncrement> local_rows;
      json local_runs = json::array();

      for (AttackKind attack : attacks) {
        const AttackData attacked = run_attack(data, attack, plan.config);
        for (AvKind av : avs) {
          const VictimRun run = run_victim(data, attacked, av, plan.config);
          const fs::path dir = fs::path(result.out_dir) / scene.name / av_name(av) /
                               attack_name(attack);
          fs::create_directories(dir);
          write_file(dir / "metrics.csv", frame_metrics_csv(run.frames));
          write_file(dir / "tracks.csv", tracks_csv(run.tracks));
          write_file(dir / "safety.csv", safety_csv(run.perceived, data.truth_safety));
          write_file(dir / "attacker_log.csv", attacker_log_csv(attacked.attacker_log));

          if (attack == AttackKind::kNone) {
            baseline_frames[static_cast<int>(av)] = run.frames;
          }
          ScenedIncrement row;
          row.scene = scene.name;
          row.av = av_name(av);
          row.attack = attack_name(attack);
          row.report = increment_over_baseline(run.frames,
                                               baseline_frames[static_cast<int>(av)]);
          local_rows.push_back(std::move(row));

          json jr;
          jr["scene"] = scene.name;
          jr["av"] = av_name(av);
          jr["attack"] = attack_name(attack);
          jr["dir"] = (fs::path(scene.name) / av_name(av) / attack_name(attack)).string();
          jr["frames"] = static_cast<int>(run.frames.size());
          local_runs.push_back(std::move(jr));
        }
      }
      std::lock_guard<std::mutex> lock(mu);
      for (auto& row : local_rows) increments.push_back(std::move(row));
      for (auto& jr : local_runs) manifest_runs.push_back(std::move(jr));
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(mu);
      errors.push_back(scene.name + ": " + e.what());
    }
  };

  int pool = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  pool = std::max(1, std::min<int>(pool, static_cast<int>(scenes.size())));
  if (pool <= 1) {
    for (const Scene& s : scenes) process_scene(s);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < pool; ++w) {
      threads.emplace_back([&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= scenes.size()) return;
          process_scene(scenes[i]);
        }
      });
    }
    for (std::thread& t : threads) t.join();
  }

  // canonical ordering regardless of worker scheduling
  auto attack_rank = [](const std::string& name) {
    for (size_t i = 0; i < kAllAttacks.size(); ++i) {
      if (name == attack_name(kAllAttacks[i])) return i;
    }
    return kAllAttacks.size();
  };
  std::sort(increments.begin(), increments.end(),
            [&](const ScenedIncrement& a, const ScenedIncrement& b) {
              if (a.scene != b.scene) return a.scene < b.scene;
              if (a.av != b.av) return a.av < b.av;
              return attack_rank(a.attack) < attack_rank(b.attack);
            });
  std::sort(manifest_runs.begin(), manifest_runs.end(),
            [](const json& a, const json& b) {
              return std::tie(a.at("scene").get_ref<const std::string&>(),
                              a.at("av").get_ref<const std::string&>(),
                              a.at("attack").get_ref<const std::string&>()) <
                     std::tie(b.at("scene").get_ref<const std::string&>(),
                              b.at("av").get_ref<const std::string&>(),
                              b.at("attack").get_ref<const std::string&>());
            });

  result.increments = increments;
  result.summary = aggregate_table(increments);
  result.errors = errors;
  result.ok = errors.empty();

  write_file(fs::path(result.out_dir) / "increments.csv", increments_csv(result.increments));
  write_file(fs::path(result.out_dir) / "summary.csv", summary_csv(result.summary));

  json manifest;
  manifest["seed"] = plan.seed;
  json scene_names = json::array();
  for (const Scene& s : scenes) scene_names.push_back(s.name);
  manifest["scenes"] = scene_names;
  json av_names = json::array();
  for (AvKind a : avs) av_names.push_back(av_name(a));
  manifest["avs"] = av_names;
  json attack_names = json::array();
  for (AttackKind k : attacks) attack_names.push_back(attack_name(k));
  manifest["attacks"] = attack_names;
  manifest["runs"] = manifest_runs;
  manifest["complete"] = result.ok;
  manifest["errors"] = errors;
  write_file(fs::path(result.out_dir) / "manifest.json", manifest.dump(2) + "\n");

  return result;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct PlotSpec {
  const char* file;
  const char* title;
  double SummaryCell::* field;
};

}  // namespace

std::vector<std::string> emit_plots(const std::vector<SummaryCell>& summary,
                                    const std::string& dir) {
  std::vector<const SummaryCell*> cells;
  std::vector<std::string> attacks;
  std::vector<std::string> avs;
  for (const SummaryCell& c : summary) {
    if (c.attack == attack_name(AttackKind::kNone)) continue;
    cells.push_back(&c);
    if (std::find(attacks.begin(), attacks.end(), c.attack) == attacks.end()) {
      attacks.push_back(c.attack);
    }
    if (std::find(avs.begin(), avs.end(), c.av) == avs.end()) avs.push_back(c.av);
  }
  if (cells.empty()) return {};
  std::sort(attacks.begin(), attacks.end());
  std::sort(avs.begin(), avs.end());

  static const char* kPalette[] = {"#4878cf", "#e24a33", "#6aa84f", "#8e6bb5",
                                   "#d8a13a", "#55a0a6"};
  const PlotSpec specs[] = {
      {"ft_inc.svg", "false track increment", &SummaryCell::ft_inc},
      {"mt_inc.svg", "missed track increment", &SummaryCell::mt_inc},
      {"unsafe_fraction.svg", "unsafe scene fraction", &SummaryCell::unsafe_fraction},
  };

  fs::create_directories(dir);
  std::vector<std::string> written;
  for (const PlotSpec& spec : specs) {
    double lo = 0.0, hi = 0.0;
    for (const SummaryCell* c : cells) {
      lo = std::min(lo, c->*spec.field);
      hi = std::max(hi, c->*spec.field);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;

    const double plot_w = 120.0 * attacks.size();
    const double plot_h = 260.0;
    const double ml = 70.0, mt = 50.0, mb = 60.0, mr = 20.0;
    const double width = ml + plot_w + mr;
    const double height = mt + plot_h + mb + 24.0 * ((avs.size() + 3) / 4);
    auto ypos = [&](double v) { return mt + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<style>text{font-family:sans-serif;font-size:12px;fill:#333}"
           ".title{font-size:15px;font-weight:bold}</style>\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<text class=\"title\" x=\"" << ml << "\" y=\"28\">" << spec.title << "</text>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << ypos(0.0) << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << ypos(0.0) << "\" stroke=\"#888\"/>\n";
    for (const double tick : {lo, 0.0, hi}) {
      svg << "<text x=\"" << ml - 8 << "\" y=\"" << ypos(tick) + 4
          << "\" text-anchor=\"end\">" << fmt(tick).substr(0, 6) << "</text>\n";
    }

    const double group_w = plot_w / attacks.size();
    const double bar_w = 0.8 * group_w / std::max<size_t>(avs.size(), 1);
    for (size_t gi = 0; gi < attacks.size(); ++gi) {
      const double gx = ml + gi * group_w + 0.1 * group_w;
      svg << "<text x=\"" << ml + gi * group_w + group_w / 2 << "\" y=\""
          << mt + plot_h + 20 << "\" text-anchor=\"middle\">" << attacks[gi]
          << "</text>\n";
      for (size_t ai = 0; ai < avs.size(); ++ai) {
        double value = 0.0;
        for (const SummaryCell* c : cells) {
          if (c->attack == attacks[gi] && c->av == avs[ai]) value = c->*spec.field;
        }
        const double y0 = ypos(std::max(value, 0.0));
        const double y1 = ypos(std::min(value, 0.0));
        svg << "<rect data-attack=\"" << attacks[gi] << "\" data-av=\"" << avs[ai]
            << "\" data-value=\"" << fmt(value) << "\" x=\"" << gx + ai * bar_w
            << "\" y=\"" << y0 << "\" width=\"" << bar_w * 0.9 << "\" height=\""
            << std::max(y1 - y0, 0.5) << "\" fill=\"" << kPalette[ai % 6] << "\"/>\n";
      }
    }
    for (size_t ai = 0; ai < avs.size(); ++ai) {
      const double lx = ml + (ai % 4) * 120.0;
      const double ly = mt + plot_h + 40 + 24.0 * (ai / 4);
      svg << "<rect x=\"" << lx << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\""
          << " fill=\"" << kPalette[ai % 6] << "\"/>\n";
      svg << "<text x=\"" << lx + 18 << "\" y=\"" << ly << "\">" << avs[ai] << "</text>\n";
    }
    svg << "</svg>\n";

    const fs::path path = fs::path(dir) / spec.file;
    write_file(path, svg.str());
    written.push_back(path.string());
  }
  return written;
}

std::vector<SummaryCell> parse_summary_csv(const std::string& text) {
  std::vector<SummaryCell> out;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    SummaryCell cell;
    std::getline(ls, cell.av, ',');
    std::getline(ls, cell.attack, ',');
    std::getline(ls, field, ',');
    cell.scenes = std::stoi(field);
    std::getline(ls, field, ',');
    cell.fp_inc = std::stod(field);
    std::getline(ls, field, ',');
    cell.fn_inc = std::stod(field);
    std::getline(ls, field, ',');
    cell.ft_inc = std::stod(field);
    std::getline(ls, field, ',');
    cell.mt_inc = std::stod(field);
    std::getline(ls, field, ',');
    cell.unsafe_fraction = std::stod(field);
    out.push_back(std::move(cell));
  }
  return out;
}

}  // namespace avsec
