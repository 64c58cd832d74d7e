#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "avsec/harness.hpp"
#include "avsec/net.hpp"

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

avsec::SensorModel default_sensor() {
  return avsec::SensorModel::uniform(32, -30.67, 10.67, 1800, 10.0, 130.0, 1.7);
}

avsec::AttackKind parse_attack(const std::string& name) {
  const auto kind = avsec::attack_from_name(name);
  if (!kind) throw CLI::ValidationError("--attack", "unknown attack: " + name);
  return *kind;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lidar stream attack simulation toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment plan");
  std::string plan_path, out_dir, config_path;
  std::vector<std::string> scene_names, attack_names;
  std::vector<int> av_ids;
  uint64_t seed = 0;
  int workers = 0;
  bool no_plots = false;
  run->add_option("--plan", plan_path, "plan JSON file (flags below override it)");
  run->add_option("--out", out_dir,
                  "output directory (relative paths resolve against $AVSEC_OUT_ROOT)");
  run->add_option("--scenes", scene_names, "builtin scene names or scene JSON paths")
      ->delimiter(',');
  run->add_option("--avs", av_ids, "victim architectures, subset of 1,2,3,4")->delimiter(',');
  run->add_option("--attacks", attack_names,
                  "attacks to run (x1,x3,x4,x6,x7); baseline always included")
      ->delimiter(',');
  run->add_option("--seed", seed, "seed offset added to every scene seed");
  run->add_option("--config", config_path, "config JSON overrides");
  run->add_option("--workers", workers, "worker threads (default: hardware)");
  run->add_flag("--no-plots", no_plots, "skip SVG plot emission");

  // plot
  auto* plot = app.add_subcommand("plot", "render plots from an existing summary.csv");
  std::string summary_path, plot_dir = ".";
  plot->add_option("--summary", summary_path, "summary.csv path")->required();
  plot->add_option("--dir", plot_dir, "directory for the SVG files");

  // scene-gen
  auto* gen = app.add_subcommand("scene-gen", "write the builtin scene suite as JSON");
  std::string gen_dir = "scenes";
  gen->add_option("--dir", gen_dir, "target directory");

  // shared net flags
  std::string host = "127.0.0.1", scene_path, net_config_path, net_out = "recv_out";
  int port = 8308, listen_port = 8308, forward_port = 8309;
  double pacing_us = 0.0, timeout_s = 10.0;
  bool realtime = false;
  std::string net_attack = "baseline";

  auto* send = app.add_subcommand("net-send", "stream a scene's datagrams over udp");
  send->add_option("--scene", scene_path, "scene JSON path")->required();
  send->add_option("--host", host, "destination host");
  send->add_option("--port", port, "destination port");
  send->add_flag("--realtime", realtime, "pace packets at the sensor's nominal rate");
  send->add_option("--pacing-us", pacing_us, "fixed inter-packet gap in microseconds");

  auto* proxy = app.add_subcommand("net-proxy", "man-in-the-middle attacker proxy");
  proxy->add_option("--listen", listen_port, "listen port");
  proxy->add_option("--forward-host", host, "forward host");
  proxy->add_option("--forward-port", forward_port, "forward port");
  proxy->add_option("--attack", net_attack, "attack name (baseline disables)");
  proxy->add_option("--scene", scene_path, "scene JSON supplying the sensor model");
  proxy->add_option("--config", net_config_path, "config JSON overrides");
  proxy->add_option("--timeout", timeout_s, "receive timeout in seconds");

  auto* recv = app.add_subcommand("net-recv", "assemble sweeps and check integrity");
  recv->add_option("--listen", listen_port, "listen port");
  recv->add_option("--out", net_out, "output directory for sweeps and integrity.csv");
  recv->add_option("--scene", scene_path, "scene JSON supplying the sensor model");
  recv->add_option("--config", net_config_path, "config JSON overrides");
  recv->add_option("--timeout", timeout_s, "receive timeout in seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      avsec::ExperimentPlan plan;
      if (!plan_path.empty()) plan = avsec::plan_from_json(read_file(plan_path));
      if (!out_dir.empty()) plan.out_dir = out_dir;
      if (!scene_names.empty()) plan.scenes = scene_names;
      if (!av_ids.empty()) {
        plan.avs.clear();
        for (int v : av_ids) {
          if (v < 1 || v > 4) throw std::runtime_error("av out of range");
          plan.avs.push_back(static_cast<avsec::AvKind>(v));
        }
      }
      if (!attack_names.empty()) {
        plan.attacks.clear();
        for (const std::string& name : attack_names) plan.attacks.push_back(parse_attack(name));
      }
      if (run->count("--seed")) plan.seed = seed;
      if (!config_path.empty()) avsec::apply_config_json(plan.config, read_file(config_path));

      const avsec::PlanRunResult result = avsec::run_plan(plan, workers);
      if (!no_plots) avsec::emit_plots(result.summary, result.out_dir);
      for (const std::string& err : result.errors) std::cerr << "error: " << err << "\n";
      std::cout << "runs written to " << result.out_dir << "\n";
      return result.ok ? 0 : 1;
    }
    if (plot->parsed()) {
      const auto summary = avsec::parse_summary_csv(read_file(summary_path));
      const auto files = avsec::emit_plots(summary, plot_dir);
      for (const std::string& f : files) std::cout << f << "\n";
      return 0;
    }
    if (gen->parsed()) {
      fs::create_directories(gen_dir);
      const auto suite = avsec::builtin_scene_suite();
      for (const avsec::Scene& scene : suite) {
        avsec::save_scene((fs::path(gen_dir) / (scene.name + ".json")).string(), scene);
      }
      std::cout << suite.size() << " scenes written to " << gen_dir << "\n";
      return 0;
    }
    if (send->parsed()) {
      avsec::SenderOptions opt;
      opt.host = host;
      opt.port = port;
      opt.realtime = realtime;
      opt.pacing_us = pacing_us;
      const int sent = avsec::run_sender(avsec::load_scene(scene_path), opt);
      std::cout << sent << " packets sent\n";
      return 0;
    }
    if (proxy->parsed()) {
      avsec::ProxyOptions opt;
      opt.listen_port = listen_port;
      opt.forward_host = host;
      opt.forward_port = forward_port;
      opt.attack = parse_attack(net_attack);
      opt.sensor = scene_path.empty() ? default_sensor()
                                      : avsec::load_scene(scene_path).sensor;
      if (!net_config_path.empty()) {
        avsec::apply_config_json(opt.config, read_file(net_config_path));
      }
      opt.recv_timeout_s = timeout_s;
      const avsec::ProxyStats stats = avsec::run_proxy(opt);
      std::cout << stats.received << " received, " << stats.forwarded << " forwarded, "
                << stats.malformed << " passed through unparsed\n";
      return 0;
    }
    if (recv->parsed()) {
      avsec::ReceiverOptions opt;
      opt.listen_port = listen_port;
      opt.sensor = scene_path.empty() ? default_sensor()
                                      : avsec::load_scene(scene_path).sensor;
      if (!net_config_path.empty()) {
        avsec::apply_config_json(opt.config, read_file(net_config_path));
      }
      opt.out_dir = net_out;
      opt.recv_timeout_s = timeout_s;
      const avsec::ReceiverStats stats = avsec::run_receiver(opt);
      std::cout << stats.sweeps << " sweeps assembled, " << stats.malformed
                << " malformed packets\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
