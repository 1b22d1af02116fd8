#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <set>
#include <thread>

#include "crew/net/server.hpp"
#include "log.hpp"

using namespace crew;
namespace fs = std::filesystem;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

// A config file is either a bare task config or
//   {"match_id", "task": {...}, "seed", "train", "algo", "sim_feedback", "threaded_trainer"}.
net::MatchOptions match_from_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  nlohmann::json j;
  in >> j;
  net::MatchOptions o;
  o.match_id = file.stem().string();
  if (j.contains("task") && j["task"].is_object()) {
    o.task = env::task_config_from_json(j["task"]);
    o.match_id = j.value("match_id", o.match_id);
    o.seed = j.value("seed", o.task.seed);
    o.train = j.value("train", true);
    o.algo = learner::parse_algo(j.value("algo", "tamer"));
    o.sim_feedback = j.value("sim_feedback", false);
    o.threaded_trainer = j.value("threaded_trainer", true);
  } else {
    o.task = env::task_config_from_json(j);
    o.seed = o.task.seed;
    o.threaded_trainer = true;
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"crewd: multi-match session server"};
  std::string bind = "127.0.0.1:7777";
  std::vector<std::string> configs;
  bool headless = false;
  std::string web_dir = "web";
  std::string session_dir;
  double duration = 0.0;
  int threads = 2;
  app.add_option("--bind", bind, "host:port");
  app.add_option("--config", configs, "Match config files, one match each")->check(CLI::ExistingFile);
  app.add_flag("--headless", headless, "Do not serve the browser client");
  app.add_option("--web", web_dir, "Static asset directory for the browser client");
  app.add_option("--session", session_dir, "Record every match under <dir>/<match_id>");
  app.add_option("--duration", duration, "Exit after this many seconds (0: until signalled)");
  app.add_option("--threads", threads, "I/O threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto [host, port] = net::parse_bind(bind);
    recorder::SessionClock clock;
    net::Lobby lobby([&clock] { return clock.now(); });
    std::set<std::string> ids;
    for (const auto& file : configs) {
      net::MatchOptions o = match_from_file(file);
      for (int n = 2; ids.contains(o.match_id); ++n) o.match_id = fs::path(file).stem().string() + "-" + std::to_string(n);
      ids.insert(o.match_id);
      if (!session_dir.empty()) {
        o.recorder = std::make_shared<recorder::Recorder>(
            fs::path(session_dir) / o.match_id,
            nlohmann::json{{"kind", "live"}, {"match_id", o.match_id}, {"task", env::to_json(o.task)}}, recorder::Recorder::Options{});
      }
      spdlog::info("match {}: {} ({}{})", o.match_id, env::to_string(o.task.task),
                   o.train ? learner::to_string(o.algo) : "no learner", o.sim_feedback ? ", simulated feedback" : "");
      lobby.add_match(std::move(o));
    }
    net::Server::Options so;
    so.bind = host;
    so.port = port;
    so.threads = threads;
    if (!headless) so.static_dir = web_dir;
    net::Server server(lobby, so);
    lobby.start_all();
    server.run();
    spdlog::info("listening on {}:{} with {} match(es){}", host, server.port(), configs.size(), headless ? ", headless" : "");

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const double start = clock.now();
    while (!g_stop && (duration <= 0.0 || clock.now() - start < duration)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    spdlog::info("shutting down");
    server.stop();
    lobby.stop_all();
    for (const auto& s : lobby.matches()) spdlog::info("match {} ended at tick {}", s.match_id, s.tick);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
