// One line per acceptance criterion. Usage: crew_acceptance [--only <key>] [--list]
#include <CLI11.hpp>

#include <unistd.h>

#include <boost/asio.hpp>
#include <numeric>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "clock_sim.hpp"
#include "credit_oracle.hpp"
#include "crew/analysis/correlation.hpp"
#include "crew/learner/train.hpp"
#include "crew/net/server.hpp"
#include "crew/procgen/maze.hpp"
#include "gradient_suite.hpp"
#include "learner_fixtures.hpp"
#include "maze_oracle.hpp"
#include "net_fixtures.hpp"
#include "stats_oracle.hpp"

using namespace crew;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kCreditLimitS = 10.0;
constexpr int kCreditStreams = 1000;
constexpr int kCreditMaxLen = 200;
constexpr double kGradTol = 1e-4;
constexpr double kGradLimitS = 60.0;
constexpr int kTraceSteps = 40;
constexpr int kTraceB = 8;
constexpr int kMazeSeeds = 1000;
constexpr int kMazeMaxSide = 32;
constexpr double kMazeLimitS = 30.0;
constexpr long kLearnSteps = 6000;
constexpr int kLearnSeeds = 3;
constexpr double kLearnLimitS = 2.0 * 3600.0;
constexpr int kProtocolRoundTrips = 10000;
constexpr int kProtocolFuzz = 10000;
constexpr int kServerFuzzConnections = 200;
constexpr double kProtocolLimitS = 60.0;
constexpr double kClockOffset = 0.100;
constexpr double kClockJitter = 0.020;
constexpr double kClockTol = 0.005;
constexpr double kClockRate = 0.95;
constexpr int kClockTrials = 1000;
constexpr double kClockLimitS = 10.0;
constexpr long kUpdatesLow = 600;
constexpr long kUpdatesHigh = 1400;
constexpr double kStatsTol = 1e-6;
constexpr int kFprSims = 1000;
constexpr double kFprTarget = 0.05;
constexpr double kFprTol = 0.02;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string key;
  std::string title;
  std::function<Outcome()> run;
};

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("crew_accept_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Outcome credit_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  long events = 0, mismatches = 0;
  for (int trial = 0; trial < kCreditStreams; ++trial) {
    const auto log = testing::random_log(rng, rng.uniform_int(0, kCreditMaxLen));
    const feedback::CreditWindow w = trial % 2 ? feedback::CreditWindow{0.2, 4.0} : feedback::CreditWindow{0.2, 1.0};
    const int m = rng.uniform_int(1, kCreditMaxLen);
    const double t_max = log.empty() ? 10.0 : log.back().t_end + 5.0;
    for (int j = 0; j < m; ++j) {
      double t = rng.uniform(0.0, t_max);
      if (!log.empty() && rng.uniform01() < 0.2) {
        const auto& e = log[rng.uniform_index(log.size())];
        t = e.t_end + (rng.uniform01() < 0.5 ? w.lower : w.upper);
      }
      const auto y = feedback::make_event(rng.uniform01() < 0.5 ? 1.0 : -1.0, t, feedback::FeedbackSource::Simulated, 0);
      if (!testing::same(feedback::assign_credit(y, log, w), testing::brute_force(y, log, w))) ++mismatches;
      ++events;
    }
  }
  const double s = since(t0);
  return {mismatches == 0 && s < kCreditLimitS,
          std::to_string(kCreditStreams) + " streams, " + std::to_string(events) + " events, " +
              std::to_string(mismatches) + " mismatches, " + fmt(s) + " s (limit " + fmt(kCreditLimitS) + " s)"};
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t terms = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (const auto& [name, err] : testing::run_gradient_suite(seed)) {
      ++terms;
      if (!(err <= worst)) {
        worst = err;
        worst_name = name;
      }
    }
  }
  const double s = since(t0);
  return {worst < kGradTol && s < kGradLimitS,
          std::to_string(terms) + " checks, max relative error " + fmt(worst) + " (" + worst_name + ", tol " +
              fmt(kGradTol) + "), " + fmt(s) + " s"};
}

Outcome alg1_trace() {
  const auto t = testing::run_tamer_trace(kTraceSteps, {3, 17, 30}, kTraceB);
  const auto u = testing::run_tamer_trace(kTraceSteps, {12, 25, 33}, kTraceB);
  const bool ok = t.feedback_steps == std::vector<int>{3, 17, 30} &&
                  t.periodic_steps == std::vector<int>{8, 16, 24, 32, 40} && t.noop_steps.empty() && t.updates == 8 &&
                  u.feedback_steps == std::vector<int>{12, 25, 33} && u.noop_steps == std::vector<int>{8} &&
                  u.periodic_steps == std::vector<int>{16, 24, 32, 40};
  return {ok, std::to_string(t.feedback_steps.size()) + " feedback rounds + " + std::to_string(t.periodic_steps.size()) +
                  " periodic rounds (" + std::to_string(t.updates) +
                  " updates); late-feedback variant: no-op at step 8 as traced"};
}

Outcome maze_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng pick(7);
  int bad = 0, largest = 0;
  for (int seed = 0; seed < kMazeSeeds; ++seed) {
    const int w = seed == 0 ? kMazeMaxSide : pick.uniform_int(1, kMazeMaxSide);
    const int h = seed == 0 ? kMazeMaxSide : pick.uniform_int(1, kMazeMaxSide);
    const double braid = pick.uniform01() * 0.5;
    const auto a = procgen::generate_maze(w, h, static_cast<std::uint64_t>(seed), braid);
    const auto b = procgen::generate_maze(w, h, static_cast<std::uint64_t>(seed), braid);
    if (!(a == b) || !testing::connected_from_text(a.serialize())) ++bad;
    largest = std::max(largest, w * h);
  }
  const double s = since(t0);
  return {bad == 0 && s < kMazeLimitS, std::to_string(kMazeSeeds) + " seeds up to " + std::to_string(kMazeMaxSide) + "x" +
                                           std::to_string(kMazeMaxSide) + ", " + std::to_string(bad) + " failures, " +
                                           fmt(s) + " s (limit " + fmt(kMazeLimitS) + " s)"};
}

Outcome learning() {
  const auto t0 = std::chrono::steady_clock::now();
  env::TaskConfig task = env::default_task_config(env::TaskKind::FindTreasure);
  task.maze_w = task.maze_h = 8;
  task.view = env::ViewKind::TopDownAccumulated;
  task.resolution = 100;
  std::map<std::string, std::vector<double>> rate;
  nlohmann::json log;
  const fs::path report = fs::current_path() / "acceptance_learning.json";
  for (int seed = 1; seed <= kLearnSeeds; ++seed) {
    const std::uint64_t eval_seed = 1000 + static_cast<std::uint64_t>(seed);
    auto evaluate_one = [&](learner::Learner& l) {
      return learner::evaluate({{0, &l}}, task, learner::kNavigationEvalEpisodes, eval_seed).success_rate;
    };
    learner::AgentConfig base = learner::default_agent_config(learner::Algo::Tamer, task);
    base.seed = mix_seed(static_cast<std::uint64_t>(seed), 1);
    auto fresh = learner::make_learner(base);
    rate["baseline"].push_back(evaluate_one(*fresh));
    for (learner::Algo algo : {learner::Algo::Tamer, learner::Algo::Heuristic, learner::Algo::Ddpg, learner::Algo::Sac}) {
      learner::TrainOptions opt;
      opt.algo = algo;
      opt.task = task;
      opt.budget_steps = kLearnSteps;
      opt.seed = static_cast<std::uint64_t>(seed);
      opt.sim_feedback = true;
      const auto r = learner::train_headless(opt);
      const double sr = evaluate_one(*r.learners.at(0));
      rate[learner::to_string(algo)].push_back(sr);
      log[learner::to_string(algo)].push_back(
          {{"seed", seed}, {"success_rate", sr}, {"updates", r.stats.at(0).updates}, {"elapsed_s", since(t0)}});
    }
    log["baseline"] = rate["baseline"];
    std::ofstream(report) << log.dump(2) << '\n';
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double tamer = mean(rate["tamer"]), baseline = mean(rate["baseline"]), heuristic = mean(rate["heuristic"]),
               ddpg = mean(rate["ddpg"]), sac = mean(rate["sac"]);
  const double s = since(t0);
  log["mean"] = {{"tamer", tamer}, {"baseline", baseline}, {"heuristic", heuristic}, {"ddpg", ddpg}, {"sac", sac}};
  log["runtime_s"] = s;
  std::ofstream(report) << log.dump(2) << '\n';
  const bool ok = tamer > baseline && heuristic >= ddpg && heuristic >= sac && s < kLearnLimitS;
  return {ok, "mean success over " + std::to_string(kLearnSeeds) + " seeds: tamer " + fmt(tamer) + " vs baseline " +
                  fmt(baseline) + "; heuristic " + fmt(heuristic) + " vs ddpg " + fmt(ddpg) + ", sac " + fmt(sac) +
                  "; " + fmt(s / 60.0) + " min (limit " + fmt(kLearnLimitS / 60.0) + " min)"};
}

Outcome protocol() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(31337);
  int mismatches = 0;
  net::FrameDecoder dec;
  for (int i = 0; i < kProtocolRoundTrips; ++i) {
    const auto e = testing::random_envelope(rng, i % testing::kMessageVariants);
    dec.feed(net::encode(e));
    const auto got = dec.next();
    if (!got || !(*got == e)) ++mismatches;
  }
  int rejected = 0;
  for (int i = 0; i < kProtocolFuzz; ++i) {
    net::FrameDecoder d;
    d.feed(testing::mutate_bytes(rng, net::encode(testing::random_envelope(rng, i % testing::kMessageVariants))));
    try {
      while (d.next()) {
      }
    } catch (const net::ProtocolError&) {
      ++rejected;
    }
  }

  // Live server on loopback.
  recorder::SessionClock clock;
  net::Lobby lobby([&] { return clock.now(); });
  net::MatchOptions mo;
  mo.match_id = "m";
  mo.task = env::default_task_config(env::TaskKind::FindTreasure);
  mo.task.resolution = 16;
  mo.train = false;
  lobby.add_match(mo);
  lobby.start_all();
  net::Server server(lobby, {"127.0.0.1", 0, {}, 0.05, 2});
  server.run();
  namespace asio = boost::asio;
  using tcp = asio::ip::tcp;
  for (int i = 0; i < kServerFuzzConnections; ++i) {
    asio::io_context io;
    tcp::socket s(io);
    s.connect({asio::ip::make_address("127.0.0.1"), server.port()});
    boost::system::error_code ec;
    std::string bytes = net::encode({"", 1, net::Hello{"fuzz"}}) + net::encode({"", 2, net::JoinMatch{"m"}});
    bytes += testing::mutate_bytes(rng, net::encode(testing::random_envelope(rng, i % testing::kMessageVariants)));
    asio::write(s, asio::buffer(bytes), ec);
  }
  bool alive = false;
  {
    asio::io_context io;
    tcp::socket s(io);
    s.connect({asio::ip::make_address("127.0.0.1"), server.port()});
    asio::write(s, asio::buffer(net::encode({"", 1, net::Hello{"probe"}})));
    net::FrameDecoder d;
    std::array<char, 4096> buf;
    while (!alive) {
      d.feed(buf.data(), s.read_some(asio::buffer(buf)));
      while (auto e = d.next()) alive = alive || std::holds_alternative<net::MatchList>(e->body);
    }
  }
  server.stop();
  lobby.stop_all();
  const double s = since(t0);
  return {mismatches == 0 && alive && s < kProtocolLimitS,
          std::to_string(kProtocolRoundTrips) + " round trips over " + std::to_string(testing::kMessageVariants) +
              " variants, " + std::to_string(mismatches) + " mismatches; " + std::to_string(kProtocolFuzz) +
              " fuzzed frames (" + std::to_string(rejected) + " rejected with protocol errors) and " +
              std::to_string(kServerFuzzConnections) + " fuzzed connections, server still serving; " + fmt(s) + " s"};
}

Outcome clock_sync() {
  const auto t0 = std::chrono::steady_clock::now();
  testing::ClockSimParams p;
  p.offset = kClockOffset;
  p.jitter = kClockJitter;
  auto rate_for = [&](testing::JitterModel m) {
    testing::ClockSimParams q = p;
    q.model = m;
    return testing::clock_sync_success_rate(q, kClockTrials, kClockTol, 2718);
  };
  const double per_leg = rate_for(testing::JitterModel::PerLeg);
  const double round_trip = rate_for(testing::JitterModel::RoundTrip);
  const double half = rate_for(testing::JitterModel::HalfPerLeg);
  const double symmetric = rate_for(testing::JitterModel::SymmetricLegs);
  const double s = since(t0);
  return {per_leg >= kClockRate && s < kClockLimitS,
          "within " + fmt(kClockTol * 1e3) + " ms in " + fmt(per_leg * 100) + "% of " + std::to_string(kClockTrials) +
              " trials with independent U(+-20 ms) per leg (need " + fmt(kClockRate * 100) +
              "%); other readings: +-20 ms round trip " + fmt(round_trip * 100) + "%, +-10 ms per leg " +
              fmt(half * 100) + "%, equal legs " + fmt(symmetric * 100) + "%; " + fmt(s) + " s"};
}

Outcome eval_constants() {
  env::TaskConfig nav = env::default_task_config(env::TaskKind::FindTreasure);
  nav.resolution = 16;
  auto tiny = learner::make_learner(testing::tiny_agent_config(learner::Algo::Tamer));
  const auto e = learner::evaluate({{0, tiny.get()}}, nav, learner::kNavigationEvalEpisodes, 1);

  env::TaskConfig bowl = env::default_task_config(env::TaskKind::Bowling);
  bowl.resolution = 16;
  auto bcfg = testing::tiny_agent_config(learner::Algo::Ddpg, 1, 1);
  bcfg.action_dim = 3;
  auto bl = learner::make_learner(bcfg);
  const auto b = learner::evaluate({{0, bl.get()}}, bowl, learner::kNavigationEvalEpisodes, 1);

  // Paper budget: 10 minutes of session time at the decision rate.
  std::ostringstream counts;
  bool updates_ok = true, checkpoints_ok = true;
  for (learner::Algo algo : {learner::Algo::Tamer, learner::Algo::Heuristic, learner::Algo::Ddpg, learner::Algo::Sac}) {
    learner::AgentConfig cfg = testing::tiny_agent_config(algo);
    const learner::AgentConfig def = learner::default_agent_config(algo, nav);
    cfg.batch_size = std::min(def.batch_size, 32);
    cfg.frames_per_batch = def.frames_per_batch;
    cfg.updates_per_frame = def.updates_per_frame;
    learner::TrainOptions opt;
    opt.algo = algo;
    opt.task = nav;
    opt.agent = cfg;
    opt.budget_steps = learner::parse_budget("10m", nav.decision_hz);
    opt.seed = 3;
    opt.sim_feedback = true;
    const fs::path dir = scratch("ckpt_" + learner::to_string(algo));
    opt.out_dir = dir;
    const auto r = learner::train_headless(opt);
    std::set<std::string> names;
    for (const auto& c : r.checkpoints) names.insert(c.filename().string());
    checkpoints_ok = checkpoints_ok && names == std::set<std::string>{"step_001200", "step_002400", "step_003600",
                                                                      "step_004800", "step_006000", "final"};
    const long u = r.stats.at(0).updates;
    updates_ok = updates_ok && u >= kUpdatesLow && u <= kUpdatesHigh;
    counts << (counts.tellp() > 0 ? ", " : "") << learner::to_string(algo) << " " << u;
    fs::remove_all(dir);
  }
  const bool ok = learner::kNavigationEvalEpisodes == 100 && e.episodes == 100 && learner::kBowlingEvalRolls == 10 &&
                  b.episodes == 1 && b.mean_steps == 10 && learner::kCheckpointIntervalS == 120.0 && checkpoints_ok &&
                  updates_ok;
  return {ok, std::to_string(e.episodes) + " navigation episodes, " + fmt(b.mean_steps) +
                  " bowling rolls, checkpoints every 1200 steps (120 s x 10 Hz) " + (checkpoints_ok ? "ok" : "WRONG") +
                  ", updates at 6000 steps: " + counts.str() + " (range [" + std::to_string(kUpdatesLow) + ", " +
                  std::to_string(kUpdatesHigh) + "])"};
}

Outcome statistics() {
  using namespace analysis;
  double worst = 0.0;
  auto track = [&](double got, long double ref) { worst = std::max(worst, std::abs(got - static_cast<double>(ref))); };
  const auto tk = tukey_filter(testing::kOutlierSet);
  const long double q1 = testing::oracle_quantile(testing::kOutlierSet, 0.25L);
  const long double q3 = testing::oracle_quantile(testing::kOutlierSet, 0.75L);
  track(tk.q1, q1);
  track(tk.q3, q3);
  track(tk.q1, testing::kRefQ1);
  track(tk.q3, testing::kRefQ3);
  track(tk.lower_fence, q1 - 1.5L * (q3 - q1));
  track(tk.upper_fence, q3 + 1.5L * (q3 - q1));
  const bool outliers_ok = tk.outliers == std::vector<std::size_t>{3, 9};
  const auto r = linreg_significance(testing::kX, testing::kY);
  const auto o = testing::oracle_ols(testing::kX, testing::kY);
  track(r.slope, o.slope);
  track(r.intercept, o.intercept);
  track(r.t, o.t);
  track(r.p_value, o.p);
  track(r.slope, testing::kRefSlope);
  track(r.intercept, testing::kRefIntercept);
  track(r.p_value, testing::kRefP);

  Rng rng(99);
  int hits = 0;
  for (int sim = 0; sim < kFprSims; ++sim) {
    std::vector<CognitiveScore> scores;
    std::map<std::string, std::map<std::string, double>> perf;
    for (int i = 0; i < 25; ++i) {
      CognitiveScore s;
      s.subject_id = "s" + std::to_string(i);
      s.test = CognitiveTest::Fitness;
      s.score = rng.normal();
      scores.push_back(s);
      perf[s.subject_id]["task"] = rng.normal();
    }
    hits += correlation_table(scores, perf).at("fitness", "task").regression.p_value < 0.05 ? 1 : 0;
  }
  const double fpr = static_cast<double>(hits) / kFprSims;
  return {worst < kStatsTol && outliers_ok && std::abs(fpr - kFprTarget) <= kFprTol,
          "max deviation from oracles " + fmt(worst) + " (tol " + fmt(kStatsTol) + "), outliers " +
              (outliers_ok ? "match" : "differ") + "; null false-positive rate " + fmt(fpr) + " over " +
              std::to_string(kFprSims) + " simulations (target " + fmt(kFprTarget) + " +- " + fmt(kFprTol) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<std::string> only;
  bool list = false;
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--list", list, "List criterion keys");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {"credit", "credit assignment equals brute-force oracle", credit_oracle},
      {"gradients", "analytic gradients match finite differences", gradients},
      {"alg1", "Alg. 1 conformance trace", alg1_trace},
      {"maze", "maze connectivity and determinism", maze_suite},
      {"learning", "simulated-feedback learning on FindTreasure", learning},
      {"protocol", "protocol round trips and fuzzing", protocol},
      {"clock", "clock sync under jitter", clock_sync},
      {"eval", "evaluation protocol constants", eval_constants},
      {"stats", "statistics against oracles", statistics},
  };
  if (list) {
    for (const auto& c : all) std::cout << c.key << '\n';
    return 0;
  }
  for (const auto& k : only) {
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.key == k; })) {
      std::cerr << "unknown criterion " << k << '\n';
      return 2;
    }
  }
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.key) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.key << ": " << c.title << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
