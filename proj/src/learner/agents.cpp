#include "crew/learner/agents.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "crew/learner/losses.hpp"

namespace crew::learner {

using nn::BnMode;
using nn::FeatureMap;
using nn::Matrix;

std::string to_string(Algo a) {
  switch (a) {
    case Algo::Tamer: return "tamer";
    case Algo::Ddpg: return "ddpg";
    case Algo::Sac: return "sac";
    case Algo::Heuristic: return "heuristic";
  }
  return "unknown";
}

Algo parse_algo(const std::string& s) {
  for (Algo a : {Algo::Tamer, Algo::Ddpg, Algo::Sac, Algo::Heuristic}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected tamer, ddpg, sac or heuristic)");
}

AgentConfig default_agent_config(Algo algo, const env::TaskConfig& task) {
  AgentConfig c;
  c.algo = algo;
  c.action_dim = task.action_dim();
  c.frame_stack = task.task == env::TaskKind::Bowling ? 1 : 3;
  c.encoder.in_channels = c.frame_stack * task.channels();
  c.encoder.height = task.resolution;
  c.encoder.width = task.resolution;
  if (algo == Algo::Tamer) {
    c.batch_size = 16;
    c.frames_per_batch = 8;
  } else {
    c.batch_size = 240;
    c.frames_per_batch = 240;
  }
  c.seed = task.seed;
  return c;
}

nlohmann::json to_json(const AgentConfig& c) {
  const auto& e = c.encoder;
  return {
      {"algo", to_string(c.algo)},
      {"encoder",
       {{"in_channels", e.in_channels}, {"height", e.height}, {"width", e.width}, {"filters", e.filters},
        {"k1", e.k1}, {"s1", e.s1}, {"k2", e.k2}, {"s2", e.s2}, {"k3", e.k3}, {"s3", e.s3}}},
      {"action_dim", c.action_dim},
      {"hidden", c.hidden},
      {"adam",
       {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps},
        {"max_grad_norm", c.adam.max_grad_norm}}},
      {"gamma", c.gamma},
      {"polyak", c.polyak},
      {"exploration_std", c.exploration_std},
      {"alpha_init", c.alpha_init},
      {"target_entropy", c.target_entropy},
      {"scale_lb", c.scale_lb},
      {"frame_stack", c.frame_stack},
      {"shift_fraction", c.shift_fraction},
      {"batch_size", c.batch_size},
      {"frames_per_batch", c.frames_per_batch},
      {"updates_per_frame", c.updates_per_frame},
      {"replay_capacity", c.replay_capacity},
      {"label_capacity", c.label_capacity},
      {"seed", c.seed},
  };
}

AgentConfig agent_config_from_json(const nlohmann::json& j) {
  AgentConfig c;
  c.algo = parse_algo(j.at("algo").get<std::string>());
  const auto& e = j.at("encoder");
  c.encoder.in_channels = e.at("in_channels");
  c.encoder.height = e.at("height");
  c.encoder.width = e.at("width");
  c.encoder.filters = e.at("filters");
  c.encoder.k1 = e.at("k1");
  c.encoder.s1 = e.at("s1");
  c.encoder.k2 = e.at("k2");
  c.encoder.s2 = e.at("s2");
  c.encoder.k3 = e.at("k3");
  c.encoder.s3 = e.at("s3");
  c.action_dim = j.at("action_dim");
  c.hidden = j.at("hidden").get<std::vector<int>>();
  const auto& a = j.at("adam");
  c.adam = nn::AdamConfig{a.at("lr"), a.at("beta1"), a.at("beta2"), a.at("eps"), a.at("max_grad_norm")};
  c.gamma = j.at("gamma");
  c.polyak = j.at("polyak");
  c.exploration_std = j.at("exploration_std");
  c.alpha_init = j.at("alpha_init");
  c.target_entropy = j.at("target_entropy");
  c.scale_lb = j.at("scale_lb");
  c.frame_stack = j.at("frame_stack");
  c.shift_fraction = j.at("shift_fraction");
  c.batch_size = j.at("batch_size");
  c.frames_per_batch = j.at("frames_per_batch");
  c.updates_per_frame = j.at("updates_per_frame");
  c.replay_capacity = j.at("replay_capacity");
  c.label_capacity = j.at("label_capacity");
  c.seed = j.at("seed");
  return c;
}

// ---- persistence ----

void Learner::save(TensorArchive& out) {
  out.meta["algo"] = to_string(cfg_.algo);
  out.meta["updates"] = updates_;
  out.meta["agent_config"] = to_json(cfg_);
  for (const auto& group : state()) {
    for (const auto* p : group.params) out.put(group.prefix + "/" + p->name, p->shape, p->value);
    for (std::size_t i = 0; i < group.buffers.size(); ++i) {
      const auto& b = *group.buffers[i];
      out.put(group.prefix + "/buffer" + std::to_string(i), {static_cast<int>(b.size())}, b);
    }
  }
  for (const auto& [name, opt] : optimizers()) {
    out.meta["optimizer_steps"][name] = opt->steps();
    auto& m = opt->first_moments();
    auto& v = opt->second_moments();
    for (std::size_t i = 0; i < m.size(); ++i) {
      out.put(name + "/m" + std::to_string(i), {static_cast<int>(m[i].size())}, m[i]);
      out.put(name + "/v" + std::to_string(i), {static_cast<int>(v[i].size())}, v[i]);
    }
  }
}

void Learner::load(const TensorArchive& in) {
  if (in.meta.value("algo", std::string()) != to_string(cfg_.algo)) {
    throw std::runtime_error("checkpoint algorithm does not match the learner");
  }
  updates_ = in.meta.value("updates", 0L);
  for (const auto& group : state()) {
    for (auto* p : group.params) p->value = in.get(group.prefix + "/" + p->name, p->value.size());
    for (std::size_t i = 0; i < group.buffers.size(); ++i) {
      auto& b = *group.buffers[i];
      b = in.get(group.prefix + "/buffer" + std::to_string(i), b.size());
    }
  }
  for (const auto& [name, opt] : optimizers()) {
    opt->set_steps(in.meta.at("optimizer_steps").at(name).get<long>());
    auto& m = opt->first_moments();
    auto& v = opt->second_moments();
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = in.get(name + "/m" + std::to_string(i), m[i].size());
      v[i] = in.get(name + "/v" + std::to_string(i), v[i].size());
    }
  }
}

namespace {

std::vector<nn::Param<float>*> concat(std::vector<nn::Param<float>*> a, const std::vector<nn::Param<float>*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void require_single(const FeatureMap<float>& obs) {
  if (obs.batch != 1) throw std::invalid_argument("act: expected a single observation");
}

std::vector<float> with_noise(std::vector<float> a, double std_dev, Rng& rng) {
  for (float& v : a) v = static_cast<float>(std::clamp(v + std_dev * rng.normal(), -1.0, 1.0));
  return a;
}

void sync(nn::Encoder<float>& target, nn::Encoder<float>& online, double keep) {
  nn::polyak_update(target.params(), online.params(), keep);
  nn::polyak_update(target.buffers(), online.buffers(), keep);
}

}  // namespace

// ---- TAMER ----

TamerLearner::TamerLearner(AgentConfig cfg) : Learner(std::move(cfg)) {
  Rng rng(mix_seed(cfg_.seed, 0xA11CE));
  enc_ = nn::Encoder<float>(cfg_.encoder, "enc");
  enc_.init(rng);
  const int f = enc_.feature_dim();
  h_ = nn::Mlp<float>(f + cfg_.action_dim, cfg_.hidden, 1, "h");
  h_.init(rng);
  actor_ = nn::Mlp<float>(f, cfg_.hidden, cfg_.action_dim, "actor");
  actor_.init(rng);
  enc_t_ = enc_;
  h_t_ = h_;
  actor_t_ = actor_;
  opt_h_ = nn::Adam<float>(concat(enc_.params(), h_.params()), cfg_.adam);
  opt_actor_ = nn::Adam<float>(actor_.params(), cfg_.adam);
}

std::vector<float> TamerLearner::act(const FeatureMap<float>& obs, bool explore, Rng& rng) {
  require_single(obs);
  const Matrix<float> a = deterministic_action(actor_, enc_.forward(obs, BnMode::Eval));
  std::vector<float> out(a.data.begin(), a.data.end());
  return explore ? with_noise(std::move(out), cfg_.exploration_std, rng) : out;
}

float TamerLearner::predict(const FeatureMap<float>& obs, const Matrix<float>& action) {
  const Matrix<float> f = enc_.forward(obs, BnMode::Eval);
  return h_.forward(nn::hconcat(f, action))(0, 0);
}

UpdateStats TamerLearner::update(const FeatureMap<float>& obs, const Matrix<float>& action,
                                 const std::vector<float>& y) {
  UpdateStats st;
  std::array<nn::Mlp<float>*, 1> heads{&h_};
  opt_h_.zero_grad();
  Matrix<float> f;
  st.value_loss = value_regression<float>(enc_, heads, obs, action, y, BnMode::Train, &f);
  st.value_grad_norm = opt_h_.step();
  opt_actor_.zero_grad();
  st.actor_loss = deterministic_actor_loss<float>(actor_, heads, f);
  opt_actor_.step();
  sync(enc_t_, enc_, cfg_.polyak);
  nn::polyak_update(h_t_.params(), h_.params(), cfg_.polyak);
  nn::polyak_update(actor_t_.params(), actor_.params(), cfg_.polyak);
  ++updates_;
  return st;
}

std::vector<Learner::Named> TamerLearner::state() {
  return {{"enc", enc_.params(), enc_.buffers()},       {"enc_t", enc_t_.params(), enc_t_.buffers()},
          {"h", h_.params(), {}},                       {"h_t", h_t_.params(), {}},
          {"actor", actor_.params(), {}},               {"actor_t", actor_t_.params(), {}}};
}

std::vector<std::pair<std::string, nn::Adam<float>*>> TamerLearner::optimizers() {
  return {{"opt_h", &opt_h_}, {"opt_actor", &opt_actor_}};
}

// ---- DDPG ----

DdpgLearner::DdpgLearner(AgentConfig cfg) : Learner(std::move(cfg)) {
  Rng rng(mix_seed(cfg_.seed, 0xDD96));
  enc_ = nn::Encoder<float>(cfg_.encoder, "enc");
  enc_.init(rng);
  const int f = enc_.feature_dim();
  q1_ = nn::Mlp<float>(f + cfg_.action_dim, cfg_.hidden, 1, "q1");
  q1_.init(rng);
  q2_ = nn::Mlp<float>(f + cfg_.action_dim, cfg_.hidden, 1, "q2");
  q2_.init(rng);
  actor_ = nn::Mlp<float>(f, cfg_.hidden, cfg_.action_dim, "actor");
  actor_.init(rng);
  enc_t_ = enc_;
  q1_t_ = q1_;
  q2_t_ = q2_;
  actor_t_ = actor_;
  opt_critic_ = nn::Adam<float>(concat(concat(enc_.params(), q1_.params()), q2_.params()), cfg_.adam);
  opt_actor_ = nn::Adam<float>(actor_.params(), cfg_.adam);
}

std::vector<float> DdpgLearner::act(const FeatureMap<float>& obs, bool explore, Rng& rng) {
  require_single(obs);
  const Matrix<float> a = deterministic_action(actor_, enc_.forward(obs, BnMode::Eval));
  std::vector<float> out(a.data.begin(), a.data.end());
  return explore ? with_noise(std::move(out), cfg_.exploration_std, rng) : out;
}

UpdateStats DdpgLearner::update(const TransitionBatch& b) {
  UpdateStats st;
  std::array<nn::Mlp<float>*, 2> heads{&q1_, &q2_};
  std::array<nn::Mlp<float>*, 2> target_heads{&q1_t_, &q2_t_};
  const std::vector<float> y =
      ddpg_target<float>(enc_t_, actor_t_, target_heads, b.next_obs, b.reward, b.done, static_cast<float>(cfg_.gamma));
  opt_critic_.zero_grad();
  Matrix<float> f;
  st.value_loss = value_regression<float>(enc_, heads, b.obs, b.action, y, BnMode::Train, &f);
  st.value_grad_norm = opt_critic_.step();
  opt_actor_.zero_grad();
  st.actor_loss = deterministic_actor_loss<float>(actor_, heads, f);
  opt_actor_.step();
  sync(enc_t_, enc_, cfg_.polyak);
  nn::polyak_update(q1_t_.params(), q1_.params(), cfg_.polyak);
  nn::polyak_update(q2_t_.params(), q2_.params(), cfg_.polyak);
  nn::polyak_update(actor_t_.params(), actor_.params(), cfg_.polyak);
  ++updates_;
  return st;
}

std::vector<Learner::Named> DdpgLearner::state() {
  return {{"enc", enc_.params(), enc_.buffers()},
          {"enc_t", enc_t_.params(), enc_t_.buffers()},
          {"q1", q1_.params(), {}},
          {"q2", q2_.params(), {}},
          {"q1_t", q1_t_.params(), {}},
          {"q2_t", q2_t_.params(), {}},
          {"actor", actor_.params(), {}},
          {"actor_t", actor_t_.params(), {}}};
}

std::vector<std::pair<std::string, nn::Adam<float>*>> DdpgLearner::optimizers() {
  return {{"opt_critic", &opt_critic_}, {"opt_actor", &opt_actor_}};
}

// ---- SAC ----

SacLearner::SacLearner(AgentConfig cfg) : Learner(std::move(cfg)) {
  Rng rng(mix_seed(cfg_.seed, 0x5AC));
  enc_ = nn::Encoder<float>(cfg_.encoder, "enc");
  enc_.init(rng);
  const int f = enc_.feature_dim();
  q1_ = nn::Mlp<float>(f + cfg_.action_dim, cfg_.hidden, 1, "q1");
  q1_.init(rng);
  q2_ = nn::Mlp<float>(f + cfg_.action_dim, cfg_.hidden, 1, "q2");
  q2_.init(rng);
  actor_ = nn::Mlp<float>(f, cfg_.hidden, 2 * cfg_.action_dim, "actor");
  actor_.init(rng);
  enc_t_ = enc_;
  q1_t_ = q1_;
  q2_t_ = q2_;
  log_alpha_.name = "log_alpha";
  log_alpha_.resize({1});
  log_alpha_.value[0] = static_cast<float>(std::log(cfg_.alpha_init));
  opt_critic_ = nn::Adam<float>(concat(concat(enc_.params(), q1_.params()), q2_.params()), cfg_.adam);
  opt_actor_ = nn::Adam<float>(actor_.params(), cfg_.adam);
  opt_alpha_ = nn::Adam<float>({&log_alpha_}, cfg_.adam);
}

double SacLearner::alpha() const { return std::exp(static_cast<double>(log_alpha_.value[0])); }

std::vector<float> SacLearner::act(const FeatureMap<float>& obs, bool explore, Rng& rng) {
  require_single(obs);
  const Matrix<float> f = enc_.forward(obs, BnMode::Eval);
  const int a = cfg_.action_dim;
  Matrix<float> noise(1, a);
  if (explore) {
    for (float& v : noise.data) v = static_cast<float>(rng.normal());
  }
  const SquashedSample<float> s = squashed_sample<float>(actor_, f, noise, static_cast<float>(cfg_.scale_lb));
  return std::vector<float>(s.action.data.begin(), s.action.data.end());
}

UpdateStats SacLearner::update(const TransitionBatch& b, Rng& rng) {
  UpdateStats st;
  const int n = b.obs.batch;
  const int a = cfg_.action_dim;
  const float alpha = static_cast<float>(this->alpha());
  const float lb = static_cast<float>(cfg_.scale_lb);
  auto gaussian = [&] {
    Matrix<float> m(n, a);
    for (float& v : m.data) v = static_cast<float>(rng.normal());
    return m;
  };
  std::array<nn::Mlp<float>*, 2> heads{&q1_, &q2_};
  std::array<nn::Mlp<float>*, 2> target_heads{&q1_t_, &q2_t_};
  const std::vector<float> y = sac_target<float>(enc_t_, actor_, target_heads, b.next_obs, b.reward, b.done,
                                                 static_cast<float>(cfg_.gamma), alpha, gaussian(), lb);
  opt_critic_.zero_grad();
  Matrix<float> f;
  st.value_loss = value_regression<float>(enc_, heads, b.obs, b.action, y, BnMode::Train, &f);
  st.value_grad_norm = opt_critic_.step();

  opt_actor_.zero_grad();
  std::vector<float> log_prob;
  st.actor_loss = sac_actor_loss<float>(actor_, heads, f, gaussian(), alpha, lb, &log_prob);
  opt_actor_.step();

  opt_alpha_.zero_grad();
  float g = 0.0f;
  alpha_loss<float>(log_alpha_.value[0], log_prob, static_cast<float>(cfg_.target_entropy), &g);
  log_alpha_.grad[0] = g;
  opt_alpha_.step();
  st.alpha = this->alpha();

  sync(enc_t_, enc_, cfg_.polyak);
  nn::polyak_update(q1_t_.params(), q1_.params(), cfg_.polyak);
  nn::polyak_update(q2_t_.params(), q2_.params(), cfg_.polyak);
  ++updates_;
  return st;
}

std::vector<Learner::Named> SacLearner::state() {
  return {{"enc", enc_.params(), enc_.buffers()},
          {"enc_t", enc_t_.params(), enc_t_.buffers()},
          {"q1", q1_.params(), {}},
          {"q2", q2_.params(), {}},
          {"q1_t", q1_t_.params(), {}},
          {"q2_t", q2_t_.params(), {}},
          {"actor", actor_.params(), {}},
          {"alpha", {&log_alpha_}, {}}};
}

std::vector<std::pair<std::string, nn::Adam<float>*>> SacLearner::optimizers() {
  return {{"opt_critic", &opt_critic_}, {"opt_actor", &opt_actor_}, {"opt_alpha", &opt_alpha_}};
}

// ---- factory and files ----

std::unique_ptr<Learner> make_learner(const AgentConfig& cfg) {
  switch (cfg.algo) {
    case Algo::Tamer: return std::make_unique<TamerLearner>(cfg);
    case Algo::Ddpg:
    case Algo::Heuristic: return std::make_unique<DdpgLearner>(cfg);
    case Algo::Sac: return std::make_unique<SacLearner>(cfg);
  }
  throw std::invalid_argument("make_learner: unknown algorithm");
}

void save_learner(Learner& learner, const std::filesystem::path& path, const nlohmann::json& extra_meta) {
  TensorArchive ar;
  learner.save(ar);
  if (extra_meta.is_object()) {
    for (const auto& [k, v] : extra_meta.items()) ar.meta[k] = v;
  }
  ar.write_atomic(path);
}

std::unique_ptr<Learner> load_learner(const std::filesystem::path& path) {
  const TensorArchive ar = TensorArchive::read(path);
  auto learner = make_learner(agent_config_from_json(ar.meta.at("agent_config")));
  learner->load(ar);
  return learner;
}

}  // namespace crew::learner
