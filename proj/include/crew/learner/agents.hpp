#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "crew/common/rng.hpp"
#include "crew/env/task_config.hpp"
#include "crew/learner/checkpoint.hpp"
#include "crew/nn/layers.hpp"
#include "crew/nn/optim.hpp"

namespace crew::learner {

enum class Algo { Tamer, Ddpg, Sac, Heuristic };

std::string to_string(Algo a);
Algo parse_algo(const std::string& s);

struct AgentConfig {
  Algo algo = Algo::Tamer;
  nn::EncoderSpec encoder;
  int action_dim = 2;
  std::vector<int> hidden{256, 256};
  nn::AdamConfig adam;
  double gamma = 0.99;
  double polyak = 0.995;
  double exploration_std = 0.1;
  double alpha_init = 0.1;
  double target_entropy = -6.0;
  double scale_lb = 1e-4;
  int frame_stack = 3;
  double shift_fraction = 0.08;
  int batch_size = 16;
  int frames_per_batch = 8;
  // Gradient updates per collected frame for the off-policy learners.
  double updates_per_frame = 0.2;
  std::size_t replay_capacity = 10000;
  std::size_t label_capacity = 10000;
  std::uint64_t seed = 0;
};

// Hyperparameters per algorithm, with the encoder sized for the task's
// observation (frame_stack x channels at resolution x resolution).
AgentConfig default_agent_config(Algo algo, const env::TaskConfig& task);
nlohmann::json to_json(const AgentConfig& c);
AgentConfig agent_config_from_json(const nlohmann::json& j);

struct UpdateStats {
  double value_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double value_grad_norm = 0.0;
};

struct TransitionBatch {
  nn::FeatureMap<float> obs;
  nn::Matrix<float> action;
  std::vector<float> reward;
  nn::FeatureMap<float> next_obs;
  std::vector<float> done;
};

class Learner {
 public:
  explicit Learner(AgentConfig cfg) : cfg_(std::move(cfg)) {}
  virtual ~Learner() = default;
  // Optimizers hold pointers into the networks.
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  const AgentConfig& config() const { return cfg_; }
  Algo algo() const { return cfg_.algo; }
  long updates() const { return updates_; }

  // Action for a single stacked observation (batch of one), each component
  // in [-1, 1]. With `explore`, adds the algorithm's exploration noise.
  virtual std::vector<float> act(const nn::FeatureMap<float>& obs, bool explore, Rng& rng) = 0;

  virtual void save(TensorArchive& out);
  virtual void load(const TensorArchive& in);

 protected:
  struct Named {
    std::string prefix;
    std::vector<nn::Param<float>*> params;
    std::vector<std::vector<float>*> buffers;
  };
  // Every tensor that constitutes the learner's state, grouped by role.
  virtual std::vector<Named> state() = 0;
  virtual std::vector<std::pair<std::string, nn::Adam<float>*>> optimizers() = 0;

  AgentConfig cfg_;
  long updates_ = 0;
};

// c-Deep TAMER: H(s, a) regresses feedback labels; the actor ascends H.
class TamerLearner : public Learner {
 public:
  explicit TamerLearner(AgentConfig cfg);
  std::vector<float> act(const nn::FeatureMap<float>& obs, bool explore, Rng& rng) override;
  // One H descent step, one actor ascent step and a target update.
  UpdateStats update(const nn::FeatureMap<float>& obs, const nn::Matrix<float>& action, const std::vector<float>& y);
  float predict(const nn::FeatureMap<float>& obs, const nn::Matrix<float>& action);

 protected:
  std::vector<Named> state() override;
  std::vector<std::pair<std::string, nn::Adam<float>*>> optimizers() override;

 private:
  nn::Encoder<float> enc_, enc_t_;
  nn::Mlp<float> h_, h_t_, actor_, actor_t_;
  nn::Adam<float> opt_h_, opt_actor_;
};

// DDPG with twin critics; also the learner behind the heuristic-feedback
// baseline, which differs only in the reward it is given.
class DdpgLearner : public Learner {
 public:
  explicit DdpgLearner(AgentConfig cfg);
  std::vector<float> act(const nn::FeatureMap<float>& obs, bool explore, Rng& rng) override;
  UpdateStats update(const TransitionBatch& batch);

 protected:
  std::vector<Named> state() override;
  std::vector<std::pair<std::string, nn::Adam<float>*>> optimizers() override;

 private:
  nn::Encoder<float> enc_, enc_t_;
  nn::Mlp<float> q1_, q2_, q1_t_, q2_t_, actor_, actor_t_;
  nn::Adam<float> opt_critic_, opt_actor_;
};

class SacLearner : public Learner {
 public:
  explicit SacLearner(AgentConfig cfg);
  std::vector<float> act(const nn::FeatureMap<float>& obs, bool explore, Rng& rng) override;
  UpdateStats update(const TransitionBatch& batch, Rng& rng);
  double alpha() const;

 protected:
  std::vector<Named> state() override;
  std::vector<std::pair<std::string, nn::Adam<float>*>> optimizers() override;

 private:
  nn::Encoder<float> enc_, enc_t_;
  nn::Mlp<float> q1_, q2_, q1_t_, q2_t_, actor_;
  nn::Param<float> log_alpha_;
  nn::Adam<float> opt_critic_, opt_actor_, opt_alpha_;
};

std::unique_ptr<Learner> make_learner(const AgentConfig& cfg);

// Writes a learner with its configuration; load_learner reconstructs it.
void save_learner(Learner& learner, const std::filesystem::path& path, const nlohmann::json& extra_meta = {});
std::unique_ptr<Learner> load_learner(const std::filesystem::path& path);

}  // namespace crew::learner
