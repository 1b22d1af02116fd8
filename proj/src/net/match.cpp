#include "crew/net/match.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crew::net {

namespace {

std::vector<double> to_doubles(const std::vector<float>& a) { return {a.begin(), a.end()}; }
std::vector<float> to_floats(const std::vector<double>& a) { return {a.begin(), a.end()}; }

int team_code(env::Team t) {
  switch (t) {
    case env::Team::Seeker: return 0;
    case env::Team::Hider: return 1;
    case env::Team::Solo: return 2;
  }
  return 2;
}

class InlineDriver : public AgentDriver {
 public:
  explicit InlineDriver(std::unique_ptr<learner::AgentRunner> r) : runner_(std::move(r)) {}
  void begin(const env::ObservationFrame& first, double) override { runner_->begin_episode(first); }
  std::vector<float> action(double t) override { return runner_->act(t, true); }
  void observe(const env::ObservationFrame& next, const std::vector<float>& executed, double reward, bool terminal,
               double t) override {
    runner_->override_action(executed);
    runner_->observe(next, reward, terminal, t);
  }
  void feedback(const feedback::FeedbackEvent& e) override { runner_->push_feedback(e); }
  learner::RunnerStats stats() const override { return runner_->stats(); }

 private:
  std::unique_ptr<learner::AgentRunner> runner_;
};

// Learner updates run on a worker thread. The worker closes each step with
// the executed action, opens the next one and publishes its action; the
// tick always uses the latest published action.
class ThreadedDriver : public AgentDriver {
 public:
  explicit ThreadedDriver(std::unique_ptr<learner::AgentRunner> r) : runner_(std::move(r)) {
    worker_ = std::thread([this] { loop(); });
  }
  ~ThreadedDriver() override {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }
  void begin(const env::ObservationFrame& first, double t) override {
    post([this, first, t] {
      runner_->begin_episode(first);
      publish(runner_->act(t, true));
    });
  }
  std::vector<float> action(double) override {
    std::lock_guard lock(mutex_);
    if (latest_.empty()) latest_.assign(static_cast<std::size_t>(runner_dim_), 0.0f);
    return latest_;
  }
  void observe(const env::ObservationFrame& next, const std::vector<float>& executed, double reward, bool terminal,
               double t) override {
    post([this, next, executed, reward, terminal, t] {
      runner_->override_action(executed);
      runner_->observe(next, reward, terminal, t);
      if (!terminal) publish(runner_->act(t, true));
    });
  }
  void feedback(const feedback::FeedbackEvent& e) override {
    post([this, e] { runner_->push_feedback(e); });
  }
  learner::RunnerStats stats() const override {
    std::lock_guard lock(mutex_);
    return stats_;
  }

 private:
  void post(std::function<void()> job) {
    {
      std::lock_guard lock(mutex_);
      jobs_.push_back(std::move(job));
    }
    cv_.notify_all();
  }
  void publish(std::vector<float> a) {
    std::lock_guard lock(mutex_);
    latest_ = std::move(a);
    stats_ = runner_->stats();
  }
  void loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job();
      std::lock_guard lock(mutex_);
      stats_ = runner_->stats();
    }
  }

  std::unique_ptr<learner::AgentRunner> runner_;
  int runner_dim_ = runner_->learner().config().action_dim;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  std::vector<float> latest_;
  learner::RunnerStats stats_;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace

std::unique_ptr<AgentDriver> make_driver(std::unique_ptr<learner::AgentRunner> runner, bool threaded) {
  if (threaded) return std::make_unique<ThreadedDriver>(std::move(runner));
  return std::make_unique<InlineDriver>(std::move(runner));
}

void Outbox::send(const std::string& match_id, Message m) {
  std::function<void()> notify;
  {
    std::lock_guard lock(mutex_);
    Envelope e{match_id, ++seq_, std::move(m)};
    if (auto* f = std::get_if<StateFrame>(&e.body)) {
      for (auto it = queue_.begin(); it != queue_.end(); ++it) {
        if (const auto* old = std::get_if<StateFrame>(&it->body); old && it->match_id == match_id) {
          f->snapshot = f->snapshot || old->snapshot;
          queue_.erase(it);
          ++coalesced_;
          break;
        }
      }
    }
    queue_.push_back(std::move(e));
    notify = notify_;
  }
  if (notify) notify();
}

std::vector<Envelope> Outbox::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Envelope> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t Outbox::pending() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

std::size_t Outbox::coalesced() const {
  std::lock_guard lock(mutex_);
  return coalesced_;
}

void Outbox::set_notify(std::function<void()> fn) {
  std::lock_guard lock(mutex_);
  notify_ = std::move(fn);
}

Visibility visibility(const env::WorldState& s, std::optional<int> agent, env::ViewKind view) {
  Visibility v;
  const int n = s.arena ? s.arena->blocks_w() * s.arena->blocks_h() : 0;
  if (view == env::ViewKind::TopDownFull || !s.arena) {
    v.blocks.assign(static_cast<std::size_t>(n), 1);
    v.point = [](env::Vec2) { return true; };
    return v;
  }
  v.blocks.assign(static_cast<std::size_t>(n), 0);
  if (!agent || !s.has_agent(*agent)) {
    v.point = [](env::Vec2) { return false; };
    return v;
  }
  const env::AgentState& a = s.agent(*agent);
  const auto& arena = *s.arena;
  if (view == env::ViewKind::TopDownAccumulated) {
    const double r = s.config.fov_radius;
    const std::vector<env::Vec2> hist = a.fov_history;
    for (int by = 0; by < arena.blocks_h(); ++by) {
      for (int bx = 0; bx < arena.blocks_w(); ++bx) {
        for (const env::Vec2& q : hist) {
          const double gx = std::max({bx - q.x, 0.0, q.x - (bx + 1.0)});
          const double gy = std::max({by - q.y, 0.0, q.y - (by + 1.0)});
          if (gx * gx + gy * gy <= r * r) {
            v.blocks[static_cast<std::size_t>(arena.block_index({bx, by}))] = 1;
            break;
          }
        }
      }
    }
    v.point = [hist, r](env::Vec2 p) {
      return std::any_of(hist.begin(), hist.end(), [&](env::Vec2 q) { return env::distance(p, q) <= r; });
    };
    return v;
  }
  const double h = s.config.egocentric_half_extent;
  const env::Vec2 c = a.pos;
  for (int by = 0; by < arena.blocks_h(); ++by) {
    for (int bx = 0; bx < arena.blocks_w(); ++bx) {
      if (bx + 1.0 > c.x - h && bx < c.x + h && by + 1.0 > c.y - h && by < c.y + h) {
        v.blocks[static_cast<std::size_t>(arena.block_index({bx, by}))] = 1;
      }
    }
  }
  v.point = [c, h](env::Vec2 p) { return std::abs(p.x - c.x) <= h && std::abs(p.y - c.y) <= h; };
  return v;
}

MatchInstance::MatchInstance(MatchOptions opt) : opt_(std::move(opt)) {
  opt_.task.validate();
  world_ = env::reset(opt_.task, mix_seed(mix_seed(opt_.seed, 0x7EA1), 0));
  agents_ = world_.controllable_agents();
  if (opt_.train) {
    const auto window = feedback::default_window(opt_.task.task);
    for (int id : agents_) {
      learner::AgentConfig cfg = opt_.agent.value_or(learner::default_agent_config(opt_.algo, opt_.task));
      cfg.algo = opt_.algo;
      cfg.seed = mix_seed(opt_.seed, static_cast<std::uint64_t>(id) + 1);
      auto runner = std::make_unique<learner::AgentRunner>(learner::make_learner(cfg), window, mix_seed(cfg.seed, 0x5EED));
      drivers_[id] = make_driver(std::move(runner), opt_.threaded_trainer);
    }
  }
  if (opt_.recorder) {
    opt_.recorder->ensure_stream("feedback",
                                 {{"fields", {{"agent", "integer"}, {"value", "number"}, {"source", "string"}}}});
    opt_.recorder->ensure_stream("steps", {{"fields", {{"agent", "integer"}, {"action", "array"}, {"reward", "number"}}}},
                                 opt_.task.decision_hz);
  }
  start_episode(0.0);
}

MatchInstance::~MatchInstance() = default;

void MatchInstance::start_episode(double now) {
  if (episode_ > 0) world_ = env::reset(opt_.task, mix_seed(mix_seed(opt_.seed, 0x7EA1), static_cast<std::uint64_t>(episode_)));
  judge_reference_.clear();
  last_judgment_ = now;
  const int res = opt_.task.resolution;
  for (auto& [id, d] : drivers_) {
    d->begin(env::render_view(world_, id, opt_.task.view, res, res), now);
    if (opt_.sim_feedback) judge_reference_[id] = world_;
  }
}

MatchSummary MatchInstance::summary() const {
  return {opt_.match_id, env::to_string(opt_.task.task), static_cast<int>(agents_.size()), tick_,
          static_cast<int>(clients_.size())};
}

void MatchInstance::connect(ClientId c, std::shared_ptr<Outbox> out, std::string name) {
  Client cl{std::move(name), std::move(out), Role{RoleKind::Viewer, std::nullopt}, std::nullopt, std::nullopt};
  clients_[c] = std::move(cl);
  Client& ref = clients_.at(c);
  ref.out->send(opt_.match_id, AssignRole{ref.role});
  ref.out->send(opt_.match_id, frame_for(c, true));
}

void MatchInstance::disconnect(ClientId c) {
  for (auto it = controller_.begin(); it != controller_.end();) {
    it = it->second == c ? controller_.erase(it) : std::next(it);
  }
  clients_.erase(c);
}

void MatchInstance::set_clock_offset(ClientId c, std::optional<double> offset) {
  if (auto it = clients_.find(c); it != clients_.end()) it->second.offset = offset;
}

void MatchInstance::error(Client& c, ErrorCode code, const std::string& text) {
  c.out->send(opt_.match_id, Error{code, text});
}

double MatchInstance::to_server_time(const Client& c, double client_time, double now) const {
  return c.offset ? client_time - *c.offset : now;
}

std::optional<int> MatchInstance::controller_of_agent(int agent) const {
  if (auto it = controller_.find(agent); it != controller_.end()) return static_cast<int>(it->second);
  return std::nullopt;
}

void MatchInstance::handle(ClientId id, const Message& m, double now) {
  auto cit = clients_.find(id);
  if (cit == clients_.end()) return;
  Client& c = cit->second;
  auto known = [&](int agent) { return std::find(agents_.begin(), agents_.end(), agent) != agents_.end(); };
  auto release_all = [&] {
    for (auto it = controller_.begin(); it != controller_.end();) {
      it = it->second == id ? controller_.erase(it) : std::next(it);
    }
  };

  if (const auto* a = std::get_if<AssignRole>(&m)) {
    const Role& r = a->role;
    if (r.bound_agent && !known(*r.bound_agent)) {
      return error(c, ErrorCode::NoSuchAgent, "no agent " + std::to_string(*r.bound_agent));
    }
    if (r.kind == RoleKind::Player || r.kind == RoleKind::AIAgent) {
      if (!r.bound_agent) return error(c, ErrorCode::BadMessage, "Player and AIAgent roles need an agent");
      auto it = controller_.find(*r.bound_agent);
      if (it != controller_.end() && it->second != id) {
        return error(c, ErrorCode::AgentBusy, "agent " + std::to_string(*r.bound_agent) + " is already controlled");
      }
      release_all();
      controller_[*r.bound_agent] = id;
      teleop_.erase(*r.bound_agent);
      c.selected = r.bound_agent;
    } else {
      release_all();
      c.selected = r.kind == RoleKind::Viewer ? r.bound_agent : std::nullopt;
    }
    c.role = r;
    if (r.kind == RoleKind::Server) c.role.bound_agent.reset();
    c.out->send(opt_.match_id, AssignRole{c.role});
    c.out->send(opt_.match_id, frame_for(id, true));
  } else if (const auto* s = std::get_if<SelectAgent>(&m)) {
    if (!known(s->agent_id)) return error(c, ErrorCode::NoSuchAgent, "no agent " + std::to_string(s->agent_id));
    if ((c.role.kind == RoleKind::Player || c.role.kind == RoleKind::AIAgent) && c.role.bound_agent != s->agent_id) {
      return error(c, ErrorCode::Forbidden, "a Player cannot select another agent");
    }
    c.selected = s->agent_id;
    if (c.role.kind == RoleKind::Viewer) c.role.bound_agent = s->agent_id;
    c.out->send(opt_.match_id, AssignRole{c.role});
  } else if (const auto* act = std::get_if<ActionMsg>(&m)) {
    auto it = controller_.find(act->agent_id);
    if (it == controller_.end() || it->second != id) {
      return error(c, ErrorCode::Forbidden, "agent " + std::to_string(act->agent_id) + " is not under your control");
    }
    if (static_cast<int>(act->values.size()) != opt_.task.action_dim() ||
        !std::all_of(act->values.begin(), act->values.end(), [](double v) { return std::isfinite(v); })) {
      return error(c, ErrorCode::BadMessage, "action must have " + std::to_string(opt_.task.action_dim()) + " finite values");
    }
    teleop_[act->agent_id] = act->values;
  } else if (const auto* f = std::get_if<FeedbackMsg>(&m)) {
    if (!c.selected) return error(c, ErrorCode::Forbidden, "select an agent before giving feedback");
    if (!std::isfinite(f->event.value)) return error(c, ErrorCode::BadMessage, "feedback value must be finite");
    // Causal and monotone on the server clock.
    double t = std::min(to_server_time(c, f->event.t_feedback, now), now);
    t = std::max(t, last_feedback_t_);
    const auto e = feedback::make_event(f->event.value, t, f->event.source, *c.selected);
    last_feedback_t_ = t;
    if (auto d = drivers_.find(e.target_agent); d != drivers_.end()) d->second->feedback(e);
    if (opt_.recorder) {
      opt_.recorder->append("feedback", e.t_feedback,
                            {{"agent", e.target_agent}, {"value", e.value}, {"source", feedback::to_string(e.source)},
                             {"client", c.name}});
    }
  } else if (const auto* tc = std::get_if<TakeControl>(&m)) {
    if (!known(tc->agent_id)) return error(c, ErrorCode::NoSuchAgent, "no agent " + std::to_string(tc->agent_id));
    auto it = controller_.find(tc->agent_id);
    if (tc->on) {
      if (it != controller_.end() && it->second != id) {
        return error(c, ErrorCode::AgentBusy, "agent " + std::to_string(tc->agent_id) + " is already controlled");
      }
      controller_[tc->agent_id] = id;
      teleop_.erase(tc->agent_id);
    } else if (it != controller_.end() && it->second == id) {
      controller_.erase(it);
    }
    c.out->send(opt_.match_id, TakeControl{tc->agent_id, tc->on});
  } else if (const auto* x = std::get_if<ExternalSample>(&m)) {
    if (!opt_.recorder) return;
    const std::string name = "ext." + x->stream;
    double t = std::min(to_server_time(c, x->client_time, now), now);
    try {
      const auto h = opt_.recorder->ensure_stream(name);
      auto last = last_external_t_.find(name);
      if (last != last_external_t_.end()) t = std::max(t, last->second);
      opt_.recorder->append(h, t, x->payload);
      last_external_t_[name] = t;
    } catch (const std::exception& e) {
      error(c, ErrorCode::BadMessage, e.what());
    }
  } else {
    error(c, ErrorCode::BadMessage, type_name(m) + " is not accepted inside a match");
  }
}

void MatchInstance::tick(double now) {
  session_t_ = now;
  const double dt = opt_.task.decision_dt();
  std::map<int, env::ActionCommand> actions;
  std::map<int, std::vector<float>> executed;
  Rng& rng = world_.rng;
  for (int id : agents_) {
    std::vector<float> ai;
    if (auto d = drivers_.find(id); d != drivers_.end()) ai = d->second->action(now);
    if (controller_.contains(id)) {
      auto t = teleop_.find(id);
      if (t != teleop_.end()) {
        actions[id] = {t->second};
      } else if (opt_.task.task != env::TaskKind::Bowling) {
        actions[id] = env::encode_target(world_, world_.agent(id).pos);
      } else {
        actions[id] = {std::vector<double>(static_cast<std::size_t>(opt_.task.action_dim()), 0.0)};
      }
    } else if (!ai.empty()) {
      actions[id] = {to_doubles(ai)};
    } else {
      std::vector<double> a(static_cast<std::size_t>(opt_.task.action_dim()));
      for (double& v : a) v = rng.uniform(-1.0, 1.0);
      actions[id] = {a};
    }
    std::vector<float> ex = to_floats(actions[id].values);
    for (float& v : ex) v = std::clamp(v, -1.0f, 1.0f);
    executed[id] = std::move(ex);
  }
  const env::StepResult sr = env::step(world_, actions, dt);
  ++tick_;
  const double t_obs = now + dt;
  const bool terminal = sr.done && world_.success;
  const bool judge_now = opt_.sim_feedback && now + dt - last_judgment_ >= opt_.feedback_period_s - 1e-9;
  const int res = opt_.task.resolution;
  for (int id : agents_) {
    const double r = sr.rewards.count(id) ? sr.rewards.at(id) : 0.0;
    if (auto d = drivers_.find(id); d != drivers_.end()) {
      if (judge_now) {
        // Stamped relative to the episode start on the session clock.
        const double origin = last_judgment_ - judge_reference_[id].elapsed;
        if (auto e = feedback::simulated_feedback(opt_.task.task, judge_reference_[id], world_, opt_.reaction_delay_s,
                                                  id, origin)) {
          const feedback::FeedbackEvent ev = feedback::make_event(e->value, std::max(e->t_feedback, last_feedback_t_),
                                                                  e->source, id);
          last_feedback_t_ = ev.t_feedback;
          d->second->feedback(ev);
          if (opt_.recorder) {
            opt_.recorder->append("feedback", ev.t_feedback,
                                  {{"agent", id}, {"value", ev.value}, {"source", feedback::to_string(ev.source)}});
          }
        }
        judge_reference_[id] = world_;
      }
      d->second->observe(env::render_view(world_, id, opt_.task.view, res, res), executed[id], r, terminal, t_obs);
    }
    if (opt_.recorder) {
      opt_.recorder->append("steps", t_obs,
                            {{"agent", id}, {"action", executed[id]}, {"reward", r}, {"controlled", controller_.contains(id)}});
    }
  }
  if (judge_now) last_judgment_ = now + dt;
  for (auto& [cid, c] : clients_) c.out->send(opt_.match_id, frame_for(cid, false));
  if (world_.done) {
    ++episode_;
    start_episode(t_obs);
  }
}

std::optional<int> MatchInstance::view_agent(const Client& c) const {
  if (c.role.kind == RoleKind::Server) return std::nullopt;
  if (c.role.kind == RoleKind::Player || c.role.kind == RoleKind::AIAgent) return c.role.bound_agent;
  return c.selected;
}

StateFrame MatchInstance::frame_for(ClientId id, bool snapshot) const {
  const Client& c = clients_.at(id);
  StateFrame f;
  f.tick = tick_;
  f.snapshot = snapshot;
  f.episode = episode_;
  f.elapsed = world_.elapsed;
  const bool full = c.role.kind == RoleKind::Server;
  const env::ViewKind view = full ? env::ViewKind::TopDownFull : opt_.task.view;
  const std::optional<int> agent = view_agent(c);
  f.view = env::to_string(view);
  const Visibility vis = visibility(world_, agent, view);
  if (world_.arena) {
    const auto& arena = *world_.arena;
    f.blocks_w = arena.blocks_w();
    f.blocks_h = arena.blocks_h();
    f.cells.resize(static_cast<std::size_t>(f.blocks_w * f.blocks_h));
    for (int by = 0; by < f.blocks_h; ++by) {
      for (int bx = 0; bx < f.blocks_w; ++bx) {
        const auto i = static_cast<std::size_t>(arena.block_index({bx, by}));
        f.cells[i] = !vis.blocks[i] ? '?' : (arena.is_wall(bx, by) ? '#' : '.');
      }
    }
    for (const auto& a : world_.agents) {
      if (agent == a.id || vis.point(a.pos)) {
        f.entities.push_back({a.id, "agent", team_code(a.team), a.pos.x, a.pos.y, a.heading, a.active});
      }
    }
    if (world_.task() == env::TaskKind::FindTreasure && vis.point(world_.treasure)) {
      f.entities.push_back({0, "treasure", 2, world_.treasure.x, world_.treasure.y, 0.0, true});
    }
    f.score = world_.success ? 1 : 0;
  } else {
    for (std::size_t i = 0; i < world_.pins.size(); ++i) {
      const auto& p = world_.pins[i];
      f.entities.push_back({static_cast<int>(i), "pin", 2, p.pos.x, p.pos.y, 0.0, p.standing});
    }
    f.entities.push_back({0, "ball", 2, world_.ball.pos.x, world_.ball.pos.y, 0.0, true});
    f.score = world_.total_pins;
  }
  f.done = world_.done;
  f.success = world_.success;
  for (const auto& [agent_id, ctl] : controller_) f.controlled.push_back(agent_id);
  return f;
}

std::uint64_t MatchInstance::state_hash() const {
  std::ostringstream os;
  os.precision(17);
  os << tick_ << '|' << episode_ << '|' << world_.elapsed << '|' << world_.episode_step << '|' << world_.treasure.x
     << ',' << world_.treasure.y << '|' << world_.total_pins << '|' << world_.roll_index << '|' << world_.rng.serialize();
  for (const auto& a : world_.agents) os << '|' << a.id << ':' << a.pos.x << ',' << a.pos.y << ',' << a.heading << ',' << a.active;
  for (const auto& p : world_.pins) os << '|' << p.standing;
  for (const auto& [id, c] : clients_) {
    os << "|c" << id << ':' << static_cast<int>(c.role.kind) << ',' << c.role.bound_agent.value_or(-1) << ','
       << c.selected.value_or(-1);
  }
  for (const auto& [a, c] : controller_) os << "|k" << a << ':' << c;
  for (const auto& [a, v] : teleop_) {
    os << "|t" << a;
    for (double x : v) os << ',' << x;
  }
  for (const auto& [id, d] : drivers_) {
    const auto s = d->stats();
    os << "|d" << id << ':' << s.steps << ',' << s.updates << ',' << s.feedback_events;
  }
  return std::hash<std::string>{}(os.str());
}

std::map<int, learner::RunnerStats> MatchInstance::stats() const {
  std::map<int, learner::RunnerStats> out;
  for (const auto& [id, d] : drivers_) out[id] = d->stats();
  return out;
}

MatchHost::MatchHost(MatchOptions opt) : id_(opt.match_id), match_(std::make_unique<MatchInstance>(std::move(opt))) {
  summary_ = match_->summary();
}

MatchHost::~MatchHost() { stop(); }

void MatchHost::post(std::function<void(MatchInstance&)> fn) {
  if (!running_) {
    std::lock_guard lock(mutex_);
    fn(*match_);
    summary_ = match_->summary();
    return;
  }
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(fn));
  }
  cv_.notify_all();
}

void MatchHost::tick(double now) {
  std::lock_guard lock(mutex_);
  match_->tick(now);
  summary_ = match_->summary();
}

MatchSummary MatchHost::summary() const {
  std::lock_guard lock(mutex_);
  return summary_;
}

void MatchHost::start(std::function<double()> clock) {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this, clock = std::move(clock)] { loop(clock); });
}

void MatchHost::stop() {
  if (!running_.exchange(false)) return;
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void MatchHost::loop(std::function<double()> clock) {
  const double dt = match_->world().config.decision_dt();
  double next = clock() + dt;
  std::unique_lock lock(mutex_);
  while (running_) {
    while (!queue_.empty()) {
      auto fn = std::move(queue_.front());
      queue_.pop_front();
      fn(*match_);
    }
    const double now = clock();
    if (now >= next) {
      match_->tick(now);
      summary_ = match_->summary();
      next += dt;
      if (clock() > next + dt) next = clock() + dt;  // fell behind: skip rather than burst
      continue;
    }
    cv_.wait_for(lock, std::chrono::duration<double>(next - now), [&] { return !running_ || !queue_.empty(); });
  }
  while (!queue_.empty()) {
    auto fn = std::move(queue_.front());
    queue_.pop_front();
    fn(*match_);
  }
}

}  // namespace crew::net
