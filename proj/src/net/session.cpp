#include "crew/net/session.hpp"

#include <algorithm>

namespace crew::net {

Lobby::Lobby(std::function<double()> clock, std::size_t sync_k) : clock_(std::move(clock)), sync_k_(sync_k) {}

Lobby::~Lobby() { stop_all(); }

void Lobby::add_match(MatchOptions opt) {
  if (find(opt.match_id)) throw std::invalid_argument("duplicate match id " + opt.match_id);
  hosts_.push_back(std::make_unique<MatchHost>(std::move(opt)));
}

void Lobby::start_all() {
  for (auto& h : hosts_) h->start(clock_);
}

void Lobby::stop_all() {
  for (auto& h : hosts_) h->stop();
}

MatchHost* Lobby::find(const std::string& match_id) {
  for (auto& h : hosts_) {
    if (h->id() == match_id) return h.get();
  }
  return nullptr;
}

std::vector<MatchSummary> Lobby::matches() const {
  std::vector<MatchSummary> out;
  for (const auto& h : hosts_) out.push_back(h->summary());
  return out;
}

ClientId Lobby::open(std::shared_ptr<Outbox> out) {
  std::lock_guard lock(mutex_);
  const ClientId id = next_id_++;
  conns_.emplace(id, Conn{std::move(out), {}, false, {}, {}, ClockSync(sync_k_)});
  return id;
}

bool Lobby::fail(Conn& c, ErrorCode code, const std::string& text) {
  c.out->send(c.match, Error{code, text});
  return false;
}

void Lobby::leave(ClientId id, Conn& c) {
  if (c.match.empty()) return;
  if (MatchHost* h = find(c.match)) h->post([id](MatchInstance& m) { m.disconnect(id); });
  c.match.clear();
}

bool Lobby::receive(ClientId id, std::string_view payload) {
  Envelope e;
  try {
    e = decode_payload(payload);
  } catch (const ProtocolError& err) {
    std::lock_guard lock(mutex_);
    auto it = conns_.find(id);
    if (it == conns_.end()) return false;
    return fail(it->second, err.code(), err.what());
  }
  return receive(id, e);
}

bool Lobby::receive(ClientId id, const Envelope& e) {
  const double now = clock_();
  std::lock_guard lock(mutex_);
  auto it = conns_.find(id);
  if (it == conns_.end()) return false;
  Conn& c = it->second;

  auto& last = c.last_seq[e.match_id];
  if (e.seq <= last) {
    return fail(c, ErrorCode::BadSequence,
                "seq " + std::to_string(e.seq) + " after " + std::to_string(last) + " for match '" + e.match_id + "'");
  }
  last = e.seq;

  if (const auto* h = std::get_if<Hello>(&e.body)) {
    c.hello = true;
    c.name = h->client_name;
    c.out->send("", MatchList{matches()});
    c.out->send("", ClockPing{now});
    c.awaiting_pong = true;
    return true;
  }
  if (!c.hello) return fail(c, ErrorCode::NotJoined, "send Hello first");

  if (const auto* p = std::get_if<ClockPing>(&e.body)) {
    c.out->send(e.match_id, ClockPong{p->t1, now, clock_()});
    return true;
  }
  if (const auto* p = std::get_if<ClockPong>(&e.body)) {
    // Server-initiated exchange: t1, t4 on the server clock; t2, t3 on the client's.
    c.sync.add({p->t1, p->t2, p->t3, now});
    c.awaiting_pong = false;
    if (!c.match.empty()) {
      if (MatchHost* h = find(c.match)) {
        h->post([id, off = c.sync.offset()](MatchInstance& m) { m.set_clock_offset(id, off); });
      }
    }
    return true;
  }
  if (const auto* j = std::get_if<JoinMatch>(&e.body)) {
    MatchHost* h = find(j->match_id);
    if (!h) {
      c.out->send(e.match_id, Error{ErrorCode::NoSuchMatch, "no match '" + j->match_id + "'"});
      return true;
    }
    leave(id, c);
    c.match = j->match_id;
    h->post([id, out = c.out, name = c.name, off = c.sync.offset()](MatchInstance& m) {
      m.connect(id, out, name);
      m.set_clock_offset(id, off);
    });
    return true;
  }
  if (std::holds_alternative<AssignRole>(e.body) || std::holds_alternative<SelectAgent>(e.body) ||
      std::holds_alternative<ActionMsg>(e.body) || std::holds_alternative<FeedbackMsg>(e.body) ||
      std::holds_alternative<TakeControl>(e.body) || std::holds_alternative<ExternalSample>(e.body)) {
    if (c.match.empty() || e.match_id != c.match) {
      c.out->send(e.match_id, Error{ErrorCode::NotJoined, "not joined to match '" + e.match_id + "'"});
      return true;
    }
    MatchHost* h = find(c.match);
    h->post([id, msg = e.body, now](MatchInstance& m) { m.handle(id, msg, now); });
    return true;
  }
  return fail(c, ErrorCode::BadMessage, type_name(e.body) + " is not accepted from clients");
}

void Lobby::close(ClientId id) {
  std::lock_guard lock(mutex_);
  auto it = conns_.find(id);
  if (it == conns_.end()) return;
  leave(id, it->second);
  conns_.erase(it);
}

void Lobby::ping_all() {
  std::lock_guard lock(mutex_);
  for (auto& [id, c] : conns_) {
    if (!c.hello) continue;
    if (c.awaiting_pong) c.sync.mark_timeout();
    c.awaiting_pong = true;
    c.out->send(c.match, ClockPing{clock_()});
  }
}

std::optional<double> Lobby::clock_offset(ClientId id) const {
  std::lock_guard lock(mutex_);
  auto it = conns_.find(id);
  return it == conns_.end() ? std::nullopt : it->second.sync.offset();
}

std::size_t Lobby::connections() const {
  std::lock_guard lock(mutex_);
  return conns_.size();
}

}  // namespace crew::net
