#include "crew/net/protocol.hpp"

#include <array>
#include <cmath>

using nlohmann::json;

namespace crew::net {

namespace {

constexpr std::array<const char*, 8> kErrorNames{"BadFrame", "BadMessage", "BadSequence", "NoSuchMatch",
                                                 "NoSuchAgent", "AgentBusy", "NotJoined", "Forbidden"};
constexpr std::array<const char*, 4> kRoleNames{"Player", "Viewer", "Server", "AIAgent"};
constexpr std::array<const char*, 13> kTypeNames{"Hello",      "MatchList",   "JoinMatch", "AssignRole",   "SelectAgent",
                                                 "StateFrame", "ActionMsg",   "FeedbackMsg", "TakeControl", "ClockPing",
                                                 "ClockPong",  "Error",       "ExternalSample"};
static_assert(kTypeNames.size() == std::variant_size_v<Message>);

[[noreturn]] void bad(const std::string& what) { throw ProtocolError(ErrorCode::BadMessage, what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object()) bad("expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field ") + key);
  return *it;
}

double num(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) bad(std::string(key) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(std::string(key) + " must be finite");
  return d;
}

std::int64_t integer(const json& j, const char* key) {
  const json& v = field(j, key);
  if (v.is_number_unsigned()) {
    if (v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) bad(std::string(key) + " out of range");
    return static_cast<std::int64_t>(v.get<std::uint64_t>());
  }
  if (!v.is_number_integer()) bad(std::string(key) + " must be an integer");
  return v.get<std::int64_t>();
}

int int32(const json& j, const char* key) {
  const std::int64_t v = integer(j, key);
  if (v < INT32_MIN || v > INT32_MAX) bad(std::string(key) + " out of range");
  return static_cast<int>(v);
}

std::string str(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) bad(std::string(key) + " must be a string");
  return v.get<std::string>();
}

bool boolean(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_boolean()) bad(std::string(key) + " must be a boolean");
  return v.get<bool>();
}

const json& array(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_array()) bad(std::string(key) + " must be an array");
  return v;
}

json role_json(const Role& r) {
  return {{"kind", to_string(r.kind)}, {"agent", r.bound_agent ? json(*r.bound_agent) : json(nullptr)}};
}

Role role_from(const json& j) {
  Role r;
  try {
    r.kind = parse_role_kind(str(j, "kind"));
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  const json& a = field(j, "agent");
  if (!a.is_null()) r.bound_agent = int32(j, "agent");
  return r;
}

json body_json(const Message& m) {
  return std::visit(
      [](const auto& b) -> json {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Hello>) {
          return {{"client_name", b.client_name}};
        } else if constexpr (std::is_same_v<T, MatchList>) {
          json a = json::array();
          for (const auto& s : b.matches) {
            a.push_back({{"match_id", s.match_id}, {"task", s.task}, {"agents", s.agents}, {"tick", s.tick},
                         {"clients", s.clients}});
          }
          return {{"matches", a}};
        } else if constexpr (std::is_same_v<T, JoinMatch>) {
          return {{"match_id", b.match_id}};
        } else if constexpr (std::is_same_v<T, AssignRole>) {
          return {{"role", role_json(b.role)}};
        } else if constexpr (std::is_same_v<T, SelectAgent>) {
          return {{"agent_id", b.agent_id}};
        } else if constexpr (std::is_same_v<T, StateFrame>) {
          json ents = json::array();
          for (const auto& e : b.entities) {
            ents.push_back({{"id", e.id}, {"kind", e.kind}, {"team", e.team}, {"x", e.x}, {"y", e.y},
                            {"heading", e.heading}, {"active", e.active}});
          }
          return {{"tick", b.tick},         {"snapshot", b.snapshot}, {"episode", b.episode},   {"elapsed", b.elapsed},
                  {"view", b.view},         {"blocks_w", b.blocks_w}, {"blocks_h", b.blocks_h}, {"cells", b.cells},
                  {"entities", ents},       {"score", b.score},       {"done", b.done},         {"success", b.success},
                  {"controlled", b.controlled}};
        } else if constexpr (std::is_same_v<T, ActionMsg>) {
          return {{"agent_id", b.agent_id}, {"values", b.values}, {"client_time", b.client_time}};
        } else if constexpr (std::is_same_v<T, FeedbackMsg>) {
          return {{"value", b.event.value},
                  {"t_feedback", b.event.t_feedback},
                  {"source", feedback::to_string(b.event.source)},
                  {"target_agent", b.event.target_agent}};
        } else if constexpr (std::is_same_v<T, TakeControl>) {
          return {{"agent_id", b.agent_id}, {"on", b.on}};
        } else if constexpr (std::is_same_v<T, ClockPing>) {
          return {{"t1", b.t1}};
        } else if constexpr (std::is_same_v<T, ClockPong>) {
          return {{"t1", b.t1}, {"t2", b.t2}, {"t3", b.t3}};
        } else if constexpr (std::is_same_v<T, Error>) {
          return {{"code", to_string(b.code)}, {"text", b.text}};
        } else {
          static_assert(std::is_same_v<T, ExternalSample>);
          return {{"stream", b.stream}, {"client_time", b.client_time}, {"payload", b.payload}};
        }
      },
      m);
}

Message body_from(const std::string& type, const json& b) {
  if (!b.is_object()) bad("body must be an object");
  if (type == "Hello") return Hello{str(b, "client_name")};
  if (type == "MatchList") {
    MatchList m;
    for (const auto& s : array(b, "matches")) {
      m.matches.push_back({str(s, "match_id"), str(s, "task"), int32(s, "agents"), integer(s, "tick"),
                           int32(s, "clients")});
    }
    return m;
  }
  if (type == "JoinMatch") return JoinMatch{str(b, "match_id")};
  if (type == "AssignRole") return AssignRole{role_from(field(b, "role"))};
  if (type == "SelectAgent") return SelectAgent{int32(b, "agent_id")};
  if (type == "StateFrame") {
    StateFrame f;
    f.tick = integer(b, "tick");
    f.snapshot = boolean(b, "snapshot");
    f.episode = int32(b, "episode");
    f.elapsed = num(b, "elapsed");
    f.view = str(b, "view");
    f.blocks_w = int32(b, "blocks_w");
    f.blocks_h = int32(b, "blocks_h");
    f.cells = str(b, "cells");
    if (f.blocks_w < 0 || f.blocks_h < 0 ||
        f.cells.size() != static_cast<std::size_t>(f.blocks_w) * static_cast<std::size_t>(f.blocks_h)) {
      bad("cells does not match blocks_w x blocks_h");
    }
    for (char c : f.cells) {
      if (c != '#' && c != '.' && c != '?') bad("invalid cell character");
    }
    for (const auto& e : array(b, "entities")) {
      f.entities.push_back({int32(e, "id"), str(e, "kind"), int32(e, "team"), num(e, "x"), num(e, "y"),
                            num(e, "heading"), boolean(e, "active")});
    }
    f.score = int32(b, "score");
    f.done = boolean(b, "done");
    f.success = boolean(b, "success");
    const json& c = array(b, "controlled");
    for (const auto& v : c) {
      if (!v.is_number_integer()) bad("controlled must hold integers");
      f.controlled.push_back(v.get<int>());
    }
    return f;
  }
  if (type == "ActionMsg") {
    ActionMsg a;
    a.agent_id = int32(b, "agent_id");
    for (const auto& v : array(b, "values")) {
      if (!v.is_number()) bad("values must hold numbers");
      a.values.push_back(v.get<double>());
    }
    a.client_time = num(b, "client_time");
    return a;
  }
  if (type == "FeedbackMsg") {
    FeedbackMsg f;
    f.event.value = num(b, "value");
    f.event.t_feedback = num(b, "t_feedback");
    try {
      f.event.source = feedback::parse_feedback_source(str(b, "source"));
    } catch (const std::invalid_argument& e) {
      bad(e.what());
    }
    f.event.target_agent = int32(b, "target_agent");
    return f;
  }
  if (type == "TakeControl") return TakeControl{int32(b, "agent_id"), boolean(b, "on")};
  if (type == "ClockPing") return ClockPing{num(b, "t1")};
  if (type == "ClockPong") return ClockPong{num(b, "t1"), num(b, "t2"), num(b, "t3")};
  if (type == "Error") {
    try {
      return Error{parse_error_code(str(b, "code")), str(b, "text")};
    } catch (const std::invalid_argument& e) {
      bad(e.what());
    }
  }
  if (type == "ExternalSample") return ExternalSample{str(b, "stream"), num(b, "client_time"), field(b, "payload")};
  bad("unknown message type " + type);
}

}  // namespace

std::string to_string(ErrorCode c) { return kErrorNames[static_cast<std::size_t>(c)]; }

ErrorCode parse_error_code(const std::string& s) {
  for (std::size_t i = 0; i < kErrorNames.size(); ++i) {
    if (s == kErrorNames[i]) return static_cast<ErrorCode>(i);
  }
  throw std::invalid_argument("unknown error code " + s);
}

std::string to_string(RoleKind r) { return kRoleNames[static_cast<std::size_t>(r)]; }

RoleKind parse_role_kind(const std::string& s) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (s == kRoleNames[i]) return static_cast<RoleKind>(i);
  }
  throw std::invalid_argument("unknown role " + s);
}

std::string type_name(const Message& m) { return kTypeNames[m.index()]; }

json to_json(const Envelope& e) {
  return {{"type", type_name(e.body)}, {"match", e.match_id}, {"seq", e.seq}, {"body", body_json(e.body)}};
}

Envelope envelope_from_json(const json& j) {
  Envelope e;
  e.match_id = str(j, "match");
  const json& seq = field(j, "seq");
  if (!seq.is_number_unsigned() && !(seq.is_number_integer() && seq.get<std::int64_t>() >= 0)) {
    bad("seq must be a non-negative integer");
  }
  e.seq = seq.get<std::uint64_t>();
  e.body = body_from(str(j, "type"), field(j, "body"));
  return e;
}

std::string encode_payload(const Envelope& e) {
  // Invalid UTF-8 in strings is replaced rather than thrown.
  return to_json(e).dump(-1, ' ', false, json::error_handler_t::replace);
}

Envelope decode_payload(std::string_view payload) {
  json j = json::parse(payload.begin(), payload.end(), nullptr, false);
  if (j.is_discarded()) bad("payload is not valid JSON");
  return envelope_from_json(j);
}

std::string encode(const Envelope& e) {
  const std::string p = encode_payload(e);
  if (p.size() > kMaxFrameBytes) throw ProtocolError(ErrorCode::BadFrame, "message exceeds the frame limit");
  std::string out;
  out.reserve(4 + p.size());
  const auto n = static_cast<std::uint32_t>(p.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xFF));
  out += p;
  return out;
}

std::optional<std::string> FrameDecoder::next_payload() {
  if (buffered() < 4) return std::nullopt;
  const auto* u = reinterpret_cast<const unsigned char*>(buffer_.data() + pos_);
  const std::uint32_t n =
      (std::uint32_t{u[0]} << 24) | (std::uint32_t{u[1]} << 16) | (std::uint32_t{u[2]} << 8) | std::uint32_t{u[3]};
  if (n == 0 || n > max_frame_) throw ProtocolError(ErrorCode::BadFrame, "frame length " + std::to_string(n));
  if (buffered() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string p = buffer_.substr(pos_ + 4, n);
  pos_ += 4 + n;
  if (pos_ > 65536 && pos_ * 2 > buffer_.size()) {
    buffer_.erase(0, pos_);
    pos_ = 0;
  }
  return p;
}

std::optional<Envelope> FrameDecoder::next() {
  auto p = next_payload();
  if (!p) return std::nullopt;
  return decode_payload(*p);
}

}  // namespace crew::net
