#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "crew/feedback/feedback.hpp"

// Wire format. A frame is a 4-byte big-endian unsigned payload length
// followed by that many bytes of UTF-8 JSON:
//   {"type": <variant name>, "match": <match id, "" outside a match>,
//    "seq": <per-sender sequence number>, "body": {...}}
// Body fields per type are listed next to each struct. Times are seconds.
namespace crew::net {

inline constexpr std::uint32_t kMaxFrameBytes = 1u << 20;

enum class ErrorCode { BadFrame, BadMessage, BadSequence, NoSuchMatch, NoSuchAgent, AgentBusy, NotJoined, Forbidden };
std::string to_string(ErrorCode c);
ErrorCode parse_error_code(const std::string& s);

enum class RoleKind { Player, Viewer, Server, AIAgent };
std::string to_string(RoleKind r);
RoleKind parse_role_kind(const std::string& s);

// {"kind": "Player" | "Viewer" | "Server" | "AIAgent", "agent": int | null}
struct Role {
  RoleKind kind = RoleKind::Viewer;
  std::optional<int> bound_agent;
  bool operator==(const Role&) const = default;
};

// {"client_name": string}
struct Hello {
  std::string client_name;
  bool operator==(const Hello&) const = default;
};

// {"match_id", "task", "agents": int, "tick": int, "clients": int}
struct MatchSummary {
  std::string match_id;
  std::string task;
  int agents = 0;
  std::int64_t tick = 0;
  int clients = 0;
  bool operator==(const MatchSummary&) const = default;
};

// {"matches": [MatchSummary]}
struct MatchList {
  std::vector<MatchSummary> matches;
  bool operator==(const MatchList&) const = default;
};

// {"match_id": string}
struct JoinMatch {
  std::string match_id;
  bool operator==(const JoinMatch&) const = default;
};

// {"role": Role}. Client to server: request; server to client: grant.
struct AssignRole {
  Role role;
  bool operator==(const AssignRole&) const = default;
};

// {"agent_id": int}
struct SelectAgent {
  int agent_id = 0;
  bool operator==(const SelectAgent&) const = default;
};

// {"id", "kind": "agent" | "treasure" | "pin" | "ball", "team": int, "x", "y", "heading", "active": bool}
struct EntityState {
  int id = 0;
  std::string kind;
  int team = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  bool active = true;
  bool operator==(const EntityState&) const = default;
};

// {"tick", "snapshot": bool, "episode", "elapsed", "view", "blocks_w", "blocks_h",
//  "cells": string of blocks_w * blocks_h chars, row-major from y = 0:
//  '#' wall, '.' open, '?' not revealed to this client,
//  "entities": [EntityState], "score": int, "done": bool, "success": bool,
//  "controlled": [agent ids under teleoperation]}
struct StateFrame {
  std::int64_t tick = 0;
  bool snapshot = false;
  int episode = 0;
  double elapsed = 0.0;
  std::string view;
  int blocks_w = 0;
  int blocks_h = 0;
  std::string cells;
  std::vector<EntityState> entities;
  int score = 0;
  bool done = false;
  bool success = false;
  std::vector<int> controlled;
  bool operator==(const StateFrame&) const = default;
};

// {"agent_id", "values": [number], "client_time"}
struct ActionMsg {
  int agent_id = 0;
  std::vector<double> values;
  double client_time = 0.0;
  bool operator==(const ActionMsg&) const = default;
};

// {"value", "t_feedback", "source", "target_agent"}; t_feedback on the sender's clock.
struct FeedbackMsg {
  feedback::FeedbackEvent event;
  bool operator==(const FeedbackMsg&) const = default;
};

// {"agent_id", "on": bool}
struct TakeControl {
  int agent_id = 0;
  bool on = false;
  bool operator==(const TakeControl&) const = default;
};

// {"t1"}: client send time.
struct ClockPing {
  double t1 = 0.0;
  bool operator==(const ClockPing&) const = default;
};

// {"t1", "t2", "t3"}: t2 server receive time, t3 server send time.
struct ClockPong {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  bool operator==(const ClockPong&) const = default;
};

// {"code", "text"}
struct Error {
  ErrorCode code = ErrorCode::BadMessage;
  std::string text;
  bool operator==(const Error&) const = default;
};

// {"stream", "client_time", "payload"}: a sample from an external recorder
// process; recorded under "ext.<stream>" after clock correction.
struct ExternalSample {
  std::string stream;
  double client_time = 0.0;
  nlohmann::json payload;
  bool operator==(const ExternalSample&) const = default;
};

using Message = std::variant<Hello, MatchList, JoinMatch, AssignRole, SelectAgent, StateFrame, ActionMsg, FeedbackMsg,
                             TakeControl, ClockPing, ClockPong, Error, ExternalSample>;

std::string type_name(const Message& m);

struct Envelope {
  std::string match_id;
  std::uint64_t seq = 0;
  Message body;
  bool operator==(const Envelope&) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

nlohmann::json to_json(const Envelope& e);
// Throws ProtocolError(BadMessage) for anything but a well-formed message.
Envelope envelope_from_json(const nlohmann::json& j);

std::string encode_payload(const Envelope& e);
Envelope decode_payload(std::string_view payload);
// Length-prefixed frame.
std::string encode(const Envelope& e);

// Incremental frame splitter for a byte stream.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::uint32_t max_frame = kMaxFrameBytes) : max_frame_(max_frame) {}
  void feed(const char* data, std::size_t n) { buffer_.append(data, n); }
  void feed(std::string_view s) { buffer_.append(s); }
  // Next complete frame's payload, if any. Throws ProtocolError(BadFrame)
  // for an oversized or empty frame.
  std::optional<std::string> next_payload();
  // next_payload() decoded.
  std::optional<Envelope> next();
  std::size_t buffered() const { return buffer_.size() - pos_; }

 private:
  std::string buffer_;
  std::size_t pos_ = 0;
  std::uint32_t max_frame_;
};

}  // namespace crew::net
