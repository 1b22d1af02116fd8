#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "crew/net/clock_sync.hpp"
#include "crew/net/match.hpp"

namespace crew::net {

// Transport-independent server core. A connection is opened with its
// Outbox, fed complete payloads, and closed when receive() returns false.
//
// Handshake: Hello -> MatchList; JoinMatch -> AssignRole + snapshot.
// The server pings each client; ClockPong replies feed a per-client
// ClockSync whose estimate corrects client timestamps.
class Lobby {
 public:
  explicit Lobby(std::function<double()> clock, std::size_t sync_k = 10);
  ~Lobby();

  // Matches are fixed after construction of the server.
  void add_match(MatchOptions opt);
  void start_all();
  void stop_all();
  MatchHost* find(const std::string& match_id);
  std::vector<MatchSummary> matches() const;

  ClientId open(std::shared_ptr<Outbox> out);
  // False: the connection must be closed (after flushing its outbox).
  bool receive(ClientId c, std::string_view payload);
  bool receive(ClientId c, const Envelope& e);
  void close(ClientId c);
  // Sends ClockPing to every client that has said Hello.
  void ping_all();
  std::optional<double> clock_offset(ClientId c) const;
  std::size_t connections() const;
  double now() const { return clock_(); }

 private:
  struct Conn {
    std::shared_ptr<Outbox> out;
    std::string name;
    bool hello = false;
    std::string match;
    std::map<std::string, std::uint64_t> last_seq;
    ClockSync sync;
    bool awaiting_pong = false;
  };

  bool fail(Conn& c, ErrorCode code, const std::string& text);
  void leave(ClientId id, Conn& c);

  std::function<double()> clock_;
  std::size_t sync_k_;
  std::vector<std::unique_ptr<MatchHost>> hosts_;
  mutable std::mutex mutex_;
  std::map<ClientId, Conn> conns_;
  ClientId next_id_ = 1;
};

}  // namespace crew::net
