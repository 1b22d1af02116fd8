#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "crew/net/session.hpp"

namespace crew::net {

// TCP front end for a Lobby. One port speaks three framings, told apart by
// the first four bytes:
//   "GET " + WebSocket upgrade: one protocol payload per WebSocket message;
//   "GET " otherwise: static files from static_dir;
//   anything else: raw length-prefixed frames.
class Server {
 public:
  struct Options {
    std::string bind = "127.0.0.1";
    unsigned short port = 0;  // 0: ephemeral
    std::filesystem::path static_dir;
    double ping_interval_s = 0.5;
    int threads = 2;
  };

  // Throws std::system_error when the address cannot be bound.
  Server(Lobby& lobby, Options opt);
  ~Server();

  unsigned short port() const;
  void run();   // returns at once; I/O runs on background threads
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// "host:port" or ":port" or "port".
std::pair<std::string, unsigned short> parse_bind(const std::string& text);

}  // namespace crew::net
