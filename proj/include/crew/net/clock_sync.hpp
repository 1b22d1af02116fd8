#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

namespace crew::net {

// One ping/pong: requester send t1, responder receive t2, responder send t3,
// requester receive t4; t1/t4 on the requester's clock, t2/t3 on the responder's.
struct ClockExchange {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;
  // Responder clock minus requester clock, exact under symmetric delay.
  double offset() const { return ((t2 - t1) + (t3 - t4)) / 2.0; }
  double round_trip() const { return (t4 - t1) - (t3 - t2); }
};

double median(std::vector<double> v);

// Median of the last k exchange offsets.
class ClockSync {
 public:
  explicit ClockSync(std::size_t k = 10) : k_(k) {}

  void add(const ClockExchange& e);
  // Keeps the last estimate but marks it stale until the next exchange.
  void mark_timeout() { stale_ = true; }

  bool ready() const { return offsets_.size() >= k_; }
  bool stale() const { return stale_; }
  std::size_t exchanges() const { return offsets_.size(); }
  // Median over the stored exchanges; nullopt before the first one.
  std::optional<double> offset() const { return estimate_; }

 private:
  std::size_t k_;
  std::deque<double> offsets_;
  std::optional<double> estimate_;
  bool stale_ = false;
};

}  // namespace crew::net
