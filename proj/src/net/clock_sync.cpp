#include "crew/net/clock_sync.hpp"

#include <algorithm>
#include <stdexcept>

namespace crew::net {

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return (lo + hi) / 2.0;
}

void ClockSync::add(const ClockExchange& e) {
  offsets_.push_back(e.offset());
  while (offsets_.size() > k_) offsets_.pop_front();
  estimate_ = median({offsets_.begin(), offsets_.end()});
  stale_ = false;
}

}  // namespace crew::net
