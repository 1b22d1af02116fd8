#pragma once

#include <deque>
#include <sstream>
#include <string>
#include <vector>

namespace crew::testing {

// Independent flood fill over the serialized text form, so the oracle does
// not share code with MazeGrid::open_neighbors.
inline bool connected_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int w = 0, h = 0;
  in >> tag >> w >> h;
  std::vector<std::string> rows(static_cast<std::size_t>(h));
  for (auto& r : rows) in >> r;
  auto bits = [&](int x, int y) {
    const char c = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
    return c <= '9' ? c - '0' : c - 'a' + 10;
  };
  std::vector<char> seen(static_cast<std::size_t>(w * h), 0);
  std::deque<std::pair<int, int>> q{{0, 0}};
  seen[0] = 1;
  int count = 1;
  const int dx[4] = {0, 1, 0, -1};
  const int dy[4] = {-1, 0, 1, 0};
  while (!q.empty()) {
    auto [x, y] = q.front();
    q.pop_front();
    for (int d = 0; d < 4; ++d) {
      if (bits(x, y) & (1 << d)) continue;
      const int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) return false;  // open boundary
      auto& s = seen[static_cast<std::size_t>(ny * w + nx)];
      if (!s) {
        s = 1;
        ++count;
        q.push_back({nx, ny});
      }
    }
  }
  return count == w * h;
}


}  // namespace crew::testing
