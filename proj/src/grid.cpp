#include "amod/grid.hpp"

#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

namespace amod {

void GridConfig::validate() const {
  if (rows <= 0 || cols <= 0) throw ConfigError("grid dimensions must be positive");
  if (speed_num <= 0 || speed_den <= 0) throw ConfigError("speed must be positive");
  if (cost_per_block <= 0) throw ConfigError("cost_per_block must be positive");
}

namespace {

GridConfig normalized(GridConfig c) {
  c.validate();
  const int g = std::gcd(c.speed_num, c.speed_den);
  c.speed_num /= g;
  c.speed_den /= g;
  return c;
}

}  // namespace

Grid::Grid(GridConfig config) : config_(normalized(std::move(config))) {}

bool Grid::contains(Cell c) const {
  return c.row >= 0 && c.col >= 0 && c.row < config_.rows && c.col < config_.cols;
}

void Grid::require(Cell c) const {
  if (!contains(c))
    throw InputError("cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                     ") outside " + std::to_string(config_.rows) + "x" +
                     std::to_string(config_.cols) + " grid");
}

std::int64_t Grid::shortest_distance(Cell a, Cell b) const {
  require(a);
  require(b);
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

std::int64_t Grid::astar_distance(Cell a, Cell b) const {
  require(a);
  require(b);
  const int w = config_.cols;
  const auto idx = [w](Cell c) { return static_cast<std::size_t>(c.row) * w + c.col; };
  const auto h = [b](Cell c) { return std::abs(c.row - b.row) + std::abs(c.col - b.col); };

  std::vector<int> g(static_cast<std::size_t>(config_.rows) * w, std::numeric_limits<int>::max());
  // (f, g, row, col): deterministic ordering on ties.
  using Node = std::tuple<int, int, int, int>;
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  g[idx(a)] = 0;
  open.emplace(h(a), 0, a.row, a.col);
  static constexpr int kDr[] = {-1, 1, 0, 0};
  static constexpr int kDc[] = {0, 0, -1, 1};
  while (!open.empty()) {
    auto [f, gc, r, c] = open.top();
    open.pop();
    const Cell cur{r, c};
    if (cur == b) return gc;
    if (gc > g[idx(cur)]) continue;
    for (int k = 0; k < 4; ++k) {
      const Cell nb{r + kDr[k], c + kDc[k]};
      if (!contains(nb)) continue;
      if (gc + 1 < g[idx(nb)]) {
        g[idx(nb)] = gc + 1;
        open.emplace(gc + 1 + h(nb), gc + 1, nb.row, nb.col);
      }
    }
  }
  throw InvariantViolation("A* found no path on a connected grid");
}

Cell Grid::next_step(Cell from, Cell to) const {
  if (from.row != to.row) return {from.row + (to.row > from.row ? 1 : -1), from.col};
  if (from.col != to.col) return {from.row, from.col + (to.col > from.col ? 1 : -1)};
  return from;
}

std::vector<Cell> Grid::path(Cell from, Cell to) const {
  require(from);
  require(to);
  std::vector<Cell> out{from};
  while (out.back() != to) out.push_back(next_step(out.back(), to));
  return out;
}

std::int64_t Grid::route_blocks(const RoutePosition& pos, std::span<const Cell> stops) const {
  std::int64_t total = 0;
  Cell cur = anchor(pos);
  for (const Cell& s : stops) {
    total += shortest_distance(cur, s);
    cur = s;
  }
  return total;
}

std::int64_t Grid::units_to_stop(const RoutePosition& pos, std::span<const Cell> stops,
                                 std::size_t target) const {
  if (target >= stops.size())
    throw InputError("target stop " + std::to_string(target) + " not on route of length " +
                     std::to_string(stops.size()));
  const std::int64_t den = config_.speed_den;
  std::int64_t units = pos.heading ? den - pos.progress_units : 0;
  Cell cur = anchor(pos);
  for (std::size_t i = 0; i <= target; ++i) {
    units += den * shortest_distance(cur, stops[i]);
    cur = stops[i];
  }
  return units;
}

Round Grid::units_to_rounds(std::int64_t units) const {
  const std::int64_t num = config_.speed_num;
  return (units + num - 1) / num;
}

Round Grid::path_eta(const RoutePosition& pos, std::span<const Cell> stops,
                     std::size_t target) const {
  return units_to_rounds(units_to_stop(pos, stops, target));
}

Motion Grid::advance(const RoutePosition& start, std::span<const Cell> stops, Round dt) const {
  if (dt < 0) throw InputError("advance: negative dt");
  Motion m{start, 0, 0};
  RoutePosition& p = m.position;
  const std::int64_t den = config_.speed_den;
  std::int64_t budget = dt * config_.speed_num;

  for (;;) {
    if (!p.heading) {
      while (m.stops_reached < stops.size() && stops[m.stops_reached] == p.at) ++m.stops_reached;
      if (m.stops_reached == stops.size()) {
        p.progress_units = 0;
        return m;
      }
      if (budget == 0) return m;
      require(stops[m.stops_reached]);
      p.heading = next_step(p.at, stops[m.stops_reached]);
      p.progress_units = 0;
    }
    if (budget == 0) return m;
    const std::int64_t need = den - p.progress_units;
    if (budget >= need) {
      budget -= need;
      m.units_traveled += need;
      p.at = *p.heading;
      p.heading.reset();
      p.progress_units = 0;
    } else {
      p.progress_units += budget;
      m.units_traveled += budget;
      return m;
    }
  }
}

std::string to_string(const Money& m) { return m.str(); }

double to_double(const Money& m) { return m.convert_to<double>(); }

Money parse_money(const std::string& s) {
  const auto dot = s.find('.');
  if (dot == std::string::npos) return Money(s);
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  boost::multiprecision::cpp_int scale = 1;
  for (std::size_t i = dot + 1; i < s.size(); ++i) scale *= 10;
  return Money(boost::multiprecision::cpp_int(digits), scale);
}

}  // namespace amod
