#pragma once

#include "amod/common.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace amod {

struct Cell {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Grid city parameters. Speed is an exact fraction of a block per round.
struct GridConfig {
  int rows = 21;
  int cols = 21;
  int speed_num = 1;
  int speed_den = 2;
  Money cost_per_block = 1;

  void validate() const;
};

/// A vehicle's location. When `heading` is set the vehicle is between `at`
/// and `heading`, `progress_units / speed_den` of the way along that edge,
/// and is committed to finishing the edge.
struct RoutePosition {
  Cell at;
  std::optional<Cell> heading;
  std::int64_t progress_units = 0;

  friend bool operator==(const RoutePosition&, const RoutePosition&) = default;
};

struct Motion {
  RoutePosition position;
  std::int64_t units_traveled = 0;  // in 1/speed_den blocks
  std::size_t stops_reached = 0;    // leading stops of the route now visited
};

class Grid {
 public:
  explicit Grid(GridConfig config);

  const GridConfig& config() const { return config_; }
  int rows() const { return config_.rows; }
  int cols() const { return config_.cols; }
  bool contains(Cell c) const;
  Cell center() const { return {config_.rows / 2, config_.cols / 2}; }

  /// Length of a shortest 4-connected path. The lattice has no obstacles, so
  /// this is the Manhattan distance; `astar_distance` is the search-based
  /// route to the same value and is kept for validation.
  std::int64_t shortest_distance(Cell a, Cell b) const;
  std::int64_t astar_distance(Cell a, Cell b) const;

  /// First step of the canonical shortest path: rows first, then columns.
  Cell next_step(Cell from, Cell to) const;
  std::vector<Cell> path(Cell from, Cell to) const;

  /// Total blocks from the position's anchor through every stop in order.
  /// The fraction of the edge in progress is excluded; it is common to every
  /// route from the same position and cancels in marginal-cost differences.
  std::int64_t route_blocks(const RoutePosition& pos, std::span<const Cell> stops) const;

  /// Remaining travel to stop `target` in 1/speed_den blocks, including the
  /// unfinished part of the current edge.
  std::int64_t units_to_stop(const RoutePosition& pos, std::span<const Cell> stops,
                             std::size_t target) const;

  /// Rounds needed to reach stop `target` (ceil of distance / speed).
  Round path_eta(const RoutePosition& pos, std::span<const Cell> stops,
                 std::size_t target) const;

  /// Converts a travel amount in 1/speed_den blocks to whole rounds, rounding up.
  Round units_to_rounds(std::int64_t units) const;

  /// Moves the vehicle `dt` rounds along the stops. Stops coinciding with the
  /// current cell are consumed before moving; the vehicle halts at the last stop.
  Motion advance(const RoutePosition& pos, std::span<const Cell> stops, Round dt) const;

  Cell anchor(const RoutePosition& pos) const { return pos.heading ? *pos.heading : pos.at; }
  std::int64_t units_per_block() const { return config_.speed_den; }

 private:
  void require(Cell c) const;

  GridConfig config_;
};

}  // namespace amod
