#pragma once

#include "amod/model.hpp"
#include "amod/world.hpp"

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

namespace amod {

/// A dispatch policy driven once per round by the simulator.
class Mechanism {
 public:
  virtual ~Mechanism() = default;

  virtual std::string_view name() const = 0;

  /// Handles this round's arrivals together with any requests the mechanism
  /// is still holding. During the drain phase `arrivals` is empty and the
  /// mechanism should release anything it batches.
  virtual void on_round(World& world, Round now, std::vector<Request> arrivals, bool draining) = 0;

  /// Requests quoted/held but neither assigned nor closed.
  virtual std::size_t open_requests() const = 0;

  /// Independent copy of the policy state, for branching a simulation.
  virtual std::unique_ptr<Mechanism> clone() const = 0;
};

}  // namespace amod
