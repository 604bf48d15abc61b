#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace amod {

/// Exact money and rate arithmetic. Rendered to decimals only when written out.
using Money = boost::multiprecision::cpp_rational;

using Round = std::int64_t;
using RequestId = std::int64_t;
using VehicleId = std::int32_t;

/// Bad argument supplied by a caller (out-of-bounds cell, unknown id, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not valid in the current state (duplicate admission, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Instance exceeds what an exact solver is configured to handle.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inline invariant check that stays on in release builds.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

#define AMOD_CHECK(cond, msg)                                                   \
  do {                                                                          \
    if (!(cond))                                                                \
      throw ::amod::InvariantViolation(std::string("invariant violated: ") +    \
                                       (msg) + " [" #cond "]");                 \
  } while (0)

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash of (seed, entity keys...). Used to derive per-entity random streams so
/// that changing one entity never reshuffles the draws of another.
inline std::uint64_t keyed_hash(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

std::string to_string(const Money& m);
double to_double(const Money& m);
Money parse_money(const std::string& s);

}  // namespace amod
