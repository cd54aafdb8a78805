#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#define YM_CHECK(cond, msg)                                  \
  do {                                                       \
    if (!(cond)) throw std::runtime_error(std::string(msg)); \
  } while (0)

namespace ym {

using std::size_t;
using std::span;

// Error raised when an input violates an operation's preconditions.
struct invalid_input : std::runtime_error {
  explicit invalid_input(const std::string& what) : std::runtime_error(what) {}
};

// Error raised when a numeric result is non-finite or out of contract.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Error raised for unreadable / incompatible files.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ym
