#pragma once

#include <stdexcept>
#include <string>

namespace fvgm {

/// Malformed or inconsistent user input (files, flags, instances).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation would exceed a configured resource cap (memo budget, enumeration guard).
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph-structure violation such as a cycle in a DAG.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Variables presented to a solver in an order it cannot process.
class OrderingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fvgm
