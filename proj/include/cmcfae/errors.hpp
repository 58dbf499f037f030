#pragma once

#include <stdexcept>
#include <string>

namespace cmcfae {

/// Shape or dimensionality disagreement between operands.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated a documented precondition.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

/// A numeric routine failed to reach its accuracy target or produced
/// non-finite values.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed external data (file headers, serialized payloads).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cmcfae
