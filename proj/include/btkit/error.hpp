#pragma once

#include <stdexcept>
#include <string>

namespace btkit {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace btkit
