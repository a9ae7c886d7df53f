#pragma once

#include <stdexcept>
#include <string>

namespace tileplan {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace tileplan
