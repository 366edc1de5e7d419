#pragma once

#include <stdexcept>
#include <string>

namespace mobiscope {

enum class errc {
  invalid_input,
  empty_input,
  out_of_region,
  io_error,
  corrupt_input,
  precondition,
  parameter,
  shape,
  degenerate,
  exclusion,
  config,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace mobiscope
