// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cergo {

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A code that does not denote an element of the active group, or a
/// coordinate vector whose code cannot be represented.
class malformed_element : public error {
 public:
  using error::error;
};

/// Breadth-first norm search gave up at the configured radius cap.
class radius_exceeded : public error {
 public:
  radius_exceeded(std::uint64_t code, std::uint32_t cap)
      : error("element " + std::to_string(code) + " not reached within radius " +
              std::to_string(cap)),
        code_(code),
        cap_(cap) {}

  std::uint64_t code() const noexcept { return code_; }
  std::uint32_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t code_;
  std::uint32_t cap_;
};

class domain_error : public error {
 public:
  using error::error;
};

class precondition_error : public error {
 public:
  using error::error;
};

class validation_error : public error {
 public:
  using error::error;
};

/// Base of the errors that signal a desk-scale limit rather than a
/// mathematical impossibility.
class desk_limit : public error {
 public:
  using error::error;
};

class search_exhausted : public desk_limit {
 public:
  explicit search_exhausted(std::uint64_t cap)
      : desk_limit("no set with canonical index <= " + std::to_string(cap) +
                   " satisfies the two-sided invariance bound"),
        cap_(cap) {}

  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t cap_;
};

class horizon_exceeded : public desk_limit {
 public:
  horizon_exceeded(std::string const& what, std::uint64_t horizon)
      : desk_limit(what + " (horizon " + std::to_string(horizon) + ")"),
        horizon_(horizon) {}

  std::uint64_t horizon() const noexcept { return horizon_; }

 private:
  std::uint64_t horizon_;
};

class complexity_limit : public desk_limit {
 public:
  using desk_limit::desk_limit;
};

/// An enumerator of an effectively open set ran out of pieces before a
/// measure threshold was met.
class enumeration_too_short : public error {
 public:
  using error::error;
};

}  // namespace cergo
