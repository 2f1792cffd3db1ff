// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dexteach {

enum class ErrorCode {
  DegenerateHand,
  NonFinite,
  BadRate,
  NonFiniteTarget,
  DegenerateSamples,
  MalformedMessage,
  UnknownType,
  NoSession,
  DuplicateName,
  IoError,
  SessionClosed,
  MalformedFrame,
  ZeroVector,
  EmptyDataset,
  BadConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dexteach
