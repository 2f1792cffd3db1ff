// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/error.hpp"
#include "dexteach/types.hpp"

namespace dexteach {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateHand: return "DegenerateHand";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BadRate: return "BadRate";
    case ErrorCode::NonFiniteTarget: return "NonFiniteTarget";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::NoSession: return "NoSession";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

std::string_view finger_name(FingerId f) {
  switch (f) {
    case FingerId::Index: return "index";
    case FingerId::Middle: return "middle";
    case FingerId::Ring: return "ring";
    case FingerId::Thumb: return "thumb";
  }
  return "unknown";
}

bool all_finite(const JointVector& q) { return q.allFinite(); }

}  // namespace dexteach
