// core/src/error.cpp

// Copyright 2026  ArrayDiar Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "arraydiar/error.hpp"

namespace arraydiar {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "missing-file";
    case ErrorCode::kMalformedFile: return "malformed-file";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kUnwritablePath: return "unwritable-path";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNumericFailure: return "numeric-failure";
  }
  return "unknown";
}

}  // namespace arraydiar
