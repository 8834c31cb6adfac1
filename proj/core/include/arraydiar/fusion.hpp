// core/include/arraydiar/fusion.hpp

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

#pragma once

#include <map>
#include <span>
#include <string>

#include "arraydiar/annotations.hpp"

namespace arraydiar {

/// Greedy label alignment: repeatedly fix the (anchor, other) label pair
/// with maximal overlapped time. Labels of `other` left unmapped get fresh
/// ids that cannot collide with anchor labels.
std::map<std::string, std::string> greedy_map(const Annotation& anchor,
                                              const Annotation& other,
                                              int other_index = 1);

/// Overlap-aware vote fusion. All hypotheses are mapped onto the label space
/// of the first; in each homogeneous region the speaker count is the
/// weighted mean of per-hypothesis active counts rounded half-up, and the
/// top-voted labels win (ties to the lexicographically smaller label).
/// Weights default to uniform and must be positive.
Annotation fuse(std::span<const Annotation> hypotheses,
                std::span<const double> weights = {});

}  // namespace arraydiar
