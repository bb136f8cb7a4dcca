// Copyright 2026 The rnx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "rnx/tensor.hpp"

namespace rnx {

/// Named parameter tensors, ordered by name.
class WeightStore {
 public:
  using Map = std::map<std::string, Tensor>;

  /// Adds a new entry. Names must be non-empty printable ASCII and unique.
  void insert(const std::string& name, Tensor tensor);
  /// Adds or replaces an entry.
  void set(const std::string& name, Tensor tensor);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  /// Throws WeightError naming the entry when it is absent.
  const Tensor& at(const std::string& name) const;
  /// As at(), and also checks the shape.
  const Tensor& require(const std::string& name, const Shape& expected) const;
  /// Rank-1 entry of the given length, as a vector.
  std::vector<float> require_vector(const std::string& name, std::size_t length) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t scalar_count() const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  bool operator==(const WeightStore& other) const = default;

 private:
  Map entries_;
};

void validate_entry_name(const std::string& name);

}  // namespace rnx
