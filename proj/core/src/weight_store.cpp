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

#include "rnx/weight_store.hpp"

#include "rnx/error.hpp"

namespace rnx {

void validate_entry_name(const std::string& name) {
  if (name.empty()) throw WeightError("weight entry name is empty");
  if (name.size() > 0xFFFF) throw WeightError("weight entry name too long: " + name.substr(0, 64));
  for (char ch : name) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x21 || u > 0x7E) {
      throw WeightError("weight entry name is not printable ASCII: '" + name + "'");
    }
  }
}

void WeightStore::insert(const std::string& name, Tensor tensor) {
  validate_entry_name(name);
  if (!entries_.emplace(name, std::move(tensor)).second) {
    throw WeightError("duplicate weight entry '" + name + "'");
  }
}

void WeightStore::set(const std::string& name, Tensor tensor) {
  validate_entry_name(name);
  entries_.insert_or_assign(name, std::move(tensor));
}

const Tensor& WeightStore::at(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw WeightError("missing weight entry '" + name + "'");
  return it->second;
}

const Tensor& WeightStore::require(const std::string& name, const Shape& expected) const {
  const Tensor& t = at(name);
  if (t.shape() != expected) {
    throw WeightError("weight entry '" + name + "' has shape " +
                      shape_to_string(t.shape()) + ", expected " +
                      shape_to_string(expected));
  }
  return t;
}

std::vector<float> WeightStore::require_vector(const std::string& name,
                                               std::size_t length) const {
  return require(name, {length}).values();
}

std::size_t WeightStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

}  // namespace rnx
