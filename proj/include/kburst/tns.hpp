// Copyright 2026 The kburst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kburst/tensor.hpp"

namespace kburst {

/// Self-describing tensor container (.tns).
///
/// Layout: magic "TNS1" | u64 LE header length | header JSON | payload.
/// The header declares dtype "f32", byte order "LE" and a name map with
/// per-tensor shapes and byte offsets into the payload. Reads and writes
/// round-trip bit-exactly.
class TensorContainer {
 public:
  void put(const std::string& name, Tensor t);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<std::string> names() const;

  void set_meta(const nlohmann::json& meta);
  nlohmann::json meta() const;

  void save(const std::string& path) const;
  static TensorContainer load(const std::string& path);

  /// FNV-1a over the payload bytes of the named tensors in sorted-name order.
  uint64_t content_hash() const;

 private:
  std::map<std::string, Tensor> tensors_;
  std::string meta_json_ = "{}";
};

uint64_t fnv1a64(const void* data, size_t size, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace kburst
