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

#include "kburst/tns.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace kburst {

static_assert(std::endian::native == std::endian::little,
              "tns payloads are little-endian; big-endian hosts are unsupported");

using json = nlohmann::ordered_json;

void TensorContainer::put(const std::string& name, Tensor t) {
  if (name.empty()) throw std::invalid_argument("tns: empty tensor name");
  tensors_[name] = std::move(t);
}

const Tensor& TensorContainer::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("tns: missing tensor '" + name + "'");
  return it->second;
}

bool TensorContainer::has(const std::string& name) const { return tensors_.count(name) > 0; }

std::vector<std::string> TensorContainer::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [k, v] : tensors_) out.push_back(k);
  return out;
}

void TensorContainer::set_meta(const nlohmann::json& meta) { meta_json_ = meta.dump(); }

nlohmann::json TensorContainer::meta() const { return nlohmann::json::parse(meta_json_); }

void TensorContainer::save(const std::string& path) const {
  json header;
  header["dtype"] = "f32";
  header["order"] = "LE";
  json tensors = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : tensors_) {
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["offset"] = offset;
    tensors.push_back(entry);
    offset += static_cast<uint64_t>(t.numel()) * sizeof(float);
  }
  header["tensors"] = tensors;
  header["meta"] = nlohmann::ordered_json::parse(meta_json_);
  const std::string header_str = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("tns: cannot create " + path);
  f.write("TNS1", 4);
  const uint64_t hlen = header_str.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, t] : tensors_)
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!f) throw std::runtime_error("tns: write failed for " + path);
}

TensorContainer TensorContainer::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("tns: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "TNS1", 4) != 0)
    throw std::runtime_error("tns: bad magic in " + path);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!f || hlen > (1ULL << 30)) throw std::runtime_error("tns: bad header length in " + path);
  std::string header_str(hlen, '\0');
  f.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw std::runtime_error("tns: truncated header in " + path);

  json header = json::parse(header_str);
  if (header.at("dtype") != "f32" || header.at("order") != "LE")
    throw std::runtime_error("tns: unsupported dtype/order in " + path);

  TensorContainer out;
  out.meta_json_ = header.value("meta", json::object()).dump();
  const std::streampos payload_start = f.tellg();
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int64_t> shape = entry.at("shape").get<std::vector<int64_t>>();
    const uint64_t offset = entry.at("offset").get<uint64_t>();
    Tensor t(shape);
    f.seekg(payload_start + static_cast<std::streamoff>(offset));
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!f) throw std::runtime_error("tns: payload shorter than declared shapes in " + path);
    out.tensors_[name] = std::move(t);
  }
  return out;
}

uint64_t TensorContainer::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : tensors_) {
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(t.data(), static_cast<size_t>(t.numel()) * sizeof(float), h);
  }
  return h;
}

uint64_t fnv1a64(const void* data, size_t size, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace kburst
