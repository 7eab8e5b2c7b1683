/*
 * Copyright 2026 The asdfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <asd/container.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "container serialization assumes a little-endian host");

namespace asd {

namespace {

constexpr char kMagic[4] = {'A', 'S', 'D', 'T'};
constexpr std::uint8_t kDtypeFloat64 = 1;

template <class T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("container: truncated stream");
  return v;
}

}  // namespace

void TensorContainer::put(const std::string& name, Tensor tensor) {
  if (name.empty()) throw std::invalid_argument("container: empty entry name");
  entries_[name] = std::move(tensor);
}

const Tensor& TensorContainer::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::out_of_range("container: no entry named '" + name + "'");
  }
  return it->second;
}

void TensorContainer::write(std::ostream& out) const {
  out.write(kMagic, 4);
  write_le<std::uint16_t>(out, kVersion);
  if (entries_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::runtime_error("container: too many entries");
  }
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint8_t>(out, kDtypeFloat64);
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (Index d : t.shape()) {
      write_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    }
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("container: write failed");
}

TensorContainer TensorContainer::read(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("container: bad magic (not an ASDT file)");
  }
  const auto version = read_le<std::uint16_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("container: unsupported version " +
                             std::to_string(version));
  }
  const auto count = read_le<std::uint32_t>(in);
  TensorContainer c;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = read_le<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw std::runtime_error("container: truncated name");
    const auto dtype = read_le<std::uint8_t>(in);
    if (dtype != kDtypeFloat64) {
      throw std::runtime_error("container: unknown dtype code " +
                               std::to_string(dtype));
    }
    const auto rank = read_le<std::uint8_t>(in);
    std::vector<Index> shape(rank);
    for (auto& d : shape) {
      d = static_cast<Index>(read_le<std::uint64_t>(in));
    }
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw std::runtime_error("container: truncated payload for " + name);
    if (c.entries_.count(name)) {
      throw std::runtime_error("container: duplicate entry name " + name);
    }
    c.entries_[name] = std::move(t);
  }
  return c;
}

void TensorContainer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("container: cannot open for write: " + path);
  write(out);
}

TensorContainer TensorContainer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("container: cannot open: " + path);
  return read(in);
}

}  // namespace asd
