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

#pragma once

#include <asd/tensor.hpp>

#include <iosfwd>
#include <map>
#include <string>

namespace asd {

/// Binary container of named float64 tensors.
///
/// Layout (all integers little-endian):
///   magic "ASDT" | version u16 | entry count u32
///   per entry: name length u32, name bytes (UTF-8), dtype u8 (1 = float64),
///              rank u8, dims u64 x rank, payload 8 * prod(dims) bytes.
/// Entries are stored sorted by name, so write -> read -> write is
/// byte-identical.
class TensorContainer {
 public:
  static constexpr std::uint16_t kVersion = 1;

  void put(const std::string& name, Tensor tensor);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  std::size_t size() const { return entries_.size(); }

  const std::map<std::string, Tensor>& entries() const { return entries_; }
  std::map<std::string, Tensor>& entries() { return entries_; }

  void save(const std::string& path) const;
  static TensorContainer load(const std::string& path);

  void write(std::ostream& out) const;
  static TensorContainer read(std::istream& in);

 private:
  std::map<std::string, Tensor> entries_;
};

}  // namespace asd
