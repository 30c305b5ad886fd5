// Copyright 2026 The picie-cpp Authors. All Rights Reserved.
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
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "picie/autograd.hpp"

namespace picie {

// Little-endian binary writer used by checkpoints and pseudo-label caches.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void f64s(std::span<const double> v);
  void i32s(std::span<const std::int32_t> v);
  void magic(const char (&tag)[9]) { raw(tag, 8); }
  void close();

 private:
  void raw(const void* p, std::size_t n);
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64();
  std::string str();
  std::vector<double> f64s();
  std::vector<std::int32_t> i32s();
  // Throws DataError unless the next 8 bytes equal `tag`.
  void expect_magic(const char (&tag)[9]);
  const std::filesystem::path& path() const { return path_; }

 private:
  void raw(void* p, std::size_t n);
  std::filesystem::path path_;
  std::ifstream in_;
};

void write_parameters(BinaryWriter& w, const std::vector<Parameter>& params);
std::vector<Parameter> read_parameters(BinaryReader& r);

// Standalone named-array file (pretrained weights).
void write_named_arrays(const std::filesystem::path& path, const std::vector<Parameter>& arrays);
std::vector<Parameter> read_named_arrays(const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t hash_parameters(const std::vector<Parameter>& params);

}  // namespace picie
