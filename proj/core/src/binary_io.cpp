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

#include "picie/binary_io.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "picie/errors.hpp"

namespace picie {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace {
constexpr char kNamedArraysMagic[9] = "PICIEWT1";
constexpr std::uint8_t kNamedArraysVersion = 1;
// Guards against absurd lengths from corrupt files.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;
}  // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw DataError("cannot write " + path.string());
}

void BinaryWriter::raw(const void* p, std::size_t n) {
  out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out_) throw DataError("write failed: " + path_.string());
}

void BinaryWriter::u32(std::uint32_t v) { raw(&v, sizeof v); }
void BinaryWriter::u64(std::uint64_t v) { raw(&v, sizeof v); }
void BinaryWriter::f64(double v) { raw(&v, sizeof v); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  raw(s.data(), s.size());
}

void BinaryWriter::f64s(std::span<const double> v) {
  u64(v.size());
  raw(v.data(), v.size() * sizeof(double));
}

void BinaryWriter::i32s(std::span<const std::int32_t> v) {
  u64(v.size());
  raw(v.data(), v.size() * sizeof(std::int32_t));
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) throw DataError("write failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot open " + path.string());
}

void BinaryReader::raw(void* p, std::size_t n) {
  in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in_.gcount() != static_cast<std::streamsize>(n))
    throw DataError("unexpected end of file in " + path_.string());
}

std::uint8_t BinaryReader::u8() {
  std::uint8_t v;
  raw(&v, 1);
  return v;
}
std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  raw(&v, sizeof v);
  return v;
}
std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  raw(&v, sizeof v);
  return v;
}
double BinaryReader::f64() {
  double v;
  raw(&v, sizeof v);
  return v;
}

std::string BinaryReader::str() {
  const auto n = u64();
  if (n > kMaxElements) throw DataError("corrupt string length in " + path_.string());
  std::string s(n, '\0');
  raw(s.data(), n);
  return s;
}

std::vector<double> BinaryReader::f64s() {
  const auto n = u64();
  if (n > kMaxElements) throw DataError("corrupt array length in " + path_.string());
  std::vector<double> v(n);
  raw(v.data(), n * sizeof(double));
  return v;
}

std::vector<std::int32_t> BinaryReader::i32s() {
  const auto n = u64();
  if (n > kMaxElements) throw DataError("corrupt array length in " + path_.string());
  std::vector<std::int32_t> v(n);
  raw(v.data(), n * sizeof(std::int32_t));
  return v;
}

void BinaryReader::expect_magic(const char (&tag)[9]) {
  char got[8];
  raw(got, 8);
  if (std::memcmp(got, tag, 8) != 0)
    throw DataError(path_.string() + " is not a " + std::string(tag, 8) + " file");
}

void write_parameters(BinaryWriter& w, const std::vector<Parameter>& params) {
  w.u64(params.size());
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.shape.size()));
    for (int d : p.shape) w.i32(d);
    w.f64s(p.value);
  }
}

std::vector<Parameter> read_parameters(BinaryReader& r) {
  const auto n = r.u64();
  if (n > 1'000'000) throw DataError("corrupt parameter count in " + r.path().string());
  std::vector<Parameter> params(n);
  for (auto& p : params) {
    p.name = r.str();
    const auto rank = r.u32();
    if (rank > 8) throw DataError("corrupt parameter rank in " + r.path().string());
    std::size_t expect = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      p.shape.push_back(r.i32());
      expect *= static_cast<std::size_t>(p.shape.back());
    }
    p.value = r.f64s();
    if (p.value.size() != expect)
      throw DataError("parameter '" + p.name + "' size disagrees with its shape");
  }
  return params;
}

void write_named_arrays(const std::filesystem::path& path, const std::vector<Parameter>& arrays) {
  BinaryWriter w(path);
  w.magic(kNamedArraysMagic);
  w.u8(kNamedArraysVersion);
  write_parameters(w, arrays);
  w.close();
}

std::vector<Parameter> read_named_arrays(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kNamedArraysMagic);
  if (const auto v = r.u8(); v != kNamedArraysVersion)
    throw DataError("unsupported weight file version " + std::to_string(v));
  return read_parameters(r);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_parameters(const std::vector<Parameter>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : params) {
    feed(p.name.data(), p.name.size());
    feed(p.value.data(), p.value.size() * sizeof(double));
  }
  return h;
}

}  // namespace picie
