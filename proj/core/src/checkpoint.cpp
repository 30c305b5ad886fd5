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

#include "picie/checkpoint.hpp"

#include <sstream>

#include "picie/binary_io.hpp"
#include "picie/clustering.hpp"
#include "picie/errors.hpp"

namespace picie {
namespace {
constexpr char kCheckpointMagic[9] = "PICIECK1";
constexpr std::uint8_t kCheckpointVersion = 1;

void write_moments(BinaryWriter& w, const Gradients& g) {
  w.u64(g.size());
  for (const auto& v : g) w.f64s(v);
}

Gradients read_moments(BinaryReader& r) {
  const auto n = r.u64();
  if (n > 1'000'000) throw DataError("corrupt optimizer state in " + r.path().string());
  Gradients g(n);
  for (auto& v : g) v = r.f64s();
  return g;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}
}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kPicie: return "picie";
    case Method::kMdc: return "mdc";
    case Method::kNoTrain: return "no-train";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "picie") return Method::kPicie;
  if (s == "mdc") return Method::kMdc;
  if (s == "no-train") return Method::kNoTrain;
  throw ConfigError("unknown method '" + s + "' (expected picie, mdc or no-train)");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  BinaryWriter w(path);
  w.magic(kCheckpointMagic);
  w.u8(kCheckpointVersion);
  w.u64(ck.config_hash);
  w.str(to_string(ck.method));
  w.i32(ck.epoch);
  w.str(to_string(ck.extractor.backbone));
  w.i32(ck.extractor.dim);
  w.i32(ck.extractor.stride);
  write_parameters(w, ck.params);
  w.u64(static_cast<std::uint64_t>(ck.adam_steps));
  write_moments(w, ck.adam_m);
  write_moments(w, ck.adam_v);
  w.u64(ck.last_centroids.size());
  for (const auto& c : ck.last_centroids) write_centroids(w, c);
  w.u8(ck.eval_centroids ? 1 : 0);
  if (ck.eval_centroids) write_centroids(w, *ck.eval_centroids);
  w.str(ck.rng_state);
  w.close();
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash) {
  BinaryReader r(path);
  r.expect_magic(kCheckpointMagic);
  if (const auto v = r.u8(); v != kCheckpointVersion)
    throw DataError("checkpoint " + path.string() + " has version " + std::to_string(v) +
                    ", this build reads version " + std::to_string(kCheckpointVersion));
  Checkpoint ck;
  ck.config_hash = r.u64();
  if (expected_hash && *expected_hash != ck.config_hash)
    throw DataError("checkpoint " + path.string() + " was written under config hash " +
                    hex(ck.config_hash) + " but the current config hashes to " + hex(*expected_hash));
  ck.method = method_from_string(r.str());
  ck.epoch = r.i32();
  ck.extractor.backbone = backbone_from_string(r.str());
  ck.extractor.dim = r.i32();
  ck.extractor.stride = r.i32();
  ck.params = read_parameters(r);
  ck.adam_steps = static_cast<std::int64_t>(r.u64());
  ck.adam_m = read_moments(r);
  ck.adam_v = read_moments(r);
  const auto nc = r.u64();
  if (nc > 64) throw DataError("corrupt centroid count in " + path.string());
  for (std::uint64_t i = 0; i < nc; ++i) ck.last_centroids.push_back(read_centroids(r));
  if (r.u8()) ck.eval_centroids = read_centroids(r);
  ck.rng_state = r.str();
  return ck;
}

}  // namespace picie
