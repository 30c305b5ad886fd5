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

#include <gtest/gtest.h>

#include <fstream>

#include "picie/checkpoint.hpp"
#include "picie/errors.hpp"
#include "test_support.hpp"

namespace picie {
namespace {

Checkpoint sample_checkpoint() {
  Rng rng(1);
  const Extractor e(ExtractorConfig{BackboneKind::kTiny, 16, 4, std::nullopt}, 3);
  Checkpoint ck;
  ck.extractor = e.config();
  ck.params = e.parameters();
  ck.method = Method::kMdc;
  ck.epoch = 7;
  ck.config_hash = 0xabcdef0123456789ULL;
  ck.adam_steps = 42;
  ck.adam_m = zero_gradients(ck.params);
  ck.adam_v = zero_gradients(ck.params);
  ck.adam_m[0][3] = 0.25;
  ck.adam_v[1][0] = 1e-300;
  ck.last_centroids = {testing::random_centroids(3, 16, rng), testing::random_centroids(3, 16, rng)};
  ck.eval_centroids = testing::random_centroids(3, 16, rng);
  Rng state(99);
  state.next_u64();
  ck.rng_state = state.state();
  return ck;
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  const auto dir = testing::temp_dir("ckpt");
  const Checkpoint ck = sample_checkpoint();
  save_checkpoint(dir / "a.ckpt", ck);
  const Checkpoint back = load_checkpoint(dir / "a.ckpt", ck.config_hash);
  EXPECT_EQ(back.extractor, ck.extractor);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.method, Method::kMdc);
  EXPECT_EQ(back.epoch, 7);
  EXPECT_EQ(back.config_hash, ck.config_hash);
  EXPECT_EQ(back.adam_steps, 42);
  EXPECT_EQ(back.adam_m, ck.adam_m);
  EXPECT_EQ(back.adam_v, ck.adam_v);
  EXPECT_EQ(back.last_centroids, ck.last_centroids);
  EXPECT_EQ(back.eval_centroids, ck.eval_centroids);
  EXPECT_EQ(back.rng_state, ck.rng_state);
}

TEST(Checkpoint, HashMismatchRefused) {
  const auto dir = testing::temp_dir("ckpt_hash");
  save_checkpoint(dir / "a.ckpt", sample_checkpoint());
  try {
    load_checkpoint(dir / "a.ckpt", 1234);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("config hash"), std::string::npos);
  }
  EXPECT_NO_THROW(load_checkpoint(dir / "a.ckpt"));
}

TEST(Checkpoint, VersionAndCorruptionRefused) {
  const auto dir = testing::temp_dir("ckpt_version");
  save_checkpoint(dir / "a.ckpt", sample_checkpoint());
  {
    std::fstream f(dir / "a.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    f.put(static_cast<char>(99));
  }
  try {
    load_checkpoint(dir / "a.ckpt");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version 99"), std::string::npos);
  }
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), DataError);

  save_checkpoint(dir / "b.ckpt", sample_checkpoint());
  std::filesystem::resize_file(dir / "b.ckpt", 200);
  EXPECT_THROW(load_checkpoint(dir / "b.ckpt"), DataError);
}

TEST(Method, StringRoundTrip) {
  for (Method m : {Method::kPicie, Method::kMdc, Method::kNoTrain})
    EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_THROW(method_from_string("iic"), ConfigError);
}

}  // namespace
}  // namespace picie
