// Copyright 2026 The trilemma-eval Authors
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

#include "trilemma/image.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace trilemma {
namespace {

TEST(ImageTest, RejectsOutOfRangePixels) {
  EXPECT_THROW(Image(1, 2, 1, std::vector<float>{0.5F, 1.5F}), Error);
  EXPECT_THROW(Image(1, 2, 1, std::vector<float>{0.5F}), Error);
  EXPECT_THROW(Image(2, 2, 2), Error);
}

TEST(ResizeBilinearTest, ConstantFieldStaysConstant) {
  const Image src(2, 2, 1, 0.5F);
  const Image out = resize_bilinear(src, 4, 4);
  ASSERT_EQ(out.height(), 4U);
  ASSERT_EQ(out.width(), 4U);
  for (float v : out.pixels()) EXPECT_FLOAT_EQ(v, 0.5F);
}

TEST(ResizeBilinearTest, SameSizeIsIdentity) {
  std::mt19937_64 rng(3);
  const Image src = testing::random_image(rng, 5, 7, 3);
  EXPECT_EQ(resize_bilinear(src, 5, 7), src);
}

TEST(ResizeBilinearTest, ColumnUpsampleMatchesHandWeights) {
  // Half-pixel centres: output rows sample source positions
  // -0.25, 0.25, 0.75, 1.25, clamped to [0, 1].
  const Image src(2, 1, 1, std::vector<float>{0.0F, 1.0F});
  const Image out = resize_bilinear(src, 4, 1);
  const float expected[] = {0.0F, 0.25F, 0.75F, 1.0F};
  for (std::size_t r = 0; r < 4; ++r) EXPECT_FLOAT_EQ(out.at(r, 0, 0), expected[r]);
  for (std::size_t r = 1; r < 4; ++r) EXPECT_LE(out.at(r - 1, 0, 0), out.at(r, 0, 0));
}

TEST(ResizeBilinearTest, OutputStaysInUnitRange) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Image src = testing::random_image(rng, 3 + trial % 5, 4 + trial % 3, trial % 2 ? 3 : 1);
    const Image out = resize_bilinear(src, 9, 2 + trial);
    for (float v : out.pixels()) {
      EXPECT_GE(v, 0.0F);
      EXPECT_LE(v, 1.0F);
    }
  }
  EXPECT_THROW(resize_bilinear(Image(2, 2, 1), 0, 3), Error);
}

}  // namespace
}  // namespace trilemma
