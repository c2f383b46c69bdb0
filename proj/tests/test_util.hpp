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

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "trilemma/image.hpp"

namespace trilemma::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("trilemma_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

inline Image random_image(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c = 1) {
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  Image img(h, w, c);
  for (float& v : img.pixels()) v = u(rng);
  return img;
}

// Images that survive an 8-bit PNG round trip exactly.
inline Image random_quantized_image(std::mt19937_64& rng, std::size_t h, std::size_t w,
                                    std::size_t c = 1) {
  std::uniform_int_distribution<int> u(0, 255);
  Image img(h, w, c);
  for (float& v : img.pixels()) v = static_cast<float>(u(rng) / 255.0);
  return img;
}

}  // namespace trilemma::testing
