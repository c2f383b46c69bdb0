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

#include <sys/wait.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "trilemma/error.hpp"
#include "trilemma/image.hpp"
#include "trilemma/png_io.hpp"

namespace trilemma {

/// Emits seeded uniform-noise PNGs after sleeping `per_sample_delay_s` per
/// sample. Stands in for a trained generator.
struct StubGenerator {
  double per_sample_delay_s = 0.0;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 1;
  std::uint64_t seed = 0;
};

/// Shell command with {count}, {outdir} and optionally {class} placeholders.
/// It must write exactly {count} PNGs into {outdir} and exit 0.
struct CommandGenerator {
  std::string command_template;
};

using GeneratorAdapter = std::variant<StubGenerator, CommandGenerator>;

inline void validate(const GeneratorAdapter& g) {
  if (const auto* stub = std::get_if<StubGenerator>(&g)) {
    if (!(stub->per_sample_delay_s >= 0.0)) throw Error("stub delay must be nonnegative");
    if (stub->height == 0 || stub->width == 0) throw Error("stub image dims must be positive");
  } else {
    const auto& cmd = std::get<CommandGenerator>(g).command_template;
    if (cmd.find("{count}") == std::string::npos || cmd.find("{outdir}") == std::string::npos) {
      throw Error("generator command must contain {count} and {outdir}");
    }
  }
}

namespace detail {

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

inline void run_command(const std::string& cmd) {
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (pipe == nullptr) throw Error("failed to launch generator command: " + cmd);
  std::string output;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) output += buf;
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("generator command failed (status " + std::to_string(status) + "): " + cmd +
                "\n" + output);
  }
}

}  // namespace detail

/// Runs the adapter once to produce `count` samples in `outdir`.
inline void generate_samples(const GeneratorAdapter& g, std::size_t count,
                             const std::filesystem::path& outdir, const std::string& class_name = "",
                             std::uint64_t stream = 0) {
  std::filesystem::create_directories(outdir);
  if (const auto* stub = std::get_if<StubGenerator>(&g)) {
    std::mt19937_64 rng(stub->seed ^ (stream * 0x9E3779B97F4A7C15ULL));
    std::uniform_real_distribution<float> uniform(0.0F, 1.0F);
    const auto delay = std::chrono::duration<double>(stub->per_sample_delay_s);
    for (std::size_t i = 0; i < count; ++i) {
      std::this_thread::sleep_for(delay);
      Image img(stub->height, stub->width, stub->channels);
      for (float& v : img.pixels()) v = uniform(rng);
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%06zu.png", i);
      write_png(outdir / name, img);
    }
    return;
  }
  std::string cmd = std::get<CommandGenerator>(g).command_template;
  detail::replace_all(cmd, "{count}", std::to_string(count));
  detail::replace_all(cmd, "{outdir}", detail::shell_quote(outdir.string()));
  detail::replace_all(cmd, "{class}", detail::shell_quote(class_name));
  detail::run_command(cmd);
}

/// Counts PNG files in `dir` that decode successfully.
inline std::size_t count_decodable_pngs(const std::filesystem::path& dir) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    try {
      (void)read_png(entry.path());
      ++n;
    } catch (const Error&) {
    }
  }
  return n;
}

struct BenchmarkResult {
  std::size_t count = 0;
  double elapsed_seconds = 0.0;
  std::filesystem::path samples_dir;
};

inline double sampling_speed(std::size_t count, double elapsed_seconds) {
  if (!(elapsed_seconds > 0.0)) throw Error("elapsed time must be positive");
  return static_cast<double>(count) / elapsed_seconds;
}

/// Wall-clock time for one end-to-end generation of `count` samples (process
/// spawn and PNG writing included). `warmup` samples are produced first into
/// a sibling directory and not timed. `samples_dir` must not exist or be
/// empty.
inline BenchmarkResult benchmark_generator(const GeneratorAdapter& g, std::size_t count,
                                           std::size_t warmup,
                                           const std::filesystem::path& samples_dir) {
  validate(g);
  if (count < 1) throw Error("benchmark count must be at least 1");
  if (std::filesystem::exists(samples_dir) && !std::filesystem::is_empty(samples_dir)) {
    throw Error("benchmark output directory is not empty: " + samples_dir.string());
  }
  if (warmup > 0) {
    auto warm_dir = samples_dir;
    warm_dir += ".warmup";
    std::filesystem::remove_all(warm_dir);
    generate_samples(g, warmup, warm_dir, "", 1);
    std::filesystem::remove_all(warm_dir);
  }
  std::filesystem::create_directories(samples_dir);
  const auto start = std::chrono::steady_clock::now();
  generate_samples(g, count, samples_dir, "", 0);
  const auto stop = std::chrono::steady_clock::now();

  const std::size_t found = count_decodable_pngs(samples_dir);
  if (found != count) {
    throw Error("expected " + std::to_string(count) + ", found " + std::to_string(found) +
                " samples in " + samples_dir.string());
  }
  return {count, std::chrono::duration<double>(stop - start).count(), samples_dir};
}

}  // namespace trilemma
