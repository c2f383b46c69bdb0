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

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trilemma/classifier.hpp"
#include "trilemma/error.hpp"

namespace trilemma {

using Json = nlohmann::json;

/// The five downstream-classification experiment families, in report order.
enum class Family { kBaselineReal, kGeometricDa, kDataAnonymization, kSyntheticDa, kCombinedDa };

inline constexpr std::array<Family, 5> kAllFamilies = {
    Family::kBaselineReal, Family::kGeometricDa, Family::kDataAnonymization, Family::kSyntheticDa,
    Family::kCombinedDa};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::kBaselineReal: return "baseline-real";
    case Family::kGeometricDa: return "geometric-da";
    case Family::kDataAnonymization: return "data-anonymization";
    case Family::kSyntheticDa: return "synthetic-da";
    case Family::kCombinedDa: return "combined-da";
  }
  return "unknown";
}

inline Family parse_family(const std::string& s) {
  for (Family f : kAllFamilies) {
    if (s == to_string(f)) return f;
  }
  throw Error("unknown experiment family '" + s + "'");
}

inline bool uses_synthetic(Family f) {
  return f == Family::kDataAnonymization || f == Family::kSyntheticDa || f == Family::kCombinedDa;
}

struct ExperimentVariant {
  Family family = Family::kBaselineReal;
  std::size_t multiplier = 0;  ///< 0 for the real-only families
  std::string generator_id;    ///< empty for the real-only families

  void validate() const {
    if (uses_synthetic(family)) {
      if (multiplier < 1) throw Error(std::string(to_string(family)) + " needs a multiplier >= 1");
      if (generator_id.empty()) throw Error(std::string(to_string(family)) + " needs a generator");
    } else if (multiplier != 0 || !generator_id.empty()) {
      throw Error(std::string(to_string(family)) + " takes no generator or multiplier");
    }
  }

  std::string label() const {
    std::string s = to_string(family);
    if (uses_synthetic(family)) s += " x" + std::to_string(multiplier);
    return s;
  }

  friend bool operator==(const ExperimentVariant&, const ExperimentVariant&) = default;
};

/// One (generator, dataset, variant) cell. Metrics that do not apply to a
/// cell (for instance privacy of the real baseline) are left empty.
struct MetricsRecord {
  std::string generator_id;
  std::string dataset_id;
  ExperimentVariant variant;
  std::optional<double> fidelity;
  std::optional<double> diversity;
  std::optional<double> fid;
  std::optional<double> sampling_speed;
  std::optional<double> privacy;
  EvalResult utility;
  EvalResult robustness;
  std::size_t best_epoch = 0;
  std::vector<EpochStats> training_curve;
  std::size_t training_size = 0;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::string status = "ok";
  std::string error;
  Json notes = Json::object();

  std::string cell_id() const {
    std::string id = dataset_id + "__" + to_string(variant.family);
    if (uses_synthetic(variant.family)) {
      id += "__" + variant.generator_id + "__x" + std::to_string(variant.multiplier);
    }
    return id;
  }

  bool ok() const noexcept { return status == "ok"; }
};

// ---------------------------------------------------------------------------
// JSON

inline Json optional_to_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline std::optional<double> optional_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline Json to_json(const EvalResult& r) {
  return {{"accuracy", r.accuracy},
          {"top_k_accuracy", r.top_k_accuracy},
          {"k", r.k},
          {"mean_loss", r.mean_loss},
          {"per_class_accuracy", r.per_class_accuracy},
          {"per_class_count", r.per_class_count}};
}

inline EvalResult eval_result_from_json(const Json& j) {
  EvalResult r;
  r.accuracy = j.at("accuracy").get<double>();
  r.top_k_accuracy = j.at("top_k_accuracy").get<double>();
  r.k = j.at("k").get<std::size_t>();
  r.mean_loss = j.value("mean_loss", 0.0);
  r.per_class_accuracy = j.at("per_class_accuracy").get<std::vector<double>>();
  r.per_class_count = j.at("per_class_count").get<std::vector<std::size_t>>();
  return r;
}

inline Json to_json(const ExperimentVariant& v) {
  return {{"family", to_string(v.family)},
          {"multiplier", v.multiplier == 0 ? Json(nullptr) : Json(v.multiplier)},
          {"generator_id", v.generator_id.empty() ? Json(nullptr) : Json(v.generator_id)}};
}

inline ExperimentVariant variant_from_json(const Json& j) {
  ExperimentVariant v;
  v.family = parse_family(j.at("family").get<std::string>());
  if (!j.at("multiplier").is_null()) v.multiplier = j.at("multiplier").get<std::size_t>();
  if (!j.at("generator_id").is_null()) v.generator_id = j.at("generator_id").get<std::string>();
  return v;
}

inline Json to_json(const MetricsRecord& r) {
  Json curve = Json::array();
  for (const auto& e : r.training_curve) {
    curve.push_back({{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"val_loss", e.val_loss},
                     {"val_accuracy", e.val_accuracy}});
  }
  return {{"cell_id", r.cell_id()},
          {"generator_id", r.generator_id.empty() ? Json(nullptr) : Json(r.generator_id)},
          {"dataset_id", r.dataset_id},
          {"variant", to_json(r.variant)},
          {"fidelity", optional_to_json(r.fidelity)},
          {"diversity", optional_to_json(r.diversity)},
          {"fid", optional_to_json(r.fid)},
          {"sampling_speed", optional_to_json(r.sampling_speed)},
          {"privacy", optional_to_json(r.privacy)},
          {"utility", to_json(r.utility)},
          {"robustness", to_json(r.robustness)},
          {"training", {{"best_epoch", r.best_epoch}, {"size", r.training_size}, {"curve", curve}}},
          {"seed", r.seed},
          {"fingerprint", r.fingerprint},
          {"status", r.status},
          {"error", r.error},
          {"notes", r.notes}};
}

inline MetricsRecord record_from_json(const Json& j) {
  MetricsRecord r;
  if (!j.at("generator_id").is_null()) r.generator_id = j.at("generator_id").get<std::string>();
  r.dataset_id = j.at("dataset_id").get<std::string>();
  r.variant = variant_from_json(j.at("variant"));
  r.fidelity = optional_from_json(j.at("fidelity"));
  r.diversity = optional_from_json(j.at("diversity"));
  r.fid = optional_from_json(j.at("fid"));
  r.sampling_speed = optional_from_json(j.at("sampling_speed"));
  r.privacy = optional_from_json(j.at("privacy"));
  r.status = j.value("status", "ok");
  r.error = j.value("error", "");
  if (r.ok()) {
    r.utility = eval_result_from_json(j.at("utility"));
    r.robustness = eval_result_from_json(j.at("robustness"));
  }
  const Json& t = j.at("training");
  r.best_epoch = t.value("best_epoch", std::size_t{0});
  r.training_size = t.value("size", std::size_t{0});
  for (const auto& e : t.at("curve")) {
    r.training_curve.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                                e.at("val_loss").get<double>(), e.at("val_accuracy").get<double>()});
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.fingerprint = j.at("fingerprint").get<std::string>();
  r.notes = j.value("notes", Json::object());
  return r;
}

// ---------------------------------------------------------------------------
// Files

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

/// Writes via a temporary file and rename so readers never see partial
/// documents.
inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<MetricsRecord> load_records(const std::filesystem::path& records_dir) {
  if (!std::filesystem::is_directory(records_dir)) {
    throw Error("no records directory at " + records_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(records_dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MetricsRecord> out;
  for (const auto& f : files) out.push_back(record_from_json(read_json_file(f)));
  return out;
}

/// Hex SHA-256 of the compact JSON dump (object keys are sorted).
inline std::string fingerprint(const Json& j) {
  const std::string text = j.dump();
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

}  // namespace trilemma
