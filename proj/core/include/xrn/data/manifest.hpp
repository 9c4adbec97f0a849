#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xrn/data/labels.hpp"

namespace xrn::data {

/// A row maps to `label` when every (column, value) condition holds;
/// values compare case-insensitively after trimming whitespace.
struct LabelRule {
  ClassLabel label = ClassLabel::Normal;
  std::vector<std::pair<std::string, std::string>> when;
};

/// Column layout of a dataset manifest. Rules are tried in order; a row
/// matching none is skipped and counted.
struct ManifestConfig {
  std::string image_column;
  std::string split_column;  // empty: every row is Train
  std::vector<std::pair<std::string, Split>> split_values;
  std::vector<LabelRule> rules;

  /// {"image_column", "split_column", "split_values": {raw: "train"|"test"},
  ///  "rules": [{"label": "Covid19", "when": {column: value}}]}
  static ManifestConfig from_json(std::string_view json_text);
  static ManifestConfig load(const std::filesystem::path& path);
  /// Column names of the Kaggle CoronaHack Chest X-Ray metadata file.
  static ManifestConfig coronahack();
  std::string to_json() const;
};

struct ManifestResult {
  std::vector<SampleRecord> records;
  std::size_t skipped = 0;
  std::vector<std::string> skip_reasons;  // "row N: reason"
};

/// Throws ConfigError when a configured column is missing from the header.
ManifestResult parse_manifest(std::string_view csv_text, const ManifestConfig& config);

/// counts[label][split] with split order Train, Val, Test.
struct ClassDistribution {
  std::array<std::array<std::size_t, 3>, kNumLabels> counts{};

  std::size_t total() const;
  std::size_t of(ClassLabel label) const;
  std::size_t of(ClassLabel label, Split split) const;
  /// "class,split,count" rows for every label and split.
  std::string to_csv() const;
};

ClassDistribution class_distribution(const std::vector<SampleRecord>& records);

}  // namespace xrn::data
