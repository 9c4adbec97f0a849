#include "xrn/data/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "xrn/data/csv.hpp"
#include "xrn/error.hpp"

namespace xrn::data {

namespace {

std::string normalize(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

ManifestConfig ManifestConfig::from_json(std::string_view json_text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest mapping: invalid JSON: ") + e.what());
  }
  ManifestConfig c;
  try {
    c.image_column = j.at("image_column").get<std::string>();
    c.split_column = j.value("split_column", std::string{});
    if (j.contains("split_values")) {
      for (const auto& [raw, split] : j.at("split_values").items()) {
        c.split_values.emplace_back(raw, parse_split(split.get<std::string>()));
      }
    }
    for (const auto& rule : j.at("rules")) {
      LabelRule r;
      r.label = parse_label(rule.at("label").get<std::string>());
      for (const auto& [col, val] : rule.at("when").items()) r.when.emplace_back(col, val.get<std::string>());
      c.rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest mapping: ") + e.what());
  }
  if (c.image_column.empty()) throw ConfigError("manifest mapping: image_column is empty");
  if (c.rules.empty()) throw ConfigError("manifest mapping: no label rules");
  return c;
}

ManifestConfig ManifestConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mapping file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ManifestConfig ManifestConfig::coronahack() {
  ManifestConfig c;
  c.image_column = "X_ray_image_name";
  c.split_column = "Dataset_type";
  c.split_values = {{"TRAIN", Split::Train}, {"TEST", Split::Test}};
  c.rules = {
      {ClassLabel::Normal, {{"Label", "Normal"}}},
      {ClassLabel::Covid19, {{"Label_2_Virus_category", "COVID-19"}}},
      {ClassLabel::Bacteria, {{"Label_1_Virus_category", "bacteria"}}},
      {ClassLabel::Virus, {{"Label_1_Virus_category", "Virus"}}},
  };
  return c;
}

std::string ManifestConfig::to_json() const {
  nlohmann::ordered_json j;
  j["image_column"] = image_column;
  j["split_column"] = split_column;
  j["split_values"] = nlohmann::ordered_json::object();
  for (const auto& [raw, split] : split_values) j["split_values"][raw] = std::string(split_name(split));
  j["rules"] = nlohmann::ordered_json::array();
  for (const auto& r : rules) {
    nlohmann::ordered_json rule;
    rule["label"] = std::string(label_name(r.label));
    rule["when"] = nlohmann::ordered_json::object();
    for (const auto& [col, val] : r.when) rule["when"][col] = val;
    j["rules"].push_back(rule);
  }
  return j.dump(2) + "\n";
}

ManifestResult parse_manifest(std::string_view csv_text, const ManifestConfig& config) {
  ManifestResult result;
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) return result;
  const CsvRow& header = rows[0];
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
    column.emplace(name, i);
  }
  auto require = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw ConfigError("manifest: configured column '" + name + "' not in CSV header");
    return it->second;
  };
  const std::size_t image_col = require(config.image_column);
  const bool has_split = !config.split_column.empty();
  const std::size_t split_col = has_split ? require(config.split_column) : 0;
  struct CompiledRule {
    ClassLabel label;
    std::vector<std::pair<std::size_t, std::string>> when;
  };
  std::vector<CompiledRule> rules;
  for (const auto& r : config.rules) {
    CompiledRule cr{r.label, {}};
    for (const auto& [col, val] : r.when) cr.when.emplace_back(require(col), normalize(val));
    rules.push_back(std::move(cr));
  }
  std::vector<std::pair<std::string, Split>> split_values;
  for (const auto& [raw, split] : config.split_values) split_values.emplace_back(normalize(raw), split);

  auto skip = [&](std::size_t row, const std::string& why) {
    ++result.skipped;
    result.skip_reasons.push_back("row " + std::to_string(row) + ": " + why);
  };

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.size() != header.size()) {
      skip(r, "has " + std::to_string(row.size()) + " fields, header has " + std::to_string(header.size()));
      continue;
    }
    SampleRecord rec;
    rec.image_ref = row[image_col];
    if (normalize(rec.image_ref).empty()) {
      skip(r, "empty image reference");
      continue;
    }
    if (has_split) {
      const std::string raw = normalize(row[split_col]);
      auto it = std::find_if(split_values.begin(), split_values.end(),
                             [&](const auto& sv) { return sv.first == raw; });
      if (it != split_values.end()) {
        rec.split = it->second;
      } else {
        try {
          rec.split = parse_split(raw);
        } catch (const ConfigError&) {
          skip(r, "unknown split value '" + row[split_col] + "'");
          continue;
        }
      }
    }
    const CompiledRule* match = nullptr;
    for (const auto& rule : rules) {
      const bool ok = std::all_of(rule.when.begin(), rule.when.end(),
                                  [&](const auto& cond) { return normalize(row[cond.first]) == cond.second; });
      if (ok) {
        match = &rule;
        break;
      }
    }
    if (!match) {
      skip(r, "no label rule matches");
      continue;
    }
    rec.source = match->label;
    rec.label = static_cast<int>(match->label);
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::size_t ClassDistribution::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

std::size_t ClassDistribution::of(ClassLabel label) const {
  const auto& row = counts[static_cast<std::size_t>(label)];
  return row[0] + row[1] + row[2];
}

std::size_t ClassDistribution::of(ClassLabel label, Split split) const {
  return counts[static_cast<std::size_t>(label)][static_cast<std::size_t>(split)];
}

std::string ClassDistribution::to_csv() const {
  std::string out = "class,split,count\n";
  for (ClassLabel l : kAllLabels) {
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
      out += std::string(label_name(l)) + "," + std::string(split_name(s)) + "," + std::to_string(of(l, s)) + "\n";
    }
  }
  return out;
}

ClassDistribution class_distribution(const std::vector<SampleRecord>& records) {
  ClassDistribution d;
  for (const auto& r : records) {
    ++d.counts[static_cast<std::size_t>(r.source)][static_cast<std::size_t>(r.split)];
  }
  return d;
}

}  // namespace xrn::data
