#include "xrn/train/run_record.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xrn/data/csv.hpp"
#include "xrn/error.hpp"

namespace xrn::train {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw FormatError("metrics csv: bad number '" + s + "'");
  return v;
}

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string metrics_csv(const RunRecord& record) {
  std::string out = "epoch,lr,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& m : record.epochs) {
    out += std::to_string(m.epoch) + "," + num(m.lr) + "," + num(m.train_loss) + "," + num(m.train_acc) + "," +
           num(m.val_loss) + "," + num(m.val_acc) + "\n";
  }
  return out;
}

std::vector<EpochMetrics> parse_metrics_csv(std::string_view text) {
  const auto rows = data::parse_csv(text);
  if (rows.empty() || rows[0] != data::CsvRow{"epoch", "lr", "train_loss", "train_acc", "val_loss", "val_acc"}) {
    throw FormatError("metrics csv: unexpected header");
  }
  std::vector<EpochMetrics> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 6) throw FormatError("metrics csv: row " + std::to_string(r) + " has wrong field count");
    EpochMetrics m;
    m.epoch = static_cast<std::size_t>(parse_num(row[0]));
    m.lr = parse_num(row[1]);
    m.train_loss = parse_num(row[2]);
    m.train_acc = parse_num(row[3]);
    m.val_loss = parse_num(row[4]);
    m.val_acc = parse_num(row[5]);
    out.push_back(m);
  }
  return out;
}

std::string run_summary_json(const RunRecord& record, std::string_view metrics_file) {
  nlohmann::ordered_json j;
  j["preset"] = record.config.preset;
  j["seed"] = record.config.seed;
  j["epochs"] = record.epochs.size();
  j["test_accuracy"] = opt(record.test_accuracy);
  j["train_acc_avg"] = record.train_acc_avg;
  j["val_acc_avg"] = opt(record.val_acc_avg);
  j["final_train_acc"] = record.final_train_acc;
  j["final_val_acc"] = opt(record.final_val_acc);
  j["epoch_metrics"] = std::string(metrics_file);
  if (record.test_confusion) {
    const auto& cm = *record.test_confusion;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < cm.num_classes(); ++t) {
      auto row = nlohmann::ordered_json::array();
      for (std::size_t p = 0; p < cm.num_classes(); ++p) row.push_back(cm.count(t, p));
      rows.push_back(row);
    }
    j["test_confusion"] = rows;
  }
  j["wall_clock_seconds"] = record.wall_clock_seconds;
  j["abort_reason"] = record.abort_reason ? nlohmann::ordered_json(*record.abort_reason) : nlohmann::ordered_json(nullptr);
  j["config"] = nlohmann::ordered_json::parse(record.config.to_json());
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void export_metrics(const RunRecord& record, const std::filesystem::path& dir) {
  write_text_file(dir / "metrics.csv", metrics_csv(record));
  write_text_file(dir / "run.json", run_summary_json(record));
}

}  // namespace xrn::train
