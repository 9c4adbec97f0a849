#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xrn/train/trainer.hpp"

namespace xrn::train {

/// Header epoch,lr,train_loss,train_acc,val_loss,val_acc; values printed
/// with 17 significant digits so they parse back exactly.
std::string metrics_csv(const RunRecord& record);
std::vector<EpochMetrics> parse_metrics_csv(std::string_view text);

/// Summary with preset, seed, epochs, test_accuracy, train_acc_avg,
/// val_acc_avg, epoch_metrics (CSV file name) and the resolved config.
std::string run_summary_json(const RunRecord& record, std::string_view metrics_file = "metrics.csv");

/// Writes metrics.csv and run.json into `dir`, creating it. Throws
/// FormatError when a file cannot be written.
void export_metrics(const RunRecord& record, const std::filesystem::path& dir);

/// Writes `text` to `path` (parent directories created).
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace xrn::train
