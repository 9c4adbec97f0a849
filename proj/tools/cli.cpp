#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xrn/data/dataset.hpp"
#include "xrn/data/manifest.hpp"
#include "xrn/error.hpp"
#include "xrn/grad_suite.hpp"
#include "xrn/nn/checkpoint.hpp"
#include "xrn/train/run_record.hpp"
#include "xrn/train/schedule.hpp"
#include "xrn/train/trainer.hpp"

namespace xrn::cli {

namespace fs = std::filesystem;
using train::read_text_file;
using train::write_text_file;

namespace {

struct DataFlags {
  std::string manifest;
  std::vector<std::string> extra_manifests;
  std::string mapping;
  std::string images_root;
  std::size_t synthetic = 0;
  std::size_t size = 64;
  std::string binary;
  double val_fraction = 0.1;
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--manifest", d.manifest, "Manifest CSV");
  cmd->add_option("--extra-manifest", d.extra_manifests, "Further manifest appended to --manifest (repeatable)");
  cmd->add_option("--mapping", d.mapping, "Manifest mapping JSON (default: shipped CoronaHack mapping)");
  cmd->add_option("--images-root", d.images_root, "Directory image references are relative to");
  cmd->add_option("--synthetic", d.synthetic, "Use N synthetic train and N test images per class");
  cmd->add_option("--size", d.size, "Input resolution (square)")->check(CLI::Range(16, 224));
  cmd->add_option("--binary", d.binary, "Keep two classes A,B relabelled 0,1");
  cmd->add_option("--val-fraction", d.val_fraction, "Per-class share of Train moved to Val")->check(CLI::Range(0.0, 0.9));
}

data::ManifestConfig load_mapping(const std::string& path) {
  if (path.empty()) {
#ifdef XRN_DEFAULT_MAPPING
    if (fs::exists(XRN_DEFAULT_MAPPING)) return data::ManifestConfig::load(XRN_DEFAULT_MAPPING);
#endif
    return data::ManifestConfig::coronahack();
  }
  if (!fs::exists(path)) throw ConfigError("mapping file " + path + " does not exist");
  return data::ManifestConfig::load(path);
}

data::ManifestResult read_one_manifest(const std::string& path, const data::ManifestConfig& mapping) {
  if (!fs::exists(path)) throw ConfigError("manifest " + path + " does not exist");
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return data::parse_manifest(text, mapping);
}

data::ManifestResult read_manifest(const DataFlags& d) {
  const auto mapping = load_mapping(d.mapping);
  auto result = read_one_manifest(d.manifest, mapping);
  for (const auto& extra : d.extra_manifests) {
    auto more = read_one_manifest(extra, mapping);
    for (auto& r : more.records) result.records.push_back(std::move(r));
    result.skipped += more.skipped;
    for (auto& s : more.skip_reasons) result.skip_reasons.push_back(extra + " " + s);
  }
  if (result.skipped > 0) {
    std::cerr << "manifest: skipped " << result.skipped << " row(s)";
    if (!result.skip_reasons.empty()) std::cerr << ", first: " << result.skip_reasons.front();
    std::cerr << "\n";
  }
  return result;
}

std::optional<std::pair<data::ClassLabel, data::ClassLabel>> parse_binary(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("--binary expects A,B (e.g. Bacteria,Virus)");
  return std::make_pair(data::parse_label(text.substr(0, comma)), data::parse_label(text.substr(comma + 1)));
}

data::Dataset load_data(const DataFlags& d, std::uint64_t seed) {
  if (d.synthetic > 0 && !d.manifest.empty()) throw ConfigError("use either --synthetic or --manifest, not both");
  data::Dataset ds;
  if (d.synthetic > 0) {
    data::SyntheticSpec spec;
    spec.train_per_class.fill(d.synthetic);
    spec.test_per_class.fill(d.synthetic);
    spec.size = d.size;
    spec.seed = seed;
    ds = data::from_synthetic(data::make_synthetic_dataset(spec));
  } else if (!d.manifest.empty()) {
    auto records = read_manifest(d).records;
    fs::path root = d.images_root.empty() ? fs::path(d.manifest).parent_path() : fs::path(d.images_root);
    ds = data::load_dataset(std::move(records), root, d.size);
  } else {
    throw ConfigError("no data: pass --synthetic N or --manifest FILE");
  }
  if (auto pair = parse_binary(d.binary)) ds = data::binary_filter(ds, pair->first, pair->second);
  data::carve_validation(ds, d.val_fraction, seed);
  return ds;
}

std::string confusion_text(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "confusion (rows = true, columns = predicted):\n";
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    for (std::size_t p = 0; p < cm.num_classes(); ++p) os << (p ? " " : "  ") << cm.count(t, p);
    os << "\n";
  }
  return os.str();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Flags shared by train, pretrain and eval that refine a TrainConfig.
struct TrainFlags {
  std::string config_file;
  std::string preset;
  std::string checkpoint;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double lr = 0.0;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  bool no_freeze = false;
  bool no_augment = false;
  std::string arch;
};

void add_train_flags(CLI::App* cmd, TrainFlags& t, bool with_preset) {
  cmd->add_option("--config", t.config_file, "JSON config; flags override its values");
  if (with_preset) {
    cmd->add_option("--preset", t.preset, "Experiment preset (" + train::preset_codes() + ")");
    cmd->add_option("--checkpoint", t.checkpoint, "Pretrained checkpoint for transfer presets");
    cmd->add_flag("--no-freeze", t.no_freeze, "Fine-tune the backbone too");
  }
  cmd->add_option("--arch", t.arch, "Architecture preset (mini_resnet, mini_densenet, resnet34, densenet121)");
  cmd->add_option("--epochs", t.epochs, "Epochs");
  cmd->add_option("--batch-size", t.batch_size, "Batch size");
  cmd->add_option("--lr", t.lr, "Base learning rate");
  cmd->add_option("--gamma", t.gamma, "Focal loss gamma");
  cmd->add_option("--alpha", t.alpha, "Focal loss alpha (all classes)");
  cmd->add_option("--seed", t.seed, "Seed");
  cmd->add_option("--workers", t.workers, "Data worker threads");
  cmd->add_flag("--no-augment", t.no_augment, "Disable augmentation");
}

train::TrainConfig resolve_config(const TrainFlags& t, train::TrainConfig base) {
  train::TrainConfig c = base;
  if (!t.config_file.empty()) {
    if (!fs::exists(t.config_file)) throw ConfigError("config file " + t.config_file + " does not exist");
    c = train::TrainConfig::from_json(read_text_file(t.config_file), c);
  }
  if (!t.preset.empty()) c.apply_preset(t.preset);
  if (!t.checkpoint.empty()) c.checkpoint = t.checkpoint;
  if (t.no_freeze) c.freeze = false;
  if (!t.arch.empty()) c.arch = t.arch;
  if (t.epochs) c.epochs = t.epochs;
  if (t.batch_size) c.batch_size = t.batch_size;
  if (t.lr > 0.0) c.base_lr = t.lr;
  if (t.gamma) c.focal.gamma = *t.gamma;
  if (t.alpha) c.focal.alpha = {*t.alpha};
  if (t.seed) c.seed = *t.seed;
  if (t.workers) c.workers = t.workers;
  if (t.no_augment) c.augment = false;
  return c;
}

int cmd_train(const TrainFlags& tf, const DataFlags& df, const std::string& out) {
  train::TrainConfig cfg = resolve_config(tf, train::TrainConfig{});
  cfg.input_size = df.size;
  if (out.empty()) throw ConfigError("--out is required");
  // Transfer presets are rejected before any data is touched.
  if (cfg.uses_checkpoint && !cfg.checkpoint) {
    throw ConfigError("preset " + cfg.preset + " fine-tunes a pretrained backbone and needs --checkpoint");
  }
  data::Dataset ds = load_data(df, cfg.seed);
  cfg.num_classes = ds.num_classes;
  cfg.validate();
  write_text_file(fs::path(out) / "config.json", cfg.to_json());
  auto result = train::fit(cfg, ds);
  train::export_metrics(result.record, out);
  nn::save_checkpoint(result.model, fs::path(out) / "model.xrnc", static_cast<std::uint32_t>(result.record.epochs.size()),
                      cfg.seed);
  const auto& r = result.record;
  std::cout << "preset " << cfg.preset << ", " << r.epochs.size() << " epoch(s)\n";
  for (const auto& m : r.epochs) {
    std::cout << "epoch " << m.epoch << " lr " << m.lr << " train_loss " << fmt(m.train_loss) << " train_acc "
              << fmt(m.train_acc) << " val_loss " << fmt(m.val_loss) << " val_acc " << fmt(m.val_acc) << "\n";
  }
  std::cout << "train_acc_avg " << fmt(r.train_acc_avg) << "\n";
  if (r.val_acc_avg) std::cout << "val_acc_avg " << fmt(*r.val_acc_avg) << "\n";
  if (r.test_accuracy) std::cout << "test_accuracy " << fmt(*r.test_accuracy) << "\n";
  if (r.test_confusion) std::cout << confusion_text(*r.test_confusion);
  if (r.abort_reason) {
    std::cerr << "run aborted: " << *r.abort_reason << "\n";
    return kFailure;
  }
  return kOk;
}

int cmd_pretrain(const TrainFlags& tf, DataFlags df, const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  train::TrainConfig cfg = train::TrainConfig::from_preset("RCE");
  cfg.epochs = 5;
  cfg = resolve_config(tf, cfg);
  if (cfg.arch.empty()) cfg.arch = "mini_resnet";
  cfg.family = nn::ArchitectureConfig::by_name(cfg.arch, 4, df.size).family;
  cfg.input_size = df.size;
  if (df.synthetic == 0 && df.manifest.empty()) df.synthetic = 20;
  data::Dataset ds = load_data(df, cfg.seed);
  cfg.num_classes = ds.num_classes;
  const fs::path ckpt(out);
  write_text_file(fs::path(ckpt.string() + ".config.json"), cfg.to_json());
  Prng init = Prng::derive(cfg.seed, "init");
  nn::Model model = nn::Model::build(cfg.architecture(), init);
  train::Trainer trainer(model, ds, cfg);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto m = trainer.train_epoch(e);
    std::cout << "epoch " << e << " train_loss " << fmt(m.train_loss) << " train_acc " << fmt(m.train_acc) << "\n";
  }
  nn::save_checkpoint(model, ckpt, static_cast<std::uint32_t>(cfg.epochs), cfg.seed);
  std::cout << "wrote " << ckpt.string() << "\n";
  return kOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& split, const std::string& loss, std::size_t batch_size,
             const DataFlags& df, std::uint64_t seed) {
  if (checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (!fs::exists(checkpoint)) throw ConfigError("checkpoint " + checkpoint + " does not exist");
  Prng rng = Prng::derive(seed, "init");
  nn::Model model = nn::model_from_checkpoint(checkpoint, rng);
  DataFlags d = df;
  d.size = model.config().input_size;
  data::Dataset ds = load_data(d, seed);
  if (ds.num_classes != model.config().num_classes) {
    throw ConfigError("checkpoint has " + std::to_string(model.config().num_classes) + " classes, data has " +
                      std::to_string(ds.num_classes));
  }
  train::TrainConfig cfg;
  cfg.loss = train::parse_loss(loss);
  cfg.batch_size = batch_size;
  const auto r = train::evaluate(model, ds, data::parse_split(split), cfg);
  std::cout << "split " << split << "\nloss " << fmt(r.loss) << "\naccuracy " << fmt(r.accuracy) << "\n"
            << confusion_text(r.confusion);
  return kOk;
}

int cmd_gradcheck(const std::string& scope, bool f64, double threshold, std::uint64_t seed, std::size_t coords) {
  GradSuiteOptions o;
  o.f64 = f64;
  o.threshold = threshold;
  o.seed = seed;
  o.model_coords_per_tensor = coords;
  const auto cases = run_grad_suite(parse_grad_scope(scope), o);
  bool ok = true;
  std::printf("%-32s %-8s %-12s %8s  %s\n", "case", "scope", "max_rel_err", "coords", "result");
  for (const auto& c : cases) {
    std::printf("%-32s %-8s %-12.4e %8zu  %s\n", c.name.c_str(), std::string(grad_scope_name(c.scope)).c_str(),
                c.report.max_rel_error, c.report.coords_checked, c.passed ? "pass" : "FAIL");
    if (!c.passed) {
      std::printf("    worst %s[%zu]: analytic %.6e numeric %.6e\n", c.report.worst.name.c_str(), c.report.worst.index,
                  c.report.worst.analytic, c.report.worst.numeric);
    }
    ok = ok && c.passed;
  }
  std::printf("threshold %.1e (%s): %s\n", o.effective_threshold(), f64 ? "f64" : "f32", ok ? "pass" : "FAIL");
  return ok ? kOk : kFailure;
}

int cmd_synth(std::size_t n, std::size_t test_n, std::size_t size, std::uint64_t seed, double amplitude, double noise,
              const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  if (n == 0) throw ConfigError("--synthetic N must be >= 1");
  data::SyntheticSpec spec;
  spec.train_per_class.fill(n);
  spec.test_per_class.fill(test_n);
  spec.size = size;
  spec.seed = seed;
  spec.amplitude = amplitude;
  spec.noise = noise;
  spec.validate();
  nlohmann::ordered_json echo;
  echo["train_per_class"] = n;
  echo["test_per_class"] = test_n;
  echo["size"] = size;
  echo["seed"] = seed;
  echo["amplitude"] = amplitude;
  echo["noise"] = noise;
  const fs::path dir(out);
  write_text_file(dir / "config.json", echo.dump(2) + "\n");
  const auto ds = data::make_synthetic_dataset(spec);
  std::string manifest = "image,label,split\n";
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    const std::string file = "images/" + std::string(data::split_name(r.split)) + "_" +
                             std::string(data::label_name(r.source)) + "_" + std::to_string(i) + ".pgm";
    data::save_pgm(ds.images[i], dir / file);
    manifest += file + "," + std::string(data::label_name(r.source)) + "," + std::string(data::split_name(r.split)) + "\n";
  }
  write_text_file(dir / "manifest.csv", manifest);
  data::ManifestConfig mapping;
  mapping.image_column = "image";
  mapping.split_column = "split";
  for (auto l : data::kAllLabels) mapping.rules.push_back({l, {{"label", std::string(data::label_name(l))}}});
  write_text_file(dir / "mapping.json", mapping.to_json());
  std::cout << "wrote " << ds.records.size() << " images, manifest.csv and mapping.json to " << dir.string() << "\n";
  return kOk;
}

int cmd_stats(const DataFlags& df, const std::string& out, bool per_sample) {
  if (out.empty()) throw ConfigError("--out is required");
  if (df.manifest.empty()) throw ConfigError("--manifest is required");
  const fs::path dir(out);
  nlohmann::ordered_json echo;
  echo["manifest"] = df.manifest;
  echo["mapping"] = df.mapping.empty() ? "builtin:coronahack" : df.mapping;
  echo["images_root"] = df.images_root;
  echo["per_sample_histograms"] = per_sample;
  write_text_file(dir / "config.json", echo.dump(2) + "\n");
  const auto result = read_manifest(df);
  const auto dist = data::class_distribution(result.records);
  write_text_file(dir / "class_distribution.csv", dist.to_csv());
  std::string skipped;
  for (const auto& s : result.skip_reasons) skipped += s + "\n";
  write_text_file(dir / "skipped.txt", skipped);
  for (auto l : data::kAllLabels) std::cout << data::label_name(l) << " " << dist.of(l) << "\n";
  std::cout << "total " << dist.total() << ", skipped " << result.skipped << "\n";
  if (!df.images_root.empty()) {
    std::vector<std::array<std::uint64_t, 256>> per_class(data::kNumLabels);
    for (auto& h : per_class) h.fill(0);
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      const auto& r = result.records[i];
      fs::path p(r.image_ref);
      if (p.is_relative()) p = fs::path(df.images_root) / p;
      const auto hist = data::intensity_histogram(data::load_image(p));
      auto& agg = per_class[static_cast<std::size_t>(r.source)];
      for (std::size_t b = 0; b < 256; ++b) agg[b] += hist[b];
      if (per_sample) {
        std::string csv = "bin,count\n";
        for (std::size_t b = 0; b < 256; ++b) csv += std::to_string(b) + "," + std::to_string(hist[b]) + "\n";
        write_text_file(dir / "histograms" / (std::to_string(i) + "_" + p.stem().string() + ".csv"), csv);
      }
    }
    std::string csv = "class,bin,count\n";
    for (auto l : data::kAllLabels) {
      for (std::size_t b = 0; b < 256; ++b) {
        csv += std::string(data::label_name(l)) + "," + std::to_string(b) + "," +
               std::to_string(per_class[static_cast<std::size_t>(l)][b]) + "\n";
      }
    }
    write_text_file(dir / "class_histograms.csv", csv);
  }
  return kOk;
}

int cmd_export_curves(const std::string& run_dir) {
  const fs::path dir(run_dir);
  if (!fs::exists(dir / "metrics.csv")) throw ConfigError("no metrics.csv in " + run_dir);
  const auto epochs = train::parse_metrics_csv(read_text_file(dir / "metrics.csv"));
  auto series = [&](const char* a, const char* b, auto get_a, auto get_b) {
    std::string csv = std::string("epoch,") + a + "," + b + "\n";
    char buf[96];
    for (const auto& m : epochs) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", m.epoch, get_a(m), get_b(m));
      csv += buf;
    }
    return csv;
  };
  write_text_file(dir / "curve_accuracy.csv", series("train_acc", "val_acc", [](const auto& m) { return m.train_acc; },
                                                      [](const auto& m) { return m.val_acc; }));
  write_text_file(dir / "curve_loss.csv", series("train_loss", "val_loss", [](const auto& m) { return m.train_loss; },
                                                  [](const auto& m) { return m.val_loss; }));
  write_text_file(dir / "curve_lr.csv",
                  series("lr", "lr_closed_form", [](const auto& m) { return m.lr; }, [](const auto& m) { return m.lr; }));
  std::vector<double> tr, va;
  for (const auto& m : epochs) {
    tr.push_back(m.train_acc);
    if (m.val_acc == m.val_acc) va.push_back(m.val_acc);
  }
  std::cout << epochs.size() << " epoch(s)\n";
  if (!tr.empty()) std::cout << "train_acc_avg " << fmt(epoch_average_accuracy(tr)) << "\n";
  if (!va.empty()) std::cout << "val_acc_avg " << fmt(epoch_average_accuracy(va)) << "\n";
  std::cout << "wrote curve_accuracy.csv, curve_loss.csv, curve_lr.csv\n";
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Chest X-ray classification toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  DataFlags data_flags;
  TrainFlags train_flags;
  std::string out;

  auto* stats = app.add_subcommand("stats", "Class distribution and intensity histograms of a manifest");
  bool per_sample = false;
  stats->add_option("--manifest", data_flags.manifest, "Manifest CSV");
  stats->add_option("--extra-manifest", data_flags.extra_manifests, "Further manifest appended (repeatable)");
  stats->add_option("--mapping", data_flags.mapping, "Manifest mapping JSON");
  stats->add_option("--images-root", data_flags.images_root, "Decode images under this root for histograms");
  stats->add_flag("--per-sample-histograms", per_sample, "Also write one histogram CSV per image");
  stats->add_option("--out", out, "Output directory");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (PGM images, manifest, mapping)");
  std::size_t synth_n = 5, synth_test = 0, synth_size = 64;
  std::uint64_t synth_seed = 0;
  double amplitude = 0.35, noise = 0.08;
  synth->add_option("--synthetic", synth_n, "Train images per class");
  synth->add_option("--test", synth_test, "Test images per class");
  synth->add_option("--size", synth_size, "Image size")->check(CLI::Range(16, 224));
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--amplitude", amplitude, "Stripe contrast in (0, 0.5]");
  synth->add_option("--noise", noise, "Gaussian noise sigma");
  synth->add_option("--out", out, "Output directory");

  auto* pretrain = app.add_subcommand("pretrain", "Train a 4-class backbone and save a checkpoint");
  add_train_flags(pretrain, train_flags, false);
  add_data_flags(pretrain, data_flags);
  pretrain->add_option("--out", out, "Checkpoint path");

  auto* trn = app.add_subcommand("train", "Run an experiment preset into a run directory");
  add_train_flags(trn, train_flags, true);
  add_data_flags(trn, data_flags);
  trn->add_option("--out", out, "Run directory");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  std::string eval_ckpt, eval_split = "test", eval_loss = "ce";
  std::size_t eval_batch = 16;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint");
  eval->add_option("--split", eval_split, "train, val or test");
  eval->add_option("--loss", eval_loss, "ce, weighted-ce or focal");
  eval->add_option("--batch-size", eval_batch, "Batch size");
  eval->add_option("--seed", eval_seed, "Seed (synthetic data and validation carve)");
  add_data_flags(eval, data_flags);

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  std::string scope = "all";
  bool f64 = false;
  double threshold = 0.0;
  std::uint64_t gc_seed = 0;
  std::size_t gc_coords = 24;
  gc->add_option("--scope", scope, "ops, losses, blocks, models or all");
  gc->add_flag("--f64", f64, "f64 verification mode");
  gc->add_option("--threshold", threshold, "Pass threshold (default 1e-2 f32, 1e-5 f64)");
  gc->add_option("--seed", gc_seed, "Seed");
  gc->add_option("--coords", gc_coords, "Coordinates probed per tensor in block/model cases (0 = all)");

  auto* curves = app.add_subcommand("export-curves", "Plot-ready curve CSVs from a run directory");
  std::string run_dir;
  curves->add_option("--run-dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*stats) return cmd_stats(data_flags, out, per_sample);
    if (*synth) return cmd_synth(synth_n, synth_test, synth_size, synth_seed, amplitude, noise, out);
    if (*pretrain) return cmd_pretrain(train_flags, data_flags, out);
    if (*trn) return cmd_train(train_flags, data_flags, out);
    if (*eval) return cmd_eval(eval_ckpt, eval_split, eval_loss, eval_batch, data_flags, eval_seed);
    if (*gc) return cmd_gradcheck(scope, f64, threshold, gc_seed, gc_coords);
    if (*curves) return cmd_export_curves(run_dir);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace xrn::cli
