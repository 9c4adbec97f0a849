#include "xrn/train/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"
#include "xrn/error.hpp"

namespace xrn::train {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

}  // namespace

std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: return "ce";
    case LossKind::WeightedCrossEntropy: return "weighted-ce";
    case LossKind::Focal: return "focal";
  }
  return "?";
}

LossKind parse_loss(std::string_view text) {
  const std::string u = upper(text);
  if (u == "CE") return LossKind::CrossEntropy;
  if (u == "WEIGHTED-CE" || u == "WCE") return LossKind::WeightedCrossEntropy;
  if (u == "FOCAL" || u == "FL") return LossKind::Focal;
  throw ConfigError("unknown loss '" + std::string(text) + "' (ce, weighted-ce, focal)");
}

std::string_view sampler_name(SamplerKind kind) { return kind == SamplerKind::Plain ? "plain" : "weighted"; }

SamplerKind parse_sampler(std::string_view text) {
  const std::string u = upper(text);
  if (u == "PLAIN") return SamplerKind::Plain;
  if (u == "WEIGHTED") return SamplerKind::Weighted;
  throw ConfigError("unknown sampler '" + std::string(text) + "' (plain, weighted)");
}

const std::vector<Preset>& presets() {
  using nn::Family;
  static const std::vector<Preset> table = {
      {"PRCE", Family::ResNet, true, LossKind::CrossEntropy, SamplerKind::Plain},
      {"PRCEW", Family::ResNet, true, LossKind::CrossEntropy, SamplerKind::Weighted},
      {"PRFL", Family::ResNet, true, LossKind::Focal, SamplerKind::Plain},
      {"PDCXCE", Family::DenseNet, true, LossKind::CrossEntropy, SamplerKind::Plain},
      {"PDCXFL", Family::DenseNet, true, LossKind::Focal, SamplerKind::Plain},
      {"RCE", Family::ResNet, false, LossKind::CrossEntropy, SamplerKind::Plain},
      {"RFL", Family::ResNet, false, LossKind::Focal, SamplerKind::Plain},
  };
  return table;
}

std::string preset_codes() {
  std::string out;
  for (const auto& p : presets()) out += (out.empty() ? "" : ", ") + p.code;
  return out + " (PRCW = PRCEW)";
}

const Preset& resolve_preset(std::string_view code) {
  std::string u = upper(code);
  if (u == "PRCW") u = "PRCEW";
  for (const auto& p : presets()) {
    if (p.code == u) return p;
  }
  throw ConfigError("unknown preset '" + std::string(code) + "'; valid codes: " + preset_codes());
}

void TrainConfig::apply_preset(std::string_view code) {
  const Preset& p = resolve_preset(code);
  preset = p.code;
  family = p.family;
  uses_checkpoint = p.uses_checkpoint;
  loss = p.loss;
  sampler = p.sampler;
}

TrainConfig TrainConfig::from_preset(std::string_view code) {
  TrainConfig c;
  c.apply_preset(code);
  return c;
}

std::string TrainConfig::arch_name() const {
  if (!arch.empty()) return arch;
  return family == nn::Family::ResNet ? "mini_resnet" : "mini_densenet";
}

nn::ArchitectureConfig TrainConfig::architecture() const {
  auto a = nn::ArchitectureConfig::by_name(arch_name(), num_classes, input_size);
  if (a.family != family) {
    throw ConfigError("architecture " + arch_name() + " is not of the " + nn::family_name(family) +
                      " family required by preset " + preset);
  }
  return a;
}

void TrainConfig::validate() const {
  resolve_preset(preset);
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ConfigError("base learning rate must be positive");
  if (lr_step < 1) throw ConfigError("lr step must be >= 1");
  if (!(lr_factor > 0.0 && lr_factor <= 1.0)) throw ConfigError("lr factor must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(focal.gamma >= 0.0)) throw ConfigError("focal gamma must be >= 0");
  for (double a : focal.alpha) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("focal alpha must lie in (0, 1]");
  }
  augmentation.validate();
  if (uses_checkpoint && !checkpoint) {
    throw ConfigError("preset " + preset + " fine-tunes a pretrained backbone and needs --checkpoint");
  }
  if (checkpoint && !std::filesystem::exists(*checkpoint)) {
    throw ConfigError("checkpoint " + checkpoint->string() + " does not exist");
  }
  architecture().validate();
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["preset"] = preset;
  j["family"] = nn::family_name(family);
  j["arch"] = arch_name();
  j["checkpoint"] = checkpoint ? nlohmann::ordered_json(checkpoint->string()) : nlohmann::ordered_json(nullptr);
  j["freeze"] = freeze;
  j["loss"] = std::string(loss_name(loss));
  j["focal_alpha"] = focal.alpha;
  j["focal_gamma"] = focal.gamma;
  j["sampler"] = std::string(sampler_name(sampler));
  j["epochs"] = epochs;
  j["base_lr"] = base_lr;
  j["lr_step"] = lr_step;
  j["lr_factor"] = lr_factor;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["num_classes"] = num_classes;
  j["input_size"] = input_size;
  j["augment"] = augment;
  j["p_hflip"] = augmentation.p_hflip;
  j["p_vflip"] = augmentation.p_vflip;
  j["p_rotate"] = augmentation.p_rotate;
  j["max_rotation_degrees"] = augmentation.max_rotation_degrees;
  j["workers"] = workers;
  j["steps_per_epoch"] = steps_per_epoch;
  return j.dump(2) + "\n";
}

TrainConfig TrainConfig::from_json(std::string_view json_text, const TrainConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  TrainConfig c = base;
  try {
    // The preset goes first so explicit keys below can refine it.
    if (j.contains("preset")) c.apply_preset(j.at("preset").get<std::string>());
    for (const auto& [key, val] : j.items()) {
      if (key == "preset" || key == "family") continue;
      if (key == "arch") c.arch = val.get<std::string>();
      else if (key == "checkpoint") {
        if (val.is_null()) c.checkpoint.reset();
        else c.checkpoint = val.get<std::string>();
      } else if (key == "freeze") c.freeze = val.get<bool>();
      else if (key == "loss") c.loss = parse_loss(val.get<std::string>());
      else if (key == "focal_alpha") {
        c.focal.alpha = val.is_array() ? val.get<std::vector<double>>() : std::vector<double>{val.get<double>()};
      } else if (key == "focal_gamma") c.focal.gamma = val.get<double>();
      else if (key == "sampler") c.sampler = parse_sampler(val.get<std::string>());
      else if (key == "epochs") c.epochs = val.get<std::size_t>();
      else if (key == "base_lr") c.base_lr = val.get<double>();
      else if (key == "lr_step") c.lr_step = val.get<std::size_t>();
      else if (key == "lr_factor") c.lr_factor = val.get<double>();
      else if (key == "batch_size") c.batch_size = val.get<std::size_t>();
      else if (key == "seed") c.seed = val.get<std::uint64_t>();
      else if (key == "num_classes") c.num_classes = val.get<std::size_t>();
      else if (key == "input_size") c.input_size = val.get<std::size_t>();
      else if (key == "augment") c.augment = val.get<bool>();
      else if (key == "p_hflip") c.augmentation.p_hflip = val.get<double>();
      else if (key == "p_vflip") c.augmentation.p_vflip = val.get<double>();
      else if (key == "p_rotate") c.augmentation.p_rotate = val.get<double>();
      else if (key == "max_rotation_degrees") c.augmentation.max_rotation_degrees = val.get<double>();
      else if (key == "workers") c.workers = val.get<std::size_t>();
      else if (key == "steps_per_epoch") c.steps_per_epoch = val.get<std::size_t>();
      else throw ConfigError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

}  // namespace xrn::train
