#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xrn/nn/model.hpp"
#include "xrn/tensor.hpp"

namespace xrn::nn {

// Layout, all integers little-endian:
//   "XRNC" | u32 version | u32 count |
//   count x { u16 name_len | name | u8 ndim | ndim x u32 dim | f32 values } |
//   u32 CRC-32 of every preceding byte
inline constexpr char kCheckpointMagic[4] = {'X', 'R', 'N', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
// Entries under this prefix carry run metadata rather than model state.
inline constexpr std::string_view kMetaPrefix = "__meta__.";

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct CheckpointMeta {
  std::string arch_name;
  std::uint64_t arch_digest = 0;
  std::uint32_t epoch = 0;
  std::uint64_t seed = 0;
  std::size_t input_channels = 0;
  std::size_t input_size = 0;
  std::size_t num_classes = 0;
};

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);
/// Throws FormatError on bad magic, unknown version, truncation, trailing
/// bytes or CRC mismatch.
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

std::vector<NamedTensor> read_checkpoint_file(const std::filesystem::path& path);
void write_checkpoint_file(const std::filesystem::path& path, std::span<const NamedTensor> tensors);

/// Metadata entries for `model`, to append to its state tensors.
std::vector<NamedTensor> meta_tensors(const Model& model, std::uint32_t epoch, std::uint64_t seed);
/// Metadata carried by a decoded file, if any.
std::optional<CheckpointMeta> extract_meta(std::span<const NamedTensor> tensors);

void save_checkpoint(const Model& model, const std::filesystem::path& path, std::uint32_t epoch = 0,
                     std::uint64_t seed = 0);

/// Copies every tensor of the file into `model`. Names and shapes must match
/// exactly; with `allow_head_mismatch` the head entries are skipped entirely
/// and the model keeps its own head. Nothing is modified unless the whole
/// file validates.
std::optional<CheckpointMeta> load_checkpoint(Model& model, const std::filesystem::path& path,
                                              bool allow_head_mismatch);

/// Rebuilds a preset-architecture model from a checkpoint's metadata and loads it.
Model model_from_checkpoint(const std::filesystem::path& path, Prng& rng);

}  // namespace xrn::nn
