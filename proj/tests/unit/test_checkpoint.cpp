#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "xrn/error.hpp"
#include "xrn/nn/checkpoint.hpp"
#include "xrn/nn/model.hpp"
#include "xrn/prng.hpp"

using namespace xrn;
using namespace xrn::nn;
namespace fs = std::filesystem;

namespace {

// Bitwise reflected CRC-32 (polynomial 0xEDB88320).
std::uint32_t crc32_reference(const std::uint8_t* p, std::size_t n) {
  std::uint32_t c = 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) {
    c ^= p[i];
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xedb88320u & (0u - (c & 1u)));
  }
  return ~c;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "xrn_checkpoint_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

Model make_model(std::uint64_t seed, std::size_t classes = 4) {
  Prng rng(seed, 0);
  return Model::build(ArchitectureConfig::mini_resnet(classes, 32), rng);
}

}  // namespace

TEST(CheckpointFormat, ByteLayoutMatchesHandEncoding) {
  std::vector<NamedTensor> tensors{{"ab", Tensor(Shape{2}, std::vector<float>{1.0f, -2.5f})},
                                   {"c", Tensor(Shape{1, 1}, std::vector<float>{0.25f})}};
  std::vector<std::uint8_t> expected{'X', 'R', 'N', 'C'};
  put_u32(expected, 1);
  put_u32(expected, 2);
  auto put_tensor = [&](const std::string& name, const std::vector<std::uint32_t>& dims, const std::vector<float>& v) {
    expected.push_back(static_cast<std::uint8_t>(name.size()));
    expected.push_back(0);
    expected.insert(expected.end(), name.begin(), name.end());
    expected.push_back(static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims) put_u32(expected, d);
    for (float f : v) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(expected, bits);
    }
  };
  put_tensor("ab", {2}, {1.0f, -2.5f});
  put_tensor("c", {1, 1}, {0.25f});
  put_u32(expected, crc32_reference(expected.data(), expected.size()));
  EXPECT_EQ(encode_checkpoint(tensors), expected);
  const auto decoded = decode_checkpoint(expected);
  ASSERT_EQ(decoded.size(), 2u);
  EXPECT_EQ(decoded[0].name, "ab");
  EXPECT_TRUE(bit_equal(decoded[1].tensor, tensors[1].tensor));
}

TEST(CheckpointFormat, GuardsRejectCorruption) {
  std::vector<NamedTensor> tensors{{"w", Tensor(Shape{3}, 1.5f)}};
  const auto good = encode_checkpoint(tensors);
  auto bad_magic = good;
  bad_magic[0] = 'Y';
  EXPECT_THROW(decode_checkpoint(bad_magic), FormatError);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_checkpoint(bad_version), FormatError);
  auto truncated = good;
  truncated.resize(good.size() - 7);
  EXPECT_THROW(decode_checkpoint(truncated), FormatError);
  auto flipped = good;
  flipped[good.size() - 6] ^= 0x01;
  EXPECT_THROW(decode_checkpoint(flipped), FormatError);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), FormatError);
}

TEST(Checkpoint, RoundTripBitExact) {
  Model a = make_model(1);
  Model b = make_model(2);
  const auto path = temp_path("roundtrip.xrnc");
  save_checkpoint(a, path, 7, 99);
  auto meta = load_checkpoint(b, path, false);
  ASSERT_TRUE(meta.has_value());
  EXPECT_EQ(meta->epoch, 7u);
  EXPECT_EQ(meta->seed, 99u);
  EXPECT_EQ(meta->arch_name, "mini_resnet");
  EXPECT_EQ(meta->arch_digest, a.config().backbone_digest());
  const auto sa = a.state();
  const auto sb = b.state();
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_TRUE(bit_equal(*sa[i].second, *sb[i].second)) << sa[i].first;
  // Saving the loaded model reproduces the file byte for byte, CRC included.
  const auto again = temp_path("roundtrip2.xrnc");
  save_checkpoint(b, again, 7, 99);
  EXPECT_EQ(read_bytes(path), read_bytes(again));
}

TEST(Checkpoint, CorruptMagicRejectedOnLoad) {
  Model a = make_model(1);
  const auto path = temp_path("magic.xrnc");
  save_checkpoint(a, path);
  auto bytes = read_bytes(path);
  bytes[1] = 'Q';
  write_bytes(path, bytes);
  EXPECT_THROW(load_checkpoint(a, path, false), FormatError);
}

TEST(Checkpoint, ShapeMismatchRejectedAndNothingModified) {
  Model four = make_model(1, 4);
  Model two = make_model(2, 2);
  const auto path = temp_path("four.xrnc");
  save_checkpoint(four, path);
  const Tensor before = two.parameters().at("stem.conv.kernel").value();
  EXPECT_THROW(load_checkpoint(two, path, false), ShapeError);
  EXPECT_TRUE(bit_equal(before, two.parameters().at("stem.conv.kernel").value()));
}

TEST(Checkpoint, HeadMismatchAllowedWhenRequested) {
  Model four = make_model(1, 4);
  Model two = make_model(2, 2);
  const auto path = temp_path("four_head.xrnc");
  save_checkpoint(four, path);
  const Tensor head = two.parameters().at("head.weight").value();
  EXPECT_NO_THROW(load_checkpoint(two, path, true));
  EXPECT_TRUE(bit_equal(head, two.parameters().at("head.weight").value()));
  EXPECT_TRUE(bit_equal(four.parameters().at("stem.conv.kernel").value(), two.parameters().at("stem.conv.kernel").value()));
}

TEST(Checkpoint, LoadIntoDifferentArchitectureRejected) {
  Model a = make_model(1);
  Prng rng(3, 0);
  Model d = Model::build(ArchitectureConfig::mini_densenet(4, 32), rng);
  const auto path = temp_path("arch.xrnc");
  save_checkpoint(a, path);
  EXPECT_THROW(load_checkpoint(d, path, true), ShapeError);
}

TEST(Checkpoint, RoundTripAfterHeadReplacement) {
  Model a = make_model(1, 4);
  Prng head_rng(5, 0);
  a.replace_head(2, head_rng);
  const auto path = temp_path("replaced.xrnc");
  save_checkpoint(a, path);
  Model b = make_model(4, 2);
  load_checkpoint(b, path, false);
  const auto sa = a.state();
  const auto sb = b.state();
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_TRUE(bit_equal(*sa[i].second, *sb[i].second)) << sa[i].first;
  Prng rng(0, 0);
  Model rebuilt = model_from_checkpoint(path, rng);
  EXPECT_EQ(rebuilt.config().num_classes, 2u);
  EXPECT_TRUE(bit_equal(rebuilt.parameters().at("head.weight").value(), a.parameters().at("head.weight").value()));
}

TEST(Checkpoint, MissingFileIsFormatError) {
  Model a = make_model(1);
  EXPECT_THROW(load_checkpoint(a, temp_path("does_not_exist.xrnc"), false), FormatError);
}
