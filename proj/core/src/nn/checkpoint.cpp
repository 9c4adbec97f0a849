#include "xrn/nn/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "xrn/error.hpp"

namespace xrn::nn {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                        std::to_string(pos_));
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void push_u64_chunks(std::vector<float>& out, std::uint64_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<float>((v >> (16 * i)) & 0xffffu));
}

std::uint64_t read_u64_chunks(const Tensor& t) {
  if (t.size() != 4) throw FormatError("checkpoint metadata: 64-bit field must have 4 chunks");
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint64_t>(t[i]) << (16 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors) {
  Writer w;
  w.raw(std::string_view(kCheckpointMagic, 4));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    if (nt.name.empty() || nt.name.size() > 0xffff) throw ConfigError("checkpoint: invalid tensor name length");
    if (nt.tensor.ndim() > 0xff) throw ConfigError("checkpoint: tensor '" + nt.name + "' has too many dimensions");
    w.u16(static_cast<std::uint16_t>(nt.name.size()));
    w.raw(nt.name);
    w.u8(static_cast<std::uint8_t>(nt.tensor.ndim()));
    for (auto d : nt.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : nt.tensor.data()) w.f32(v);
  }
  const std::uint32_t crc = crc32_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic (expected \"XRNC\")");
  }
  if (bytes.size() < 16) throw FormatError("checkpoint truncated: header incomplete");
  const std::size_t body = bytes.size() - 4;
  Reader r(bytes.first(body));
  r.str(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16("name length");
    std::string name = r.str(len, "tensor name");
    const std::uint8_t ndim = r.u8("rank");
    Shape shape;
    std::size_t numel = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const std::uint32_t dim = r.u32("dimension");
      if (dim == 0) throw FormatError("checkpoint: tensor '" + name + "' has a zero dimension");
      shape.push_back(dim);
      numel *= dim;
    }
    r.need(numel * 4, "tensor values");
    std::vector<float> values(numel);
    for (auto& v : values) v = std::bit_cast<float>(r.u32("tensor values"));
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  if (r.pos() != body) {
    throw FormatError("checkpoint: " + std::to_string(body - r.pos()) + " unexpected bytes before CRC");
  }
  Reader tail(bytes.subspan(body));
  const std::uint32_t stored = tail.u32("crc");
  const std::uint32_t actual = crc32_of(bytes.first(body));
  if (stored != actual) throw FormatError("checkpoint: CRC mismatch (file corrupt)");
  return out;
}

std::vector<NamedTensor> read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_checkpoint_file(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  const auto bytes = encode_checkpoint(tensors);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write on checkpoint " + path.string());
}

std::vector<NamedTensor> meta_tensors(const Model& model, std::uint32_t epoch, std::uint64_t seed) {
  const auto& cfg = model.config();
  std::vector<NamedTensor> out;
  std::vector<float> name(cfg.name.begin(), cfg.name.end());
  if (name.empty()) name.push_back(0.0f);
  out.push_back({std::string(kMetaPrefix) + "arch", Tensor(Shape{name.size()}, name)});
  std::vector<float> digest;
  push_u64_chunks(digest, cfg.backbone_digest());
  out.push_back({std::string(kMetaPrefix) + "digest", Tensor(Shape{4}, digest)});
  std::vector<float> s;
  push_u64_chunks(s, seed);
  out.push_back({std::string(kMetaPrefix) + "seed", Tensor(Shape{4}, s)});
  out.push_back({std::string(kMetaPrefix) + "epoch",
                 Tensor(Shape{2}, {static_cast<float>(epoch & 0xffffu), static_cast<float>(epoch >> 16)})});
  out.push_back({std::string(kMetaPrefix) + "geometry",
                 Tensor(Shape{3}, {static_cast<float>(cfg.input_channels), static_cast<float>(cfg.input_size),
                                   static_cast<float>(cfg.num_classes)})});
  return out;
}

std::optional<CheckpointMeta> extract_meta(std::span<const NamedTensor> tensors) {
  std::map<std::string, const Tensor*> meta;
  for (const auto& nt : tensors) {
    if (nt.name.rfind(kMetaPrefix, 0) == 0) meta[nt.name.substr(kMetaPrefix.size())] = &nt.tensor;
  }
  if (meta.empty()) return std::nullopt;
  CheckpointMeta m;
  auto get = [&](const char* key) -> const Tensor& {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError(std::string("checkpoint metadata missing '") + key + "'");
    return *it->second;
  };
  for (float c : get("arch").data()) {
    if (c != 0.0f) m.arch_name.push_back(static_cast<char>(c));
  }
  m.arch_digest = read_u64_chunks(get("digest"));
  m.seed = read_u64_chunks(get("seed"));
  const Tensor& ep = get("epoch");
  if (ep.size() != 2) throw FormatError("checkpoint metadata: bad epoch field");
  m.epoch = static_cast<std::uint32_t>(ep[0]) | (static_cast<std::uint32_t>(ep[1]) << 16);
  const Tensor& geo = get("geometry");
  if (geo.size() != 3) throw FormatError("checkpoint metadata: bad geometry field");
  m.input_channels = static_cast<std::size_t>(geo[0]);
  m.input_size = static_cast<std::size_t>(geo[1]);
  m.num_classes = static_cast<std::size_t>(geo[2]);
  return m;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path, std::uint32_t epoch,
                     std::uint64_t seed) {
  std::vector<NamedTensor> tensors;
  for (const auto& [name, t] : model.state()) tensors.push_back({name, *t});
  for (auto& m : meta_tensors(model, epoch, seed)) tensors.push_back(std::move(m));
  write_checkpoint_file(path, tensors);
}

std::optional<CheckpointMeta> load_checkpoint(Model& model, const std::filesystem::path& path,
                                              bool allow_head_mismatch) {
  const auto file = read_checkpoint_file(path);
  std::map<std::string, const Tensor*> incoming;
  for (const auto& nt : file) {
    if (nt.name.rfind(kMetaPrefix, 0) == 0) continue;
    if (!incoming.emplace(nt.name, &nt.tensor).second) {
      throw FormatError(path.string() + ": duplicate tensor '" + nt.name + "'");
    }
  }
  auto targets = model.state();
  std::vector<std::pair<BasicTensor<float>*, const Tensor*>> plan;
  for (auto& [name, dst] : targets) {
    const bool head = Model::is_head_name(name);
    if (head && allow_head_mismatch) {
      incoming.erase(name);
      continue;
    }
    auto it = incoming.find(name);
    if (it == incoming.end()) throw ShapeError(path.string() + ": missing tensor '" + name + "'");
    if (it->second->shape() != dst->shape()) {
      throw ShapeError(path.string() + ": tensor '" + name + "' has shape " + shape_str(it->second->shape()) +
                       ", model expects " + shape_str(dst->shape()) +
                       (head ? " (pass allow_head_mismatch to replace the head)" : ""));
    }
    plan.emplace_back(dst, it->second);
    incoming.erase(it);
  }
  if (!incoming.empty()) {
    throw ShapeError(path.string() + ": tensor '" + incoming.begin()->first + "' does not exist in the model");
  }
  for (auto& [dst, src] : plan) *dst = *src;
  return extract_meta(file);
}

Model model_from_checkpoint(const std::filesystem::path& path, Prng& rng) {
  const auto file = read_checkpoint_file(path);
  const auto meta = extract_meta(file);
  if (!meta) throw FormatError(path.string() + ": no architecture metadata; cannot rebuild the model");
  auto cfg = ArchitectureConfig::by_name(meta->arch_name, meta->num_classes, meta->input_size);
  cfg.input_channels = meta->input_channels;
  if (cfg.backbone_digest() != meta->arch_digest) {
    throw FormatError(path.string() + ": architecture digest does not match preset '" + meta->arch_name + "'");
  }
  Model model = Model::build(cfg, rng);
  load_checkpoint(model, path, false);
  return model;
}

}  // namespace xrn::nn
