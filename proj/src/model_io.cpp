#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include <json.hpp>

#include "bdst/tracker.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'B', 'D', 'S', 'T'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) {
      throw ModelTruncatedError("model file truncated at byte " + std::to_string(pos_) +
                                " (needed " + std::to_string(n) + " more)");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

json header_json(const ModelBundle& m) {
  const auto& c = m.encoder_config;
  json h;
  h["format_version"] = ModelBundle::kFormatVersion;
  h["activation"] = "gelu-erf";
  h["encoder"] = {{"num_layers", c.num_layers},
                  {"hidden_size", c.hidden_size},
                  {"num_heads", c.num_heads},
                  {"feed_forward_size", c.feed_forward_size},
                  {"max_positions", c.max_positions},
                  {"vocab_size", c.vocab_size},
                  {"dropout_rate", c.dropout_rate},
                  {"layer_norm_epsilon", c.layer_norm_epsilon}};
  h["sharing"] = sharing_mode_name(m.sharing);
  h["decode"] = decode_mode_name(m.decode);
  h["context"] = {{"max_len", m.context.max_len},
                  {"append_final_sep", m.context.append_final_sep}};
  h["slots"] = m.slots;
  h["vocab"] = m.vocab.tokens();
  return h;
}

struct ParsedHeader {
  std::uint32_t version = 0;
  json header;
};

ParsedHeader read_preamble(Reader& r, std::span<const std::uint8_t> bytes) {
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ModelFormatError("not a model file (bad magic)");
  r.u32();  // magic
  ParsedHeader p;
  p.version = r.u32();
  if (p.version != ModelBundle::kFormatVersion) {
    throw ModelVersionError("unsupported model format version " + std::to_string(p.version) +
                            " (expected " + std::to_string(ModelBundle::kFormatVersion) + ")");
  }
  const auto text = r.str();
  try {
    p.header = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("model header is not valid JSON: ") + e.what());
  }
  return p;
}

struct Block {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

std::vector<Block> read_blocks(Reader& r) {
  const auto count = r.u32();
  std::vector<Block> blocks;
  blocks.reserve(count);
  for (std::uint32_t b = 0; b < count; ++b) {
    Block blk;
    blk.name = r.str();
    const auto rank = r.u32();
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      blk.shape.push_back(r.u32());
      n *= blk.shape.back();
    }
    r.need(n * 4);
    blk.values.resize(n);
    for (auto& v : blk.values) v = r.f32();
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

void verify_checksum(Reader& r, std::span<const std::uint8_t> bytes) {
  const auto body_end = r.pos();
  const auto stored = r.u32();
  if (r.remaining() != 0) throw ModelFormatError("trailing bytes after model checksum");
  if (crc32_of(bytes.first(body_end)) != stored) throw ModelChecksumError("model file checksum mismatch");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::uint8_t> serialize_model(ModelBundle& model) {
  model.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(ModelBundle::kFormatVersion);
  w.str(header_json(model).dump());
  const auto params = model.named_parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (auto d : t->shape()) w.u32(static_cast<std::uint32_t>(d));
    for (auto v : t->values()) w.f32(static_cast<float>(v));
  }
  w.u32(crc32_of(w.data()));
  return std::move(w.data());
}

ModelBundle deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto pre = read_preamble(r, bytes);
  auto blocks = read_blocks(r);
  verify_checksum(r, bytes);

  const auto& h = pre.header;
  ModelBundle m;
  try {
    const auto& e = h.at("encoder");
    m.encoder_config.num_layers = e.at("num_layers");
    m.encoder_config.hidden_size = e.at("hidden_size");
    m.encoder_config.num_heads = e.at("num_heads");
    m.encoder_config.feed_forward_size = e.at("feed_forward_size");
    m.encoder_config.max_positions = e.at("max_positions");
    m.encoder_config.vocab_size = e.at("vocab_size");
    m.encoder_config.dropout_rate = e.at("dropout_rate");
    m.encoder_config.layer_norm_epsilon = e.at("layer_norm_epsilon");
    m.sharing = parse_sharing_mode(h.at("sharing").get<std::string>());
    m.decode = parse_decode_mode(h.at("decode").get<std::string>());
    m.context.max_len = h.at("context").at("max_len");
    m.context.append_final_sep = h.at("context").at("append_final_sep");
    m.slots = h.at("slots").get<std::vector<std::string>>();
    m.vocab = Vocab(h.at("vocab").get<std::vector<std::string>>());
    if (h.at("activation") != "gelu-erf") throw ModelFormatError("unsupported activation");
  } catch (const json::exception& ex) {
    throw ModelFormatError(std::string("model header missing or malformed field: ") + ex.what());
  }
  m.encoder_config.validate();
  const std::size_t num_encoders = m.sharing == SharingMode::Shared ? 1 : m.slots.size();
  m.encoders.assign(num_encoders, EncoderWeights(m.encoder_config));
  m.heads.assign(m.slots.size(), SlotHeadWeights(m.encoder_config.hidden_size));
  m.validate();

  std::unordered_map<std::string, Block*> by_name;
  for (auto& b : blocks) by_name.emplace(b.name, &b);
  const auto params = m.named_parameters();
  if (params.size() != blocks.size()) {
    throw ModelFormatError("model file has " + std::to_string(blocks.size()) +
                           " parameter blocks, expected " + std::to_string(params.size()));
  }
  for (const auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ModelFormatError("model file lacks parameter " + name);
    if (it->second->shape != t->shape()) {
      throw ModelFormatError("parameter " + name + " has shape " + shape_str(it->second->shape) +
                             ", expected " + shape_str(t->shape()));
    }
    auto dst = t->values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(it->second->values[i]);
  }
  return m;
}

void save_model(ModelBundle& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model file " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return deserialize_model(bytes);
}

ModelFileSummary inspect_model_file(const std::filesystem::path& path) {
  return inspect_model_bytes(read_file(path));
}

ModelFileSummary inspect_model_bytes(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  ModelFileSummary s;
  s.version = read_preamble(r, bytes).version;
  const auto blocks = read_blocks(r);
  verify_checksum(r, bytes);
  s.block_count = blocks.size();
  for (const auto& b : blocks) s.stored_scalars += b.values.size();
  return s;
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
