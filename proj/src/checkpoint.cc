/*
 * Copyright 2026 The TabCF Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tabcf/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include "tabcf/errors.h"

namespace tabcf {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'B', 'C', 'F', 'C', 'K', 'P'};

class Writer {
 public:
  void U32(std::uint32_t v) { Raw(v, 4); }
  void U64(std::uint64_t v) { Raw(v, 8); }
  void I64(std::int64_t v) { Raw(static_cast<std::uint64_t>(v), 8); }
  void F64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    Raw(bits, 8);
  }
  void Str(const std::string& s) {
    U32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void Meta(const MetaList& meta) {
    U32(static_cast<std::uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
      Str(k);
      I64(v);
    }
  }
  std::vector<unsigned char> Take() { return std::move(bytes_); }
  void Bytes(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }

 private:
  void Raw(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}
  std::uint32_t U32() { return static_cast<std::uint32_t>(Raw(4)); }
  std::uint64_t U64() { return Raw(8); }
  std::int64_t I64() { return static_cast<std::int64_t>(Raw(8)); }
  double F64() {
    const std::uint64_t bits = Raw(8);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string Str() {
    const std::uint32_t n = U32();
    Need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  MetaList Meta() {
    MetaList m;
    const std::uint32_t n = U32();
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string k = Str();
      m.emplace_back(std::move(k), I64());
    }
    return m;
  }
  void Expect(const char* p, std::size_t n) {
    Need(n);
    if (std::memcmp(b_.data() + pos_, p, n) != 0) {
      throw DataError("checkpoint: bad magic");
    }
    pos_ += n;
  }
  bool AtEnd() const { return pos_ == b_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw DataError("checkpoint: truncated file");
  }
  std::uint64_t Raw(int n) {
    Need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

CheckpointSection ToSection(std::string name, MetaList meta, const NamedTensors& params) {
  CheckpointSection s;
  s.name = std::move(name);
  s.meta = std::move(meta);
  for (const auto& [pname, t] : params) s.blocks.emplace_back(pname, Tensor(t->shape(), t->data()));
  return s;
}

void FillFromSection(const CheckpointSection& s, const NamedTensors& params) {
  if (s.blocks.size() != params.size()) {
    throw DataError("checkpoint section '" + s.name + "' has " +
                    std::to_string(s.blocks.size()) + " blocks, model expects " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [bname, block] = s.blocks[i];
    const auto& [pname, t] = params[i];
    if (bname != pname || block.shape() != t->shape()) {
      throw DataError("checkpoint section '" + s.name + "': block '" + bname + "' " +
                      ShapeToString(block.shape()) + " does not match '" + pname +
                      "' " + ShapeToString(t->shape()));
    }
    *t = block;
  }
}

}  // namespace

std::int64_t CheckpointSection::Meta(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw DataError("checkpoint section '" + name + "' lacks '" + key + "'");
}

const CheckpointSection& Checkpoint::Section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return s;
  }
  throw DataError("checkpoint has no section '" + name + "'");
}

std::vector<unsigned char> SerializeCheckpoint(const Checkpoint& ckpt) {
  Writer w;
  w.Bytes(kMagic, sizeof(kMagic));
  w.U32(kCheckpointVersion);
  w.U64(ckpt.schema_hash);
  w.U64(ckpt.seed);
  w.Meta(ckpt.meta);
  w.U32(static_cast<std::uint32_t>(ckpt.sections.size()));
  for (const auto& s : ckpt.sections) {
    w.Str(s.name);
    w.Meta(s.meta);
    w.U32(static_cast<std::uint32_t>(s.blocks.size()));
    for (const auto& [name, t] : s.blocks) {
      w.Str(name);
      w.U32(static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) w.U64(d);
      for (double v : t.values()) w.F64(v);
    }
  }
  return w.Take();
}

Checkpoint DeserializeCheckpoint(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  r.Expect(kMagic, sizeof(kMagic));
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported");
  }
  Checkpoint c;
  c.schema_hash = r.U64();
  c.seed = r.U64();
  c.meta = r.Meta();
  const std::uint32_t n_sections = r.U32();
  for (std::uint32_t s = 0; s < n_sections; ++s) {
    CheckpointSection sec;
    sec.name = r.Str();
    sec.meta = r.Meta();
    const std::uint32_t n_blocks = r.U32();
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
      std::string name = r.Str();
      const std::uint32_t rank = r.U32();
      if (rank > 8) throw DataError("checkpoint: implausible rank");
      Shape shape(rank);
      for (auto& d : shape) d = r.U64();
      std::vector<double> vals(NumElements(shape));
      for (double& v : vals) v = r.F64();
      sec.blocks.emplace_back(std::move(name), Tensor(std::move(shape), std::move(vals)));
    }
    c.sections.push_back(std::move(sec));
  }
  if (!r.AtEnd()) throw DataError("checkpoint: trailing bytes");
  return c;
}

void WriteCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = SerializeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Checkpoint ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes);
}

CheckpointSection VaeToSection(VaeModel& model) {
  const VaeArch& a = model.arch();
  MetaList meta{{"layers", static_cast<std::int64_t>(a.layers)},
                {"heads", static_cast<std::int64_t>(a.heads)},
                {"token_dim", static_cast<std::int64_t>(a.token_dim)},
                {"ffn_dim", static_cast<std::int64_t>(a.ffn_dim)},
                {"latent_dim", static_cast<std::int64_t>(a.latent_dim)}};
  return ToSection("vae", std::move(meta), model.Parameters());
}

VaeModel VaeFromSection(const CheckpointSection& section, const TableSchema& schema) {
  VaeArch a;
  a.layers = static_cast<std::size_t>(section.Meta("layers"));
  a.heads = static_cast<std::size_t>(section.Meta("heads"));
  a.token_dim = static_cast<std::size_t>(section.Meta("token_dim"));
  a.ffn_dim = static_cast<std::size_t>(section.Meta("ffn_dim"));
  a.latent_dim = static_cast<std::size_t>(section.Meta("latent_dim"));
  VaeModel m = VaeModel::Init(schema, a, 0);
  FillFromSection(section, m.Parameters());
  return m;
}

CheckpointSection ClassifierToSection(Classifier& model) {
  MetaList meta{{"input_width", static_cast<std::int64_t>(model.input_width())},
                {"hidden", static_cast<std::int64_t>(model.hidden())}};
  return ToSection("classifier", std::move(meta), model.Parameters());
}

Classifier ClassifierFromSection(const CheckpointSection& section) {
  Classifier c = Classifier::Init(static_cast<std::size_t>(section.Meta("input_width")),
                                  static_cast<std::size_t>(section.Meta("hidden")), 0);
  FillFromSection(section, c.Parameters());
  return c;
}

}  // namespace tabcf
