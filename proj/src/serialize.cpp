/*
 * Copyright 2026 The hiexpl Authors.
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

#include "hiexpl/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "hiexpl/error.hpp"

namespace hiexpl {
namespace {

constexpr std::string_view kMagic = "HIEXPL1";
constexpr std::uint32_t kKindClassifier = 1;
constexpr std::uint32_t kKindLm = 2;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

void put_double(std::string& out, double value) {
  put_le(out, std::bit_cast<std::uint64_t>(value));
}

void put_string(std::string& out, std::string_view s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double get_double() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedError("model file truncated at byte " +
                           std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct TensorEntry {
  std::string name;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

const char* const kGateNames[kNumGates] = {"input", "forget", "output", "cell"};

// Tensor names and shapes in the same order as LstmParams::tensors().
std::vector<TensorEntry> table_for(const LstmParams& p, const std::string& prefix) {
  std::vector<TensorEntry> t;
  t.push_back({prefix + "embedding", p.embedding.rows(), p.embedding.cols()});
  for (std::size_t k = 0; k < kNumGates; ++k) {
    t.push_back({prefix + "gate_w." + kGateNames[k], p.gate_w[k].rows(),
                 p.gate_w[k].cols()});
  }
  for (std::size_t k = 0; k < kNumGates; ++k) {
    t.push_back({prefix + "gate_b." + kGateNames[k], p.gate_b[k].size(), 1});
  }
  t.push_back({prefix + "head_w", p.head_w.rows(), p.head_w.cols()});
  t.push_back({prefix + "head_b", p.head_b.size(), 1});
  return t;
}

std::string encode(std::uint32_t kind, const Vocab& vocab,
                   const std::vector<const LstmParams*>& parts,
                   const std::vector<std::string>& prefixes) {
  std::string out(kMagic);
  put_le(out, kModelFormatVersion);
  put_le(out, kind);
  put_le(out, static_cast<std::uint32_t>(vocab.size()));
  for (const auto& tok : vocab.tokens()) put_string(out, tok);

  std::vector<TensorEntry> table;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto t = table_for(*parts[i], prefixes[i]);
    table.insert(table.end(), t.begin(), t.end());
  }
  put_le(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& e : table) {
    put_string(out, e.name);
    put_le(out, e.rows);
    put_le(out, e.cols);
  }
  for (const auto* p : parts) {
    for (auto tensor : p->tensors()) {
      for (double v : tensor) put_double(out, v);
    }
  }
  return out;
}

struct Decoded {
  Vocab vocab;
  std::vector<LstmParams> parts;
};

// Reads the header and shape table, checks the table against the expected
// architecture and fills the parameters.
Decoded decode(const std::string& bytes, std::uint32_t expected_kind,
               const std::vector<std::string>& prefixes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || r.raw(kMagic.size()) != kMagic) {
    throw VersionError("not a hiexpl model file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw VersionError("unsupported model format version " +
                       std::to_string(version));
  }
  const auto kind = r.get<std::uint32_t>();
  if (kind != expected_kind) {
    throw VersionError("model file holds kind " + std::to_string(kind) +
                       ", expected " + std::to_string(expected_kind));
  }
  const auto vocab_count = r.get<std::uint32_t>();
  std::vector<std::string> tokens;
  tokens.reserve(std::min<std::size_t>(vocab_count, r.remaining()));
  for (std::uint32_t i = 0; i < vocab_count; ++i) tokens.push_back(r.get_string());
  Decoded d;
  try {
    d.vocab = Vocab::from_tokens(std::move(tokens));
  } catch (const InvalidArgument& e) {
    throw ShapeError(std::string("bad vocabulary section: ") + e.what());
  }

  const auto tensor_count = r.get<std::uint32_t>();
  std::vector<TensorEntry> table;
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    TensorEntry e;
    e.name = r.get_string();
    e.rows = r.get<std::uint64_t>();
    e.cols = r.get<std::uint64_t>();
    table.push_back(std::move(e));
  }

  constexpr std::size_t kPerPart = 3 + 2 * kNumGates;
  if (table.size() != kPerPart * prefixes.size()) {
    throw ShapeError("expected " + std::to_string(kPerPart * prefixes.size()) +
                     " tensors, found " + std::to_string(table.size()));
  }
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    const TensorEntry& emb = table[i * kPerPart];
    const TensorEntry& head = table[i * kPerPart + kPerPart - 2];
    if (emb.rows != d.vocab.size()) {
      throw ShapeError("embedding has " + std::to_string(emb.rows) +
                       " rows for a vocabulary of " +
                       std::to_string(d.vocab.size()));
    }
    constexpr std::uint64_t kMaxDim = 1u << 20;
    if (emb.cols == 0 || head.cols == 0 || head.rows == 0 ||
        emb.cols > kMaxDim || head.cols > kMaxDim || head.rows > kMaxDim) {
      throw ShapeError("implausible tensor dimensions");
    }
    LstmParams p = LstmParams::zeros(emb.rows, emb.cols, head.cols, head.rows);
    const auto expected = table_for(p, prefixes[i]);
    for (std::size_t k = 0; k < kPerPart; ++k) {
      const TensorEntry& got = table[i * kPerPart + k];
      if (got.name != expected[k].name || got.rows != expected[k].rows ||
          got.cols != expected[k].cols) {
        throw ShapeError("tensor '" + got.name + "' has shape " +
                         std::to_string(got.rows) + "x" +
                         std::to_string(got.cols) + ", expected '" +
                         expected[k].name + "' " +
                         std::to_string(expected[k].rows) + "x" +
                         std::to_string(expected[k].cols));
      }
    }
    d.parts.push_back(std::move(p));
  }
  for (auto& p : d.parts) {
    for (auto tensor : p.tensors()) {
      for (double& v : tensor) v = r.get_double();
    }
  }
  if (r.remaining() != 0) {
    throw ShapeError("payload longer than the shape table declares (" +
                     std::to_string(r.remaining()) + " extra bytes)");
  }
  for (const auto& p : d.parts) {
    for (auto tensor : p.tensors()) require_finite(tensor, "model payload");
  }
  return d;
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

std::string encode_classifier(const Vocab& vocab, const LstmParams& params) {
  params.validate();
  return encode(kKindClassifier, vocab, {&params}, {""});
}

ClassifierBundle decode_classifier(const std::string& bytes) {
  Decoded d = decode(bytes, kKindClassifier, {""});
  try {
    d.parts[0].validate();
  } catch (const DimensionError& e) {
    throw ShapeError(e.what());
  }
  return ClassifierBundle{std::move(d.vocab), std::move(d.parts[0])};
}

std::string encode_lm(const Vocab& vocab, const LmParams& lm) {
  lm.validate();
  return encode(kKindLm, vocab, {&lm.forward, &lm.backward}, {"fwd.", "bwd."});
}

LmBundle decode_lm(const std::string& bytes) {
  Decoded d = decode(bytes, kKindLm, {"fwd.", "bwd."});
  LmBundle b{std::move(d.vocab), LmParams{std::move(d.parts[0]), std::move(d.parts[1])}};
  try {
    b.lm.validate();
  } catch (const DimensionError& e) {
    throw ShapeError(e.what());
  }
  return b;
}

void save_classifier(const std::filesystem::path& path, const Vocab& vocab,
                     const LstmParams& params) {
  write_bytes(path, encode_classifier(vocab, params));
}

ClassifierBundle load_classifier(const std::filesystem::path& path) {
  return decode_classifier(read_bytes(path));
}

void save_lm(const std::filesystem::path& path, const Vocab& vocab,
             const LmParams& lm) {
  write_bytes(path, encode_lm(vocab, lm));
}

LmBundle load_lm(const std::filesystem::path& path) {
  return decode_lm(read_bytes(path));
}

}  // namespace hiexpl
