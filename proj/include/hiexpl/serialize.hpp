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

// Binary model container.
//
// Layout (all integers little-endian):
//
//   "HIEXPL1"            7-byte magic
//   u32 version          currently 1
//   u32 kind             1 = classifier, 2 = language model
//   u32 vocab_count      then per token: u32 byte length, UTF-8 bytes
//   u32 tensor_count     then per tensor: u32 name length, name,
//                        u64 rows, u64 cols
//   payload              every tensor's values in table order as
//                        little-endian IEEE-754 binary64
//
// A wrong magic or version raises VersionError, a shape table that does not
// describe a consistent LSTM raises ShapeError, and a file that ends early
// raises TruncatedError.

#ifndef HIEXPL_SERIALIZE_HPP_
#define HIEXPL_SERIALIZE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "hiexpl/corpus.hpp"
#include "hiexpl/model.hpp"

namespace hiexpl {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ClassifierBundle {
  Vocab vocab;
  LstmParams params;
};

struct LmBundle {
  Vocab vocab;
  LmParams lm;
};

std::string encode_classifier(const Vocab& vocab, const LstmParams& params);
ClassifierBundle decode_classifier(const std::string& bytes);
std::string encode_lm(const Vocab& vocab, const LmParams& lm);
LmBundle decode_lm(const std::string& bytes);

void save_classifier(const std::filesystem::path& path, const Vocab& vocab,
                     const LstmParams& params);
ClassifierBundle load_classifier(const std::filesystem::path& path);
void save_lm(const std::filesystem::path& path, const Vocab& vocab,
             const LmParams& lm);
LmBundle load_lm(const std::filesystem::path& path);

}  // namespace hiexpl

#endif  // HIEXPL_SERIALIZE_HPP_
