// Copyright 2026 The OASS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "oass/common.hpp"
#include "oass/nn/tensor.hpp"
#include "oass/selftrain.hpp"

namespace oass::io {

namespace detail_raw {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
T from_le(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<std::uint8_t*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  return v;
}

template <typename T>
void to_le(T v, std::vector<std::uint8_t>& out) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  out.insert(out.end(), buf, buf + sizeof(T));
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace detail_raw

inline constexpr char kProbMagic[9] = "OASSPROB";
inline constexpr char kTensorMagic[9] = "OASSTENS";

/// Raw probability tensor: magic "OASSPROB", u32le H, W, C, then H*W*C
/// float32le values in (row, col, channel) order. Per-pixel sums are
/// validated to 1 within 1e-4.
inline ProbTensor load_probs(const std::string& path) {
  const auto bytes = detail_raw::read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kProbMagic, 8) != 0)
    throw IoError("'" + path + "': bad magic, not a probability tensor file");
  if (bytes.size() < 20) throw IoError("'" + path + "': truncated header");
  const auto h = detail_raw::from_le<std::uint32_t>(bytes.data() + 8);
  const auto w = detail_raw::from_le<std::uint32_t>(bytes.data() + 12);
  const auto c = detail_raw::from_le<std::uint32_t>(bytes.data() + 16);
  if (h == 0 || w == 0 || c == 0) throw IoError("'" + path + "': zero dimension");
  const std::size_t expected = 20 + static_cast<std::size_t>(h) * w * c * 4;
  if (bytes.size() != expected)
    throw IoError("'" + path + "': truncated payload (" + std::to_string(bytes.size()) + " of " +
                  std::to_string(expected) + " bytes)");
  ProbTensor out(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = detail_raw::from_le<float>(bytes.data() + 20 + i * 4);
  try {
    out.validate(1e-4);
  } catch (const ValidationError& e) {
    throw IoError("'" + path + "': not normalized: " + e.what());
  }
  return out;
}

inline void save_probs(const std::string& path, const ProbTensor& probs) {
  probs.validate(1e-4);
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kProbMagic, kProbMagic + 8);
  detail_raw::to_le<std::uint32_t>(static_cast<std::uint32_t>(probs.height), bytes);
  detail_raw::to_le<std::uint32_t>(static_cast<std::uint32_t>(probs.width), bytes);
  detail_raw::to_le<std::uint32_t>(static_cast<std::uint32_t>(probs.channels), bytes);
  for (const float v : probs.values) detail_raw::to_le<float>(v, bytes);
  detail_raw::write_file(path, bytes);
}

/// Raw double tensor: magic "OASSTENS", u32le rank, u32le dims, float64le
/// payload. Used for parameter vectors and block weights.
inline nn::Tensor load_tensor(const std::string& path) {
  const auto bytes = detail_raw::read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kTensorMagic, 8) != 0)
    throw IoError("'" + path + "': bad magic, not a tensor file");
  if (bytes.size() < 12) throw IoError("'" + path + "': truncated header");
  const auto rank = detail_raw::from_le<std::uint32_t>(bytes.data() + 8);
  if (rank == 0 || rank > 8) throw IoError("'" + path + "': unsupported rank");
  if (bytes.size() < 12 + rank * 4) throw IoError("'" + path + "': truncated header");
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (std::uint32_t d = 0; d < rank; ++d) {
    const auto dim = detail_raw::from_le<std::uint32_t>(bytes.data() + 12 + d * 4);
    if (dim == 0) throw IoError("'" + path + "': zero dimension");
    shape[d] = dim;
    count *= dim;
  }
  const std::size_t expected = 12 + rank * 4 + count * 8;
  if (bytes.size() != expected) throw IoError("'" + path + "': truncated payload");
  nn::Tensor out(shape);
  for (std::size_t i = 0; i < count; ++i)
    out.data[i] = detail_raw::from_le<double>(bytes.data() + 12 + rank * 4 + i * 8);
  return out;
}

inline void save_tensor(const std::string& path, const nn::Tensor& t) {
  detail::require(!t.shape.empty(), "cannot save a rank-0 tensor");
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kTensorMagic, kTensorMagic + 8);
  detail_raw::to_le<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()), bytes);
  for (const auto d : t.shape) detail_raw::to_le<std::uint32_t>(static_cast<std::uint32_t>(d), bytes);
  for (const double v : t.data) detail_raw::to_le<double>(v, bytes);
  detail_raw::write_file(path, bytes);
}

}  // namespace oass::io
