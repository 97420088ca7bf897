/*
 * Copyright 2026 The defedavg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <string>
#include <string_view>

namespace defedavg {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Maps a 128-bit counter and 64-bit key to 128
/// pseudorandom bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64_mix(std::uint64_t z);

/// 64-bit key for the pair (root_seed, label).
std::uint64_t stream_key(std::uint64_t root_seed, std::string_view label);

/// Counter-based random stream addressed by (root_seed, label).
///
/// The key is a keyed hash of the seed and the label; draws are Philox
/// blocks at consecutive counters, so two streams never share state and a
/// stream can be re-created anywhere from its address alone. Only the
/// normal sampler buffers a value; everything else is a pure function of the
/// draw position.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t root_seed, std::string label);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi);
  // Unbiased uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal (Box-Muller, second value of each pair is cached).
  double normal();

  // Stream addressed by "<label>/<suffix>" under the same root seed.
  RngStream child(std::string_view suffix) const;

  std::uint64_t root_seed() const noexcept { return root_seed_; }
  const std::string& label() const noexcept { return label_; }
  // Number of 64-bit words drawn so far.
  std::uint64_t position() const noexcept { return drawn_; }

 private:
  void refill();

  std::uint64_t root_seed_;
  std::string label_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::uint64_t drawn_ = 0;
  std::optional<double> spare_normal_;
};

/// Stream for (root_seed, label). Throws NumericError on an empty label.
RngStream derive_stream(std::uint64_t root_seed, std::string_view label);

// Fisher-Yates shuffle driven by the stream (portable, unlike std::shuffle).
template <class T>
void shuffle(std::span<T> items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace defedavg
