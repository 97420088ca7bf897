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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "defedavg/rng.hpp"

namespace defedavg {

/// Row-major feature matrix with integer labels in [0, num_classes).
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * cols, cols);
  }
};

// Checks sizes, label range and feature finiteness. Throws DataError.
void validate_dataset(const Dataset& data);

// ---------------------------------------------------------------------------
// IDX ingestion (big-endian; magic 0x00000803 images, 0x00000801 labels).

struct IdxImages {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // count * height * width, scaled to [0, 1]
};

struct IdxLabels {
  std::vector<int> labels;
};

using IdxContents = std::variant<IdxImages, IdxLabels>;

IdxContents parse_idx(std::span<const std::uint8_t> bytes, std::string_view source = "<memory>");
IdxContents read_idx(const std::filesystem::path& path);

// Pairs an image file with its label file; count mismatch is a DataError.
Dataset pair_idx(const IdxImages& images, const IdxLabels& labels);
Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

// ---------------------------------------------------------------------------
// Synthetic Gaussian-blob classification data.

struct SyntheticSpec {
  std::size_t train_samples = 1000;
  std::size_t test_samples = 500;
  std::size_t features = 10;
  std::size_t classes = 2;
  double separation = 2.0;  // distance of each class mean from the origin
};

struct SyntheticData {
  Dataset train;
  Dataset test;
};

SyntheticData make_synthetic_classification(const SyntheticSpec& spec, RngStream& rng);

// ---------------------------------------------------------------------------
// Client partitioning.

enum class PartitionScheme { iid, two_class };

struct Partition {
  PartitionScheme scheme = PartitionScheme::iid;
  std::vector<std::vector<std::size_t>> shards;  // sample indices per client
};

/// iid: shuffle and split evenly. two_class: each client holds two classes
/// picked round-robin from a shuffled class list; each class's samples are
/// split evenly among the clients holding it. Throws DataError if a client
/// would end up with an empty shard (or fewer than two labels under two_class).
Partition partition_dataset(const Dataset& data, PartitionScheme scheme, std::size_t num_clients,
                            RngStream& rng);

}  // namespace defedavg
