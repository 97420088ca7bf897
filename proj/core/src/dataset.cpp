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

#include "defedavg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "defedavg/error.hpp"

namespace defedavg {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803u;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801u;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

std::string hex32(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xf];
  return s;
}

}  // namespace

void validate_dataset(const Dataset& data) {
  if (data.rows == 0) throw DataError("dataset has no samples");
  if (data.cols == 0) throw DataError("dataset has zero-width feature rows");
  if (data.features.size() != data.rows * data.cols) {
    throw DataError("dataset feature matrix size does not match rows * cols");
  }
  if (data.labels.size() != data.rows) throw DataError("dataset label count does not match rows");
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] < 0 || static_cast<std::size_t>(data.labels[i]) >= data.num_classes) {
      throw DataError("label out of range at sample " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    if (!std::isfinite(data.features[i])) {
      throw DataError("non-finite feature at sample " + std::to_string(i / data.cols));
    }
  }
}

IdxContents parse_idx(std::span<const std::uint8_t> bytes, std::string_view source) {
  const std::string where(source);
  if (bytes.size() < 4) throw DataError(where + ": truncated IDX header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImagesMagic && magic != kIdxLabelsMagic) {
    throw DataError(where + ": unsupported IDX magic " + hex32(magic) +
                    " (expected 0x00000803 or 0x00000801)");
  }
  const std::size_t ndims = magic & 0xffu;
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) throw DataError(where + ": truncated IDX header");
  std::vector<std::size_t> dims(ndims);
  std::size_t payload = 1;
  for (std::size_t k = 0; k < ndims; ++k) {
    dims[k] = read_be32(bytes, 4 + 4 * k);
    payload *= dims[k];
  }
  if (bytes.size() < header + payload) {
    throw DataError(where + ": truncated IDX payload (expected " + std::to_string(payload) +
                    " bytes, found " + std::to_string(bytes.size() - header) + ")");
  }
  const auto data = bytes.subspan(header, payload);

  if (magic == kIdxLabelsMagic) {
    IdxLabels out;
    out.labels.assign(data.begin(), data.end());
    return out;
  }
  IdxImages out;
  out.count = dims[0];
  out.height = dims[1];
  out.width = dims[2];
  out.pixels.resize(payload);
  std::transform(data.begin(), data.end(), out.pixels.begin(),
                 [](std::uint8_t b) { return static_cast<double>(b) / 255.0; });
  return out;
}

IdxContents read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open IDX file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_idx(bytes, path.string());
}

Dataset pair_idx(const IdxImages& images, const IdxLabels& labels) {
  if (images.count != labels.labels.size()) {
    throw DataError("IDX pairing mismatch: " + std::to_string(images.count) + " images but " +
                    std::to_string(labels.labels.size()) + " labels");
  }
  Dataset out;
  out.rows = images.count;
  out.cols = images.height * images.width;
  out.features = images.pixels;
  out.labels = labels.labels;
  int max_label = 0;
  for (int l : out.labels) max_label = std::max(max_label, l);
  out.num_classes = static_cast<std::size_t>(max_label) + 1;
  validate_dataset(out);
  return out;
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  auto img = read_idx(images);
  auto lab = read_idx(labels);
  if (!std::holds_alternative<IdxImages>(img)) {
    throw DataError(images.string() + ": expected an image file (magic 0x00000803)");
  }
  if (!std::holds_alternative<IdxLabels>(lab)) {
    throw DataError(labels.string() + ": expected a label file (magic 0x00000801)");
  }
  return pair_idx(std::get<IdxImages>(img), std::get<IdxLabels>(lab));
}

SyntheticData make_synthetic_classification(const SyntheticSpec& spec, RngStream& rng) {
  if (spec.classes < 2) throw DataError("synthetic data needs at least two classes");
  if (spec.features == 0 || spec.train_samples == 0) {
    throw DataError("synthetic data needs positive feature and sample counts");
  }
  std::vector<std::vector<double>> means(spec.classes, std::vector<double>(spec.features));
  for (auto& mean : means) {
    double norm = 0.0;
    for (double& v : mean) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : mean) v *= spec.separation / norm;
  }
  auto draw = [&](std::size_t count) {
    Dataset d;
    d.rows = count;
    d.cols = spec.features;
    d.num_classes = spec.classes;
    d.features.resize(count * spec.features);
    d.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t label = i % spec.classes;
      d.labels[i] = static_cast<int>(label);
      for (std::size_t j = 0; j < spec.features; ++j) {
        d.features[i * spec.features + j] = means[label][j] + rng.normal();
      }
    }
    return d;
  };
  SyntheticData out;
  out.train = draw(spec.train_samples);
  if (spec.test_samples > 0) out.test = draw(spec.test_samples);
  return out;
}

Partition partition_dataset(const Dataset& data, PartitionScheme scheme, std::size_t num_clients,
                            RngStream& rng) {
  if (num_clients == 0) throw DataError("partition needs at least one client");
  Partition out;
  out.scheme = scheme;
  out.shards.assign(num_clients, {});

  if (scheme == PartitionScheme::iid) {
    if (data.rows < num_clients) {
      throw DataError("iid partition: " + std::to_string(data.rows) + " samples cannot fill " +
                      std::to_string(num_clients) + " shards; client " +
                      std::to_string(data.rows) + " would be empty");
    }
    std::vector<std::size_t> order(data.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span(order), rng);
    const std::size_t base = data.rows / num_clients;
    const std::size_t extra = data.rows % num_clients;
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < num_clients; ++c) {
      const std::size_t take = base + (c < extra ? 1 : 0);
      out.shards[c].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                           order.begin() + static_cast<std::ptrdiff_t>(cursor + take));
      cursor += take;
    }
    return out;
  }

  // two_class
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.rows; ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  std::vector<std::size_t> classes;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c].empty()) classes.push_back(c);
  }
  if (classes.size() < 2) throw DataError("two_class partition needs at least two labels");
  shuffle(std::span(classes), rng);

  std::vector<std::vector<std::size_t>> holders(data.num_classes);
  for (std::size_t client = 0; client < num_clients; ++client) {
    holders[classes[(2 * client) % classes.size()]].push_back(client);
    holders[classes[(2 * client + 1) % classes.size()]].push_back(client);
  }
  for (std::size_t label : classes) {
    auto& samples = by_class[label];
    const auto& owners = holders[label];
    if (owners.empty()) continue;
    if (samples.size() < owners.size()) {
      throw DataError("two_class partition: class " + std::to_string(label) + " has " +
                      std::to_string(samples.size()) + " samples for " +
                      std::to_string(owners.size()) + " clients; client " +
                      std::to_string(owners[samples.size()]) + " would lack that class");
    }
    shuffle(std::span(samples), rng);
    const std::size_t base = samples.size() / owners.size();
    const std::size_t extra = samples.size() % owners.size();
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < owners.size(); ++k) {
      const std::size_t take = base + (k < extra ? 1 : 0);
      auto& shard = out.shards[owners[k]];
      shard.insert(shard.end(), samples.begin() + static_cast<std::ptrdiff_t>(cursor),
                   samples.begin() + static_cast<std::ptrdiff_t>(cursor + take));
      cursor += take;
    }
  }
  for (auto& shard : out.shards) std::sort(shard.begin(), shard.end());
  return out;
}

}  // namespace defedavg
