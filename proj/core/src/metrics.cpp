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

#include "defedavg/metrics.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "defedavg/error.hpp"

namespace defedavg {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf, end);
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.round);
    out += ',' + format_double(r.wall_clock);
    out += ',' + format_double(r.train_loss);
    out += ',' + format_double(r.grad_norm_sq);
    out += ',';
    if (r.test_accuracy) out += format_double(*r.test_accuracy);
    out += ',' + format_double(r.mean_staleness);
    out += ',' + std::to_string(r.max_staleness);
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write to " + path.string() + " failed");
}

void write_metrics_csv(const RunResult& result, const std::filesystem::path& path) {
  write_text_file(path, metrics_csv(result.rows));
}

namespace {

template <class T>
T parse_field(std::string_view field, std::size_t line) {
  T v{};
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw DataError("metrics csv line " + std::to_string(line) + ": bad field '" +
                    std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<MetricsRow> parse_metrics_csv(std::string_view text) {
  std::vector<MetricsRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kMetricsHeader) throw DataError("metrics csv: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 7) throw DataError("metrics csv line " + std::to_string(line_no) + ": expected 7 fields");
    MetricsRow r;
    r.round = parse_field<std::size_t>(f[0], line_no);
    r.wall_clock = parse_field<double>(f[1], line_no);
    r.train_loss = parse_field<double>(f[2], line_no);
    r.grad_norm_sq = parse_field<double>(f[3], line_no);
    if (!f[4].empty()) r.test_accuracy = parse_field<double>(f[4], line_no);
    r.mean_staleness = parse_field<double>(f[5], line_no);
    r.max_staleness = parse_field<std::size_t>(f[6], line_no);
    rows.push_back(r);
  }
  if (line_no == 0) throw DataError("metrics csv: empty document");
  return rows;
}

}  // namespace defedavg
