// Copyright 2026 The cdrnde Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdrnde/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "cdrnde/errors.hpp"

namespace cdrnde::data {

using nlohmann::json;

std::string to_string(TaskKind t) {
  return t == TaskKind::classification ? "classification" : "regression";
}

TaskKind task_from_string(const std::string& name) {
  if (name == "classification") return TaskKind::classification;
  if (name == "regression") return TaskKind::regression;
  throw ConfigError("unknown task '" + name +
                    "' (expected classification or regression)");
}

std::vector<double> SequenceRecord::gaps() const {
  std::vector<double> g;
  for (std::size_t i = 1; i < times.size(); ++i) g.push_back(times[i] - times[i - 1]);
  return g;
}

void SequenceRecord::validate(std::size_t line) const {
  const std::size_t k = times.size();
  if (k == 0) throw DataError("sequence '" + id + "' is empty", line);
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::isfinite(times[i])) {
      throw DataError("non-finite time at step " + std::to_string(i), line);
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw DataError("times must be strictly increasing: t[" +
                          std::to_string(i - 1) + "] = " +
                          std::to_string(times[i - 1]) + ", t[" +
                          std::to_string(i) + "] = " + std::to_string(times[i]),
                      line);
    }
  }
  if (static_cast<std::size_t>(inputs.rows()) != k) {
    throw DataError("inputs has " + std::to_string(inputs.rows()) +
                        " rows for " + std::to_string(k) + " times",
                    line);
  }
  if (inputs.cols() == 0) throw DataError("inputs have zero width", line);
  if (!inputs.allFinite()) throw DataError("non-finite input value", line);
  const bool has_labels = !labels.empty();
  const bool has_targets = targets.size() > 0;
  if (has_labels == has_targets) {
    throw DataError("exactly one of class labels or target vectors required",
                    line);
  }
  if (has_labels) {
    if (labels.size() != k) {
      throw DataError("targets has " + std::to_string(labels.size()) +
                          " entries for " + std::to_string(k) + " times",
                      line);
    }
    for (int y : labels) {
      if (y < 0) throw DataError("negative class label", line);
    }
  } else {
    if (static_cast<std::size_t>(targets.rows()) != k) {
      throw DataError("targets has " + std::to_string(targets.rows()) +
                          " rows for " + std::to_string(k) + " times",
                      line);
    }
    if (!targets.allFinite()) throw DataError("non-finite target value", line);
  }
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

Matrix rows_from_json(const json& j, const char* field, std::size_t line) {
  if (!j.is_array()) {
    throw DataError(std::string("field '") + field + "' must be an array", line);
  }
  const std::size_t rows = j.size();
  std::size_t width = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array()) {
      throw DataError(std::string("field '") + field + "' row " +
                          std::to_string(i) + " is not an array",
                      line);
    }
    if (i == 0) width = j[i].size();
    if (j[i].size() != width) {
      throw DataError(std::string("ragged '") + field + "': row 0 has width " +
                          std::to_string(width) + ", row " + std::to_string(i) +
                          " has width " + std::to_string(j[i].size()),
                      line);
    }
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < width; ++c) {
      const json& v = j[i][c];
      if (!v.is_number()) {
        throw DataError(std::string("non-numeric entry in '") + field + "'", line);
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v.get<double>();
    }
  }
  return m;
}

SequenceRecord record_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw DataError("line is not a JSON object", line);
  for (const char* field : {"times", "inputs", "targets"}) {
    if (!j.contains(field)) {
      throw DataError(std::string("missing field '") + field + "'", line);
    }
  }
  SequenceRecord r;
  r.id = j.contains("id") ? j.at("id").get<std::string>()
                          : "line-" + std::to_string(line);
  const json& t = j.at("times");
  if (!t.is_array()) throw DataError("field 'times' must be an array", line);
  for (const json& v : t) {
    if (!v.is_number()) throw DataError("non-numeric entry in 'times'", line);
    r.times.push_back(v.get<double>());
  }
  r.inputs = rows_from_json(j.at("inputs"), "inputs", line);
  const json& tg = j.at("targets");
  if (!tg.is_array()) throw DataError("field 'targets' must be an array", line);
  if (!tg.empty() && tg.front().is_array()) {
    r.targets = rows_from_json(tg, "targets", line);
  } else {
    for (const json& v : tg) {
      if (!v.is_number_integer()) {
        throw DataError("class targets must be integers", line);
      }
      r.labels.push_back(v.get<int>());
    }
  }
  r.validate(line);
  return r;
}

json rows_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::vector<SequenceRecord> parse_jsonl(std::istream& in) {
  std::vector<SequenceRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line);
    }
    try {
      out.push_back(record_from_json(j, line));
    } catch (const json::exception& e) {
      throw DataError(std::string("bad field type: ") + e.what(), line);
    }
  }
  return out;
}

std::vector<SequenceRecord> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  auto records = parse_jsonl(in);
  if (records.empty()) {
    std::cerr << "warning: dataset '" << path << "' contains no records\n";
  }
  return records;
}

std::string to_json_line(const SequenceRecord& r) {
  json j;
  j["id"] = r.id;
  j["times"] = r.times;
  j["inputs"] = rows_to_json(r.inputs);
  if (r.is_classification()) {
    j["targets"] = r.labels;
  } else {
    j["targets"] = rows_to_json(r.targets);
  }
  return j.dump();
}

void write_jsonl(const std::string& path, std::span<const SequenceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const SequenceRecord& r : records) out << to_json_line(r) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Batching

std::size_t Batch::mask_count() const {
  std::size_t n = 0;
  for (const auto& m : mask) n += static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
  return n;
}

SequenceRecord Batch::real(std::size_t b) const {
  const SequenceRecord& p = padded.at(b);
  const auto& m = mask.at(b);
  const auto k = static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
  SequenceRecord r;
  r.id = p.id;
  r.times.assign(p.times.begin(), p.times.begin() + static_cast<std::ptrdiff_t>(k));
  r.inputs = p.inputs.topRows(static_cast<Eigen::Index>(k));
  if (p.is_classification()) {
    r.labels.assign(p.labels.begin(), p.labels.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    r.targets = p.targets.topRows(static_cast<Eigen::Index>(k));
  }
  return r;
}

Batch pad(std::span<const SequenceRecord> records) {
  Batch b;
  for (const SequenceRecord& r : records) b.max_length = std::max(b.max_length, r.length());
  const auto len = static_cast<Eigen::Index>(b.max_length);
  for (const SequenceRecord& r : records) {
    const auto k = static_cast<Eigen::Index>(r.length());
    SequenceRecord p;
    p.id = r.id;
    p.times = r.times;
    p.times.resize(b.max_length, r.times.back());
    p.inputs = Matrix::Zero(len, r.inputs.cols());
    p.inputs.topRows(k) = r.inputs;
    if (r.is_classification()) {
      p.labels = r.labels;
      p.labels.resize(b.max_length, 0);
    } else {
      p.targets = Matrix::Zero(len, r.targets.cols());
      p.targets.topRows(k) = r.targets;
    }
    std::vector<bool> m(b.max_length, false);
    std::fill(m.begin(), m.begin() + k, true);
    b.padded.push_back(std::move(p));
    b.mask.push_back(std::move(m));
  }
  return b;
}

std::vector<Batch> make_batches(std::span<const SequenceRecord> records,
                                std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw ContractError("batch_size must be >= 1");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> out;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    std::vector<SequenceRecord> chunk;
    for (std::size_t i = at; i < std::min(order.size(), at + batch_size); ++i) {
      chunk.push_back(records[order[i]]);
    }
    out.push_back(pad(chunk));
  }
  return out;
}

Split split(std::vector<SequenceRecord> records,
            const std::array<double, 3>& ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw ContractError("split ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ContractError("split ratios must sum to 1");
  }
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  // The small epsilon keeps exact products such as 10 * 0.2 from flooring down.
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios[1] + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios[2] + 1e-9));
  Split s;
  for (std::size_t i = 0; i < n; ++i) {
    SequenceRecord& r = records[order[i]];
    if (i < n_val) {
      s.val.push_back(std::move(r));
    } else if (i < n_val + n_test) {
      s.test.push_back(std::move(r));
    } else {
      s.train.push_back(std::move(r));
    }
  }
  return s;
}

double rescale_times(std::span<SequenceRecord> records) {
  double total = 0.0;
  std::size_t count = 0;
  for (const SequenceRecord& r : records) {
    if (r.length() < 2) continue;
    total += r.times.back() - r.times.front();
    count += r.length() - 1;
  }
  if (count == 0 || total <= 0.0) return 1.0;
  const double factor = static_cast<double>(count) / total;
  scale_times(records, factor);
  return factor;
}

void scale_times(std::span<SequenceRecord> records, double factor) {
  if (!(factor > 0.0)) throw ContractError("time scale factor must be > 0");
  for (SequenceRecord& r : records) {
    for (double& t : r.times) t *= factor;
  }
}

}  // namespace cdrnde::data
