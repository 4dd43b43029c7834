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

// Small fixtures shared by the unit tests.

#ifndef CDRNDE_TESTS_HELPERS_HPP
#define CDRNDE_TESTS_HELPERS_HPP

#include <cstdint>
#include <random>

#include "cdrnde/data.hpp"
#include "cdrnde/model.hpp"

namespace testing {

using cdrnde::Matrix;

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Irregular times with gaps in [0.3, 1.5], Gaussian inputs, random labels.
inline cdrnde::data::SequenceRecord random_sequence(std::size_t k, std::size_t d,
                                                    std::uint64_t seed,
                                                    std::size_t classes = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gap(0.3, 1.5);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(classes) - 1);
  cdrnde::data::SequenceRecord r;
  r.id = "seq-" + std::to_string(seed);
  double t = gap(rng);
  for (std::size_t i = 0; i < k; ++i) {
    r.times.push_back(t);
    t += gap(rng);
  }
  r.inputs = random_matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d), rng);
  for (std::size_t i = 0; i < k; ++i) r.labels.push_back(cls(rng));
  return r;
}

inline cdrnde::data::SequenceRecord random_regression_sequence(std::size_t k, std::size_t d,
                                                               std::size_t c,
                                                               std::uint64_t seed) {
  auto r = random_sequence(k, d, seed);
  r.labels.clear();
  std::mt19937_64 rng(seed + 7);
  r.targets = random_matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c), rng);
  return r;
}

inline cdrnde::ModelConfig small_config(cdrnde::ModelKind kind, std::size_t d = 2,
                                        std::size_t h = 4, std::size_t c = 2) {
  cdrnde::ModelConfig m;
  m.kind = kind;
  m.input_dim = d;
  m.hidden_dim = h;
  m.output_dim = c;
  return m;
}

}  // namespace testing

#endif  // CDRNDE_TESTS_HELPERS_HPP
