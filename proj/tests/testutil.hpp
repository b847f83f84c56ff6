/*
 * Copyright 2026 The riskctl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "riskctl/error.hpp"
#include "riskctl/linalg.hpp"

#include <doctest.h>

#include <random>

namespace testutil {

using riskctl::Matrix;
using riskctl::Vector;

inline Matrix random_matrix(std::mt19937_64 &rng, Eigen::Index r,
                            Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      M(i, j) = nd(rng);
  return M;
}

/// Random matrix rescaled to the requested spectral radius.
inline Matrix random_stable(std::mt19937_64 &rng, Eigen::Index n,
                            double radius) {
  Matrix A = random_matrix(rng, n, n);
  return A * (radius / riskctl::linalg::spectral_radius(A));
}

inline Matrix random_spd(std::mt19937_64 &rng, Eigen::Index n,
                         double floor = 0.1) {
  const Matrix G = random_matrix(rng, n, n);
  return G * G.transpose() + floor * Matrix::Identity(n, n);
}

inline double max_abs(const Matrix &M) {
  return M.size() ? M.cwiseAbs().maxCoeff() : 0.0;
}

} // namespace testutil

#define CHECK_ERROR_CODE(expr, expected)                                       \
  do {                                                                         \
    bool thrown_ = false;                                                      \
    try {                                                                      \
      (void)(expr);                                                            \
    } catch (const riskctl::Error &e_) {                                       \
      thrown_ = true;                                                          \
      CHECK_MESSAGE(e_.code() == (expected), e_.what());                       \
    }                                                                          \
    CHECK_MESSAGE(thrown_, "expected an error from " #expr);                   \
  } while (0)
