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

#include <Eigen/Dense>

#include <string_view>

namespace riskctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Helpers shared by every module. Tolerances follow the library-wide
/// convention: symmetry to 1e-10 (relative to the largest entry), PSD when the
/// smallest eigenvalue of the symmetrized matrix is >= -1e-10, PD when >= 1e-10.
namespace linalg {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;

bool all_finite(const Matrix &M);
bool is_symmetric(const Matrix &M, double tol = kSymmetryTol);
Matrix symmetrize(const Matrix &M);
double min_eigenvalue(const Matrix &M);
double spectral_radius(const Matrix &M);

/// Returns F with F * F^T == M for a symmetric PSD M. Negative eigenvalues
/// within tolerance are clamped to zero, so F may be rank deficient.
Matrix psd_factor(const Matrix &M);

/// Throws DimensionMismatch when M is not rows x cols.
void require_shape(const Matrix &M, Eigen::Index rows, Eigen::Index cols,
                   std::string_view name);
void require_size(const Vector &v, Eigen::Index size, std::string_view name);

/// Throws NonSymmetricPenalty / IndefinitePenalty.
void require_psd(const Matrix &M, std::string_view name);
void require_pd(const Matrix &M, std::string_view name);

/// Relative Frobenius distance ||a - b|| / max(1, ||b||).
double relative_difference(const Matrix &a, const Matrix &b);

} // namespace linalg
} // namespace riskctl
