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

#include "riskctl/controller.hpp"

#include "riskctl/error.hpp"
#include "riskctl/format.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace riskctl {
namespace {

using linalg::symmetrize;

constexpr double kMaxCondition = 1e12;

// Factorizes Lambda = B'VB + R, rejecting it when ill-conditioned.
Eigen::LLT<Matrix> factor_inner(const Matrix &Lambda, int t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Lambda),
                                           Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw Error(ErrorCode::SingularInnerMatrix,
                "B'VB + R is singular or ill-conditioned at t = " +
                    std::to_string(t));
  Eigen::LLT<Matrix> llt(symmetrize(Lambda));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularInnerMatrix,
                "B'VB + R is not positive definite at t = " +
                    std::to_string(t));
  return llt;
}

Matrix riccati_step(const Matrix &A, const Matrix &B, const Matrix &Q,
                    const Matrix &R, const Matrix &V, int t) {
  const Matrix BtV = B.transpose() * V;
  const auto llt = factor_inner(BtV * B + R, t);
  const Matrix K = -llt.solve(BtV * A);
  return symmetrize(A.transpose() * V * A + Q + A.transpose() * V * B * K);
}

void require_finite(const Matrix &M, const char *what, int t) {
  if (!linalg::all_finite(M))
    throw Error(ErrorCode::NonFiniteRecursion,
                std::string(what) + " became non-finite at t = " +
                    std::to_string(t));
}

} // namespace

FiniteSynthesis synthesize_finite(const LtiSystem &sys,
                                  const TransformedProblem &tp,
                                  const RiskWeights &weights,
                                  const NoiseMoments &moments,
                                  const FilterCovariancePlan *filter_covs) {
  const int N = weights.N;
  const auto n = sys.n();
  const auto m = sys.m();
  weights.validate(n, m, sys.q());
  if (filter_covs && filter_covs->horizon() < N)
    throw Error(ErrorCode::DimensionMismatch,
                "filter covariance plan is shorter than the horizon",
                "filter");

  const Matrix &A = sys.A();
  const Matrix &B = sys.B();
  const Vector &w_bar = moments.w_bar;

  FiniteSynthesis out;
  auto &pol = out.policy;
  auto &val = out.value;
  pol.K.assign(N, Matrix::Zero(m, n));
  pol.h.assign(N, Vector::Zero(m));
  pol.l.assign(N, Vector::Zero(m));
  val.V.assign(N + 1, Matrix::Zero(n, n));
  val.T.assign(N + 1, Matrix::Zero(n, n));
  val.S.assign(N + 1, Matrix::Identity(n, n));
  val.p.assign(N + 1, 0.0);
  val.p_includes_filter_terms = filter_covs != nullptr;

  val.V[N] = symmetrize(tp.Q_mu);
  if (filter_covs)
    val.p[N] = (tp.Q_mu * filter_covs->Sigma_filt[N]).trace();

  for (int t = N; t >= 1; --t) {
    const Matrix &V = val.V[t];
    const Matrix &T = val.T[t];
    const Matrix &S = val.S[t];
    const Matrix BtV = B.transpose() * V;
    const Matrix Lambda = BtV * B + weights.R;
    const auto llt = factor_inner(Lambda, t - 1);

    const Matrix K = -llt.solve(BtV * A);
    const Vector h = -llt.solve(B.transpose() * ((V + T) * w_bar));
    const Vector l = -0.5 * llt.solve(B.transpose() * (S * tp.M_mu));
    const Matrix F = A + B * K;

    pol.K[t - 1] = K;
    pol.h[t - 1] = h;
    pol.l[t - 1] = l;

    val.V[t - 1] =
        symmetrize(A.transpose() * V * A + tp.Q_mu + A.transpose() * V * B * K);
    val.T[t - 1] = F.transpose() * (V + T);
    val.S[t - 1] = F.transpose() * S + Matrix::Identity(n, n);

    const Vector k = h + l;
    double p = val.p[t] - k.dot(Lambda * k) +
               w_bar.dot((V + 2.0 * T) * w_bar) + w_bar.dot(S * tp.M_mu);
    if (filter_covs) {
      p += (tp.Q_mu * filter_covs->Sigma_filt[t - 1]).trace() +
           (V * (filter_covs->Sigma_pred[t] + filter_covs->Sigma_filt[t]))
               .trace() -
           2.0 * (V * filter_covs->H_cross[t]).trace();
    }
    val.p[t - 1] = p;

    require_finite(val.V[t - 1], "V", t - 1);
    require_finite(val.T[t - 1], "T", t - 1);
    require_finite(val.S[t - 1], "S", t - 1);
    require_finite(K, "K", t - 1);
    if (!std::isfinite(p) || !h.allFinite() || !l.allFinite())
      throw Error(ErrorCode::NonFiniteRecursion,
                  "affine terms became non-finite at t = " +
                      std::to_string(t - 1));
  }
  return out;
}

DareSolution solve_dare(const Matrix &A, const Matrix &B, const Matrix &Q,
                        const Matrix &R, const DareOptions &options) {
  DareSolution sol;
  Matrix V = symmetrize(Q);
  for (int it = 1; it <= options.max_iterations; ++it) {
    Matrix next = riccati_step(A, B, Q, R, V, -it);
    require_finite(next, "V", -it);
    const double change = (next - V).norm();
    V = std::move(next);
    if (change <= options.tolerance * std::max(1.0, V.norm())) {
      // Continue down to the roundoff floor so V is a fixed point of the
      // step to working precision.
      double last = change;
      for (int extra = 0; extra < 1000 && last > 0.0; ++extra, ++it) {
        Matrix polished = riccati_step(A, B, Q, R, V, -it);
        const double c = (polished - V).norm();
        if (c >= last)
          break;
        V = std::move(polished);
        last = c;
      }
      sol.V = V;
      sol.iterations = it;
      return sol;
    }
  }
  throw Error(ErrorCode::NoConvergence,
              "Riccati iteration did not converge within " +
                  std::to_string(options.max_iterations) + " iterations");
}

double dare_residual(const Matrix &A, const Matrix &B, const Matrix &Q,
                     const Matrix &R, const Matrix &V) {
  const Matrix BtV = B.transpose() * V;
  const Matrix Lambda = BtV * B + R;
  const Matrix rhs = A.transpose() * V * A + Q -
                     A.transpose() * V * B * Lambda.llt().solve(BtV * A);
  return (V - rhs).norm() / std::max(1.0, V.norm());
}

SteadyStatePolicy synthesize_infinite(const LtiSystem &sys,
                                      const TransformedProblem &tp,
                                      const RiskWeights &weights,
                                      const NoiseMoments &moments,
                                      const DareOptions &options) {
  const auto n = sys.n();
  weights.validate(n, sys.m(), sys.q());
  const Matrix &A = sys.A();
  const Matrix &B = sys.B();
  if (!is_stabilizable(A, B))
    throw Error(ErrorCode::NotStabilizable, "(A, B) is not stabilizable");
  if (!is_detectable(A, linalg::psd_factor(tp.Q_mu).transpose()))
    throw Error(ErrorCode::NotDetectable,
                "(A, Q_mu^(1/2)) is not detectable");

  const auto dare = solve_dare(A, B, tp.Q_mu, weights.R, options);
  SteadyStatePolicy ss;
  ss.V = dare.V;
  ss.iterations = dare.iterations;
  ss.riccati_residual = dare_residual(A, B, tp.Q_mu, weights.R, ss.V);
  if (ss.riccati_residual > 1e-9)
    throw Error(ErrorCode::NoConvergence,
                "Riccati residual " + format_double(ss.riccati_residual) +
                    " exceeds 1e-9");

  const Matrix BtV = B.transpose() * ss.V;
  const auto llt = factor_inner(BtV * B + weights.R, -1);
  ss.K = -llt.solve(BtV * A);
  const Matrix F = A + B * ss.K;
  ss.closed_loop_spectral_radius = linalg::spectral_radius(F);
  if (ss.closed_loop_spectral_radius >= 1.0)
    throw Error(ErrorCode::NotStabilizable,
                "stationary gain does not stabilize the loop");

  const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) - F.transpose());
  ss.S = lu.solve(Matrix::Identity(n, n));
  ss.T = lu.solve(F.transpose() * ss.V);
  ss.h = -llt.solve(B.transpose() * ((ss.V + ss.T) * moments.w_bar));
  ss.l = -0.5 * llt.solve(B.transpose() * (ss.S * tp.M_mu));
  return ss;
}

std::vector<double> convergence_profile(const LtiSystem &sys,
                                        const TransformedProblem &tp,
                                        const RiskWeights &weights, int N,
                                        const std::optional<Matrix> &terminal) {
  if (N < 0)
    throw Error(ErrorCode::InvalidConfig, "horizon must be >= 0", "N");
  const Matrix &A = sys.A();
  const Matrix &B = sys.B();
  if (!is_stabilizable(A, B))
    throw Error(ErrorCode::NotStabilizable, "(A, B) is not stabilizable");
  const Matrix V_inf = solve_dare(A, B, tp.Q_mu, weights.R).V;

  std::vector<double> d;
  d.reserve(N + 1);
  Matrix V = terminal ? symmetrize(*terminal) : symmetrize(tp.Q_mu);
  linalg::require_shape(V, sys.n(), sys.n(), "terminal");
  d.push_back((V - V_inf).norm());
  for (int t = N; t >= 1; --t) {
    V = riccati_step(A, B, tp.Q_mu, weights.R, V, t - 1);
    d.push_back((V - V_inf).norm());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Gain file

namespace {
constexpr const char *kGainMagic = "# riskctl gains v1";
}

void write_gain_file(std::ostream &out, const PolicySchedule &policy,
                     const std::string &label) {
  const int N = policy.horizon();
  const auto m = N > 0 ? policy.K[0].rows() : 0;
  const auto n = N > 0 ? policy.K[0].cols() : 0;
  out << kGainMagic << '\n';
  out << "# policy=" << label << " n=" << n << " m=" << m << " N=" << N
      << '\n';
  out << 't';
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < m; ++r)
      out << ",K_" << r + 1 << '_' << c + 1;
  for (Eigen::Index r = 0; r < m; ++r)
    out << ",h_" << r + 1;
  for (Eigen::Index r = 0; r < m; ++r)
    out << ",l_" << r + 1;
  out << '\n';
  for (int t = 0; t < N; ++t) {
    out << t;
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < m; ++r)
        out << ',' << format_double(policy.K[t](r, c));
    for (Eigen::Index r = 0; r < m; ++r)
      out << ',' << format_double(policy.h[t](r));
    for (Eigen::Index r = 0; r < m; ++r)
      out << ',' << format_double(policy.l[t](r));
    out << '\n';
  }
}

void write_gain_file(const std::string &path, const PolicySchedule &policy,
                     const std::string &label) {
  std::ofstream f(path);
  if (!f)
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_gain_file(f, policy, label);
  if (!f)
    throw Error(ErrorCode::IoError, "failed writing " + path);
}

PolicySchedule read_gain_file(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != kGainMagic)
    throw Error(ErrorCode::IoError, "not a gain file (bad magic line)");
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw Error(ErrorCode::IoError, "gain file is missing its header");

  long n = -1, m = -1, N = -1;
  {
    std::istringstream hs(line.substr(2));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        continue;
      const auto key = tok.substr(0, eq);
      const auto value = tok.substr(eq + 1);
      if (key == "n")
        n = std::stol(value);
      else if (key == "m")
        m = std::stol(value);
      else if (key == "N")
        N = std::stol(value);
    }
  }
  if (n < 0 || m < 0 || N < 0)
    throw Error(ErrorCode::IoError, "gain file header lacks n, m or N");
  if (!std::getline(in, line))
    throw Error(ErrorCode::IoError, "gain file is missing its column row");

  PolicySchedule pol;
  const auto width = static_cast<std::size_t>(1 + m * n + 2 * m);
  for (long t = 0; t < N; ++t) {
    if (!std::getline(in, line))
      throw Error(ErrorCode::IoError, "gain file ends early");
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      row.push_back(std::stod(cell));
    if (row.size() != width || static_cast<long>(row[0]) != t)
      throw Error(ErrorCode::IoError,
                  "malformed gain row " + std::to_string(t));
    Matrix K(m, n);
    std::size_t i = 1;
    for (long c = 0; c < n; ++c)
      for (long r = 0; r < m; ++r)
        K(r, c) = row[i++];
    Vector h(m), l(m);
    for (long r = 0; r < m; ++r)
      h(r) = row[i++];
    for (long r = 0; r < m; ++r)
      l(r) = row[i++];
    pol.K.push_back(std::move(K));
    pol.h.push_back(std::move(h));
    pol.l.push_back(std::move(l));
  }
  return pol;
}

} // namespace riskctl
