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

#include "riskctl/leqg.hpp"

#include "riskctl/error.hpp"

namespace riskctl {

LeqgResult synthesize_leqg(const LtiSystem &sys, const Matrix &Q,
                           const Matrix &R, const NoiseMoments &moments,
                           const LeqgConfig &cfg) {
  const auto n = sys.n();
  const auto m = sys.m();
  if (cfg.horizon < 1)
    throw Error(ErrorCode::InvalidConfig, "LEQG horizon must be >= 1",
                "horizon");
  linalg::require_shape(Q, n, n, "Q");
  linalg::require_shape(R, m, m, "R");
  linalg::require_psd(Q, "Q");
  linalg::require_pd(R, "R");
  linalg::require_shape(moments.W, n, n, "W");

  const Matrix &A = sys.A();
  const Matrix &B = sys.B();
  const Matrix G = linalg::psd_factor(moments.W);
  const Matrix I_n = Matrix::Identity(G.cols(), G.cols());
  const double theta = cfg.theta;
  const int N = cfg.horizon;

  PolicySchedule pol;
  pol.K.assign(N, Matrix::Zero(m, n));
  pol.h.assign(N, Vector::Zero(m));
  pol.l.assign(N, Vector::Zero(m));

  Matrix V = linalg::symmetrize(Q);
  Vector v = Vector::Zero(n);
  for (int t = N; t >= 1; --t) {
    const Matrix GtV = G.transpose() * V;
    const Matrix Mth = linalg::symmetrize(I_n + theta * GtV * G);
    const double lam = linalg::min_eigenvalue(Mth);
    if (!(lam > 0.0))
      return BreakdownReport{t, theta, lam};

    const Eigen::LLT<Matrix> mllt(Mth);
    const Matrix MinvGtV = mllt.solve(GtV);
    const Matrix Vt = linalg::symmetrize(V - theta * GtV.transpose() * MinvGtV);
    const Vector vt = v - theta * MinvGtV.transpose() * (G.transpose() * v);

    const Matrix Lambda = linalg::symmetrize(B.transpose() * Vt * B + R);
    const Eigen::LLT<Matrix> llt(Lambda);
    if (llt.info() != Eigen::Success)
      return BreakdownReport{t, theta, linalg::min_eigenvalue(Lambda)};

    const Matrix K = -llt.solve(B.transpose() * Vt * A);
    const Vector drift = Vt * moments.w_bar + vt;
    const Vector h = -llt.solve(B.transpose() * drift);
    const Matrix F = A + B * K;

    pol.K[t - 1] = K;
    pol.h[t - 1] = h;
    V = linalg::symmetrize(A.transpose() * Vt * A + Q +
                           A.transpose() * Vt * B * K);
    v = F.transpose() * drift;
    if (!linalg::all_finite(V) || !v.allFinite())
      throw Error(ErrorCode::NonFiniteRecursion,
                  "LEQG recursion became non-finite at t = " +
                      std::to_string(t - 1));
  }
  return pol;
}

double leqg_breakdown_threshold(const LtiSystem &sys, const Matrix &Q,
                                const Matrix &R, const NoiseMoments &moments,
                                int horizon, double theta_min, double tol) {
  auto breaks = [&](double theta) {
    return std::holds_alternative<BreakdownReport>(
        synthesize_leqg(sys, Q, R, moments, {theta, horizon}));
  };
  double hi = 0.0; // no breakdown
  double lo = -1e-6;
  while (!breaks(lo)) {
    hi = lo;
    lo *= 2.0;
    if (lo < theta_min)
      return 0.0;
  }
  while (hi - lo > tol * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (breaks(mid))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace riskctl
