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

#include "oracles.hpp"
#include "riskctl/estimator.hpp"
#include "riskctl/model.hpp"
#include "testutil.hpp"

using namespace riskctl;

namespace {

NoiseMoments moments_for(const JointNoiseModel &model, const LtiSystem &sys) {
  return moments_analytic(model, Matrix::Identity(sys.n(), sys.n()),
                          Matrix::Identity(sys.q(), sys.q()), sys.C());
}

/// Filter errors e_t and prediction errors rho_t from open-loop runs.
struct ErrorSamples {
  std::vector<Vector> e, rho, nu;
};

ErrorSamples run_filters(const LtiSystem &sys, const JointNoiseModel &model,
                         const NoiseMoments &mo,
                         const FilterCovariancePlan &plan, int t_end,
                         int reps) {
  ErrorSamples out;
  const Vector u = Vector::Zero(sys.m());
  for (int r = 0; r < reps; ++r) {
    NoiseStream s(model, 2024, r);
    Vector w, eps;
    Vector x = Vector::Zero(sys.n());
    FilterState fs{x, plan.Sigma_filt[0], 0};
    s.next(w, eps);
    for (int t = 1; t <= t_end; ++t) {
      s.next(w, eps);
      const Vector pred = sys.A() * fs.x_hat + mo.w_bar;
      x = sys.A() * x + w;
      const Vector y = sys.C() * x + eps;
      fs = filter_step(fs, u, y, sys, mo, plan);
      if (t == t_end) {
        out.e.push_back(x - fs.x_hat);
        out.rho.push_back(x - pred);
        out.nu.push_back(y - sys.C() * pred - mo.eps_bar);
      }
    }
  }
  return out;
}

/// |mean(a_i b_j) - target(i, j)| <= 3 SE for every entry.
void check_cross_moment(const std::vector<Vector> &a,
                        const std::vector<Vector> &b, const Matrix &target) {
  const double n = static_cast<double>(a.size());
  for (Eigen::Index i = 0; i < target.rows(); ++i)
    for (Eigen::Index j = 0; j < target.cols(); ++j) {
      double s = 0, s2 = 0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double v = a[k](i) * b[k](j);
        s += v;
        s2 += v * v;
      }
      const double m = s / n;
      const double se = std::sqrt((s2 / n - m * m) / n);
      CHECK_MESSAGE(std::abs(m - target(i, j)) <= 3.0 * se + 1e-14,
                    "entry (" << i << "," << j << "): " << m << " vs "
                              << target(i, j) << " se " << se);
    }
}

} // namespace

TEST_CASE("uncorrelated scalar case matches a textbook Kalman filter") {
  const LtiSystem sys(Matrix::Constant(1, 1, 0.9), Matrix::Constant(1, 1, 1.0),
                      Matrix::Constant(1, 1, 2.0));
  const auto model = JointNoiseModel::independent(
      GaussianMixture::gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 0.3)),
      GaussianMixture::gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 0.5)));
  const auto mo = moments_for(model, sys);
  const Matrix S0 = Matrix::Constant(1, 1, 1.5);
  const auto plan = plan_covariances(sys, mo, S0, 40);
  const auto ref = oracle::kalman_filtered(sys.A(), sys.C(), mo.W, mo.E, S0, 40);
  for (int t = 0; t <= 40; ++t)
    CHECK(std::abs(plan.Sigma_filt[t](0, 0) - ref[t](0, 0)) <= 1e-12);
}

TEST_CASE("uncorrelated multivariate case matches a textbook Kalman filter") {
  std::mt19937_64 rng(3);
  const Matrix A = testutil::random_stable(rng, 3, 0.9);
  const Matrix C = testutil::random_matrix(rng, 2, 3);
  const LtiSystem sys(A, testutil::random_matrix(rng, 3, 1), C);
  const auto model = JointNoiseModel::independent(
      GaussianMixture::gaussian(Vector::Zero(3), testutil::random_spd(rng, 3)),
      GaussianMixture::gaussian(Vector::Zero(2), testutil::random_spd(rng, 2)));
  const auto mo = moments_for(model, sys);
  const auto plan = plan_covariances(sys, mo, Matrix::Zero(3, 3), 25);
  const auto ref =
      oracle::kalman_filtered(A, C, mo.W, mo.E, Matrix::Zero(3, 3), 25);
  for (int t = 0; t <= 25; ++t)
    CHECK(testutil::max_abs(plan.Sigma_filt[t] - ref[t]) <= 1e-12);
}

TEST_CASE("near-perfect full observation drives the error to zero") {
  const auto A = opamp_system().A();
  const LtiSystem sys(A, opamp_system().B(), Matrix::Identity(2, 2));
  const auto model = JointNoiseModel::independent(
      GaussianMixture::gaussian(Vector::Zero(2), Matrix::Identity(2, 2)),
      GaussianMixture::gaussian(Vector::Zero(2), 1e-12 * Matrix::Identity(2, 2)));
  const auto plan =
      plan_covariances(sys, moments_for(model, sys), Matrix::Identity(2, 2), 10);
  for (int t = 1; t <= 10; ++t)
    CHECK(plan.Sigma_filt[t].norm() <= 1e-10);
}

TEST_CASE("measurement update never increases the covariance") {
  std::mt19937_64 rng(8);
  const LtiSystem sys(testutil::random_stable(rng, 3, 0.95),
                      testutil::random_matrix(rng, 3, 1),
                      testutil::random_matrix(rng, 1, 3));
  std::vector<GaussianComponent> comps{
      {0.6, Vector::Zero(4), testutil::random_spd(rng, 4)},
      {0.4, testutil::random_matrix(rng, 4, 1), testutil::random_spd(rng, 4)}};
  const auto model = JointNoiseModel::joint(GaussianMixture(comps), 3);
  const auto plan =
      plan_covariances(sys, moments_for(model, sys), Matrix::Zero(3, 3), 30);
  for (int t = 1; t <= 30; ++t) {
    CHECK(linalg::min_eigenvalue(plan.Sigma_pred[t] - plan.Sigma_filt[t]) >=
          -1e-10);
    CHECK(testutil::max_abs(plan.H_cross[t] - plan.Sigma_filt[t]) <=
          1e-10 * (1.0 + plan.Sigma_filt[t].norm()));
  }
}

TEST_CASE("correlated-noise filter errors match the planned statistics") {
  std::mt19937_64 rng(12);
  const LtiSystem sys(testutil::random_stable(rng, 2, 0.8),
                      testutil::random_matrix(rng, 2, 1),
                      testutil::random_matrix(rng, 1, 2));
  Matrix S = testutil::random_spd(rng, 3);
  std::vector<GaussianComponent> comps{
      {0.8, Vector::Zero(3), 0.3 * S},
      {0.2, (Vector(3) << 2.0, -1.0, 1.5).finished(), 0.1 * S}};
  const auto model = JointNoiseModel::joint(GaussianMixture(comps), 2);
  const auto mo = moments_for(model, sys);
  CHECK(mo.H.norm() > 0.1);
  const auto plan = plan_covariances(sys, mo, Matrix::Zero(2, 2), 8);
  const auto s = run_filters(sys, model, mo, plan, 8, 100'000);
  check_cross_moment(s.e, s.e, plan.Sigma_filt[8]);
  check_cross_moment(s.e, s.rho, plan.H_cross[8]);
  check_cross_moment(s.rho, s.rho, plan.Sigma_pred[8]);
  // Unbiased despite non-zero noise means.
  check_cross_moment(s.e, std::vector<Vector>(s.e.size(), Vector::Ones(1)),
                     Matrix::Zero(2, 1));
}

TEST_CASE("skewed process noise: planned covariance matches simulation") {
  const auto base = opamp_system();
  const auto model = JointNoiseModel::independent(
      InputChannelSource{
          GaussianMixture({{0.8, Vector::Zero(1), Matrix::Constant(1, 1, 0.01)},
                           {0.2, Vector::Constant(1, 10.0),
                            Matrix::Constant(1, 1, 0.001)}}),
          base.B()},
      GaussianMixture::gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 0.01)));
  const auto mo = moments_for(model, base);
  const auto plan = plan_covariances(base, mo, Matrix::Zero(2, 2), 12);
  const auto s = run_filters(base, model, mo, plan, 12, 100'000);
  check_cross_moment(s.e, s.e, plan.Sigma_filt[12]);
}

TEST_CASE("Gaussian case: errors are orthogonal to innovations") {
  std::mt19937_64 rng(19);
  const LtiSystem sys(testutil::random_stable(rng, 2, 0.9),
                      testutil::random_matrix(rng, 2, 1),
                      testutil::random_matrix(rng, 1, 2));
  const auto model = JointNoiseModel::independent(
      GaussianMixture::gaussian(Vector::Zero(2), testutil::random_spd(rng, 2)),
      GaussianMixture::gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 0.4)));
  const auto mo = moments_for(model, sys);
  const auto plan = plan_covariances(sys, mo, Matrix::Zero(2, 2), 6);
  const auto s = run_filters(sys, model, mo, plan, 6, 50'000);
  check_cross_moment(s.e, s.nu, Matrix::Zero(2, 1));
}

TEST_CASE("noise realization at its mean is tracked exactly") {
  const auto sys = opamp_system();
  const auto model = JointNoiseModel::independent(
      GaussianMixture::gaussian(Vector::Constant(2, 0.3), Matrix::Identity(2, 2)),
      GaussianMixture::gaussian(Vector::Constant(1, -0.2), Matrix::Identity(1, 1)));
  const auto mo = moments_for(model, sys);
  const auto plan = plan_covariances(sys, mo, Matrix::Zero(2, 2), 20);
  Vector x(2);
  x << 1.0, -2.0;
  FilterState fs{x, plan.Sigma_filt[0], 0};
  for (int t = 0; t < 20; ++t) {
    const Vector u = Vector::Constant(1, std::sin(t));
    x = sys.A() * x + sys.B() * u + mo.w_bar;
    fs = filter_step(fs, u, sys.C() * x + mo.eps_bar, sys, mo, plan);
    CHECK((fs.x_hat - x).norm() <= 1e-12);
  }
  CHECK_ERROR_CODE(filter_step(fs, Vector::Zero(1), Vector::Zero(1), sys, mo,
                               plan),
                   ErrorCode::PlanExhausted);
}

TEST_CASE("degenerate innovation covariance is reported") {
  const auto sys = opamp_system();
  const auto model = JointNoiseModel::independent(
      GaussianMixture::gaussian(Vector::Zero(2), Matrix::Zero(2, 2)),
      GaussianMixture::gaussian(Vector::Zero(1), Matrix::Zero(1, 1)));
  CHECK_ERROR_CODE(
      plan_covariances(sys, moments_for(model, sys), Matrix::Zero(2, 2), 3),
      ErrorCode::SingularInnovation);
}
