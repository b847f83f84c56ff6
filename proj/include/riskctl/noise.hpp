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

#include "riskctl/linalg.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace riskctl {

struct GaussianComponent {
  double weight = 0.0;
  Vector mean;
  Matrix cov;
};

/// Finite Gaussian mixture sum_i p_i N(mean_i, cov_i). Weights are
/// nonnegative and sum to one within 1e-12; covariances symmetric PSD.
class GaussianMixture {
public:
  explicit GaussianMixture(std::vector<GaussianComponent> components);
  static GaussianMixture gaussian(Vector mean, Matrix cov);

  Eigen::Index dimension() const noexcept { return dim_; }
  const std::vector<GaussianComponent> &components() const noexcept {
    return components_;
  }
  Vector mean() const;
  Matrix covariance() const;

  /// Law of T x for x drawn from this mixture.
  GaussianMixture transformed(const Matrix &T) const;

  /// Component pick followed by a Gaussian draw.
  template <class Engine> Vector draw(Engine &engine) const;

private:
  std::size_t pick(double u) const;

  Eigen::Index dim_ = 0;
  std::vector<GaussianComponent> components_;
  std::vector<Matrix> factors_;
  std::vector<double> cumulative_;
};

/// Scalar (or low-dimensional) shock xi entering through an injection map,
/// w = G xi. The usual case is G = B: the shock rides on the input channel.
struct InputChannelSource {
  GaussianMixture shock;
  Matrix injection;

  GaussianMixture expand() const { return shock.transformed(injection); }
};

/// Raw sample rows, e.g. loaded from CSV. Resampled uniformly when drawn.
struct EmpiricalSource {
  std::vector<Vector> samples;
};

using NoiseSource =
    std::variant<GaussianMixture, InputChannelSource, EmpiricalSource>;

Eigen::Index source_dimension(const NoiseSource &source);

enum class Coupling {
  Independent,  ///< w_t and eps_t drawn independently
  JointMixture, ///< one mixture over the stacked (w, eps) vector
  Paired,       ///< empirical rows (w_k, eps_k) drawn together
};

/// Joint law of (w_t, eps_t); i.i.d. across t.
class JointNoiseModel {
public:
  static JointNoiseModel independent(NoiseSource process, NoiseSource output);
  static JointNoiseModel joint(GaussianMixture stacked, Eigen::Index n);
  static JointNoiseModel paired(std::vector<Vector> w, std::vector<Vector> eps);

  Eigen::Index process_dim() const noexcept { return n_; }
  Eigen::Index output_dim() const noexcept { return q_; }
  Coupling coupling() const noexcept { return coupling_; }

  /// True when every source is a mixture, so moments have closed forms.
  bool is_mixture() const noexcept;

  /// Marginal mixtures (only valid when is_mixture()).
  GaussianMixture process_mixture() const;
  GaussianMixture output_mixture() const;
  const std::optional<GaussianMixture> &stacked() const noexcept {
    return stacked_;
  }
  const NoiseSource &process() const noexcept { return process_; }
  const NoiseSource &output() const noexcept { return output_; }

private:
  JointNoiseModel(NoiseSource process, NoiseSource output, Coupling coupling,
                  std::optional<GaussianMixture> stacked);

  NoiseSource process_;
  NoiseSource output_;
  Coupling coupling_;
  std::optional<GaussianMixture> stacked_;
  Eigen::Index n_ = 0, q_ = 0;
};

/// Reproducible per-stream draws of (w_t, eps_t). Streams with the same
/// (seed, stream) pair produce identical sequences regardless of which thread
/// runs them.
class NoiseStream {
public:
  NoiseStream(const JointNoiseModel &model, std::uint64_t seed,
              std::uint64_t stream = 0);
  void next(Vector &w, Vector &eps);

private:
  const JointNoiseModel *model_;
  std::mt19937_64 engine_;
};

struct NoiseSamples {
  std::vector<Vector> w;
  std::vector<Vector> eps;
};

NoiseSamples sample(const JointNoiseModel &model, std::size_t count,
                    std::uint64_t seed);

/// Every noise statistic the risk transform needs. The weight matrices the
/// weighted moments were computed with travel along as provenance.
struct NoiseMoments {
  Vector w_bar, eps_bar;
  Matrix W, E, H, P, Z;
  Vector M_w, M_eps, M_weps, M;
  double m_w = 0.0, m_weps = 0.0;

  Matrix Qs, Qo, C;
  std::string fourth_order_method = "analytic";
  std::uint64_t fourth_order_seed = 0;
  std::size_t fourth_order_samples = 0;
};

struct MomentStandardErrors {
  double m_w = 0.0, m_weps = 0.0;
  Vector M_w, M_eps, M;
};

struct EmpiricalMoments {
  NoiseMoments moments;
  MomentStandardErrors se;
  std::size_t count = 0;
};

NoiseMoments moments_analytic(const JointNoiseModel &model, const Matrix &Qs,
                              const Matrix &Qo, const Matrix &C);

/// Plug-in moments of paired samples (1/n normalisation), with standard
/// errors for the weighted third- and fourth-order statistics.
EmpiricalMoments moments_empirical(std::span<const Vector> samples_w,
                                   std::span<const Vector> samples_eps,
                                   const Matrix &Qs, const Matrix &Qo,
                                   const Matrix &C);

enum class FourthOrderMethod { Analytic, MonteCarlo };

struct MomentOptions {
  FourthOrderMethod method = FourthOrderMethod::Analytic;
  std::size_t samples = 10'000'000;
  std::uint64_t seed = 0x5eed;
};

/// Picks the analytic path for mixtures and falls back to Monte-Carlo plug-in
/// moments for models with empirical sources.
NoiseMoments compute_moments(const JointNoiseModel &model, const Matrix &Qs,
                             const Matrix &Qo, const Matrix &C,
                             const MomentOptions &options = {});

/// Weighted statistics of a single mixture: E d d^T Q d and
/// E (d^T Q d - tr(Q Cov))^2 where d is the centred variable.
Vector mixture_third_moment(const GaussianMixture &mix, const Matrix &Q);
double mixture_fourth_moment(const GaussianMixture &mix, const Matrix &Q);

// ---------------------------------------------------------------------------

template <class Engine> Vector GaussianMixture::draw(Engine &engine) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t i = pick(uniform(engine));
  Vector z(dim_);
  for (Eigen::Index k = 0; k < dim_; ++k)
    z(k) = normal(engine);
  return components_[i].mean + factors_[i] * z;
}

} // namespace riskctl
