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

#include "riskctl/noise.hpp"
#include "riskctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace riskctl {

// --- GaussianMixture --------------------------------------------------------

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty())
    throw Error(ErrorCode::InvalidModel, "mixture needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ == 0)
    throw Error(ErrorCode::InvalidModel, "mixture dimension must be positive");

  double total = 0.0;
  for (const auto &c : components_) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
      throw Error(ErrorCode::InvalidModel, "mixture weights must be >= 0");
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_)
      throw Error(ErrorCode::DimensionMismatch,
                  "mixture components must share one dimension");
    if (!c.mean.allFinite() || !c.cov.allFinite())
      throw Error(ErrorCode::InvalidModel, "mixture parameters must be finite");
    if (!linalg::is_symmetric(c.cov) ||
        linalg::min_eigenvalue(c.cov) < -linalg::kPsdTol)
      throw Error(ErrorCode::InvalidModel,
                  "mixture covariances must be symmetric PSD");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidModel, "mixture weights must sum to 1");

  factors_.reserve(components_.size());
  cumulative_.reserve(components_.size());
  double acc = 0.0;
  for (const auto &c : components_) {
    factors_.push_back(linalg::psd_factor(c.cov));
    acc += c.weight;
    cumulative_.push_back(acc);
  }
}

GaussianMixture GaussianMixture::gaussian(Vector mean, Matrix cov) {
  return GaussianMixture({{1.0, std::move(mean), std::move(cov)}});
}

Vector GaussianMixture::mean() const {
  Vector mu = Vector::Zero(dim_);
  for (const auto &c : components_)
    mu += c.weight * c.mean;
  return mu;
}

Matrix GaussianMixture::covariance() const {
  const Vector mu = mean();
  Matrix cov = Matrix::Zero(dim_, dim_);
  for (const auto &c : components_) {
    const Vector d = c.mean - mu;
    cov += c.weight * (c.cov + d * d.transpose());
  }
  return linalg::symmetrize(cov);
}

GaussianMixture GaussianMixture::transformed(const Matrix &T) const {
  if (T.cols() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "injection matrix columns must match the shock dimension",
                "injection");
  std::vector<GaussianComponent> out;
  out.reserve(components_.size());
  for (const auto &c : components_)
    out.push_back({c.weight, T * c.mean,
                   linalg::symmetrize(T * c.cov * T.transpose())});
  return GaussianMixture(std::move(out));
}

std::size_t GaussianMixture::pick(double u) const {
  // Zero-weight components are never selected: upper_bound skips ties.
  const double target = u * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end())
    --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

// --- Sources ----------------------------------------------------------------

Eigen::Index source_dimension(const NoiseSource &source) {
  struct Visitor {
    Eigen::Index operator()(const GaussianMixture &m) const {
      return m.dimension();
    }
    Eigen::Index operator()(const InputChannelSource &s) const {
      return s.injection.rows();
    }
    Eigen::Index operator()(const EmpiricalSource &s) const {
      return s.samples.empty() ? 0 : s.samples.front().size();
    }
  };
  return std::visit(Visitor{}, source);
}

namespace {

void check_source(const NoiseSource &source, const char *name) {
  if (const auto *ic = std::get_if<InputChannelSource>(&source)) {
    if (ic->injection.cols() != ic->shock.dimension())
      throw Error(ErrorCode::DimensionMismatch,
                  "injection matrix columns must match the shock dimension",
                  name);
  }
  if (const auto *emp = std::get_if<EmpiricalSource>(&source)) {
    if (emp->samples.empty())
      throw Error(ErrorCode::InsufficientSamples, "empirical source is empty",
                  name);
    const auto d = emp->samples.front().size();
    for (const auto &s : emp->samples) {
      if (s.size() != d)
        throw Error(ErrorCode::DimensionMismatch,
                    "empirical rows must share one dimension", name);
      // Finite samples imply a finite sample fourth moment.
      if (!s.allFinite())
        throw Error(ErrorCode::InvalidModel,
                    "empirical samples must be finite", name);
    }
  }
  if (source_dimension(source) == 0)
    throw Error(ErrorCode::InvalidModel, "noise source has zero dimension",
                name);
}

std::optional<GaussianMixture> as_mixture(const NoiseSource &source) {
  if (const auto *m = std::get_if<GaussianMixture>(&source))
    return *m;
  if (const auto *ic = std::get_if<InputChannelSource>(&source))
    return ic->expand();
  return std::nullopt;
}

GaussianMixture marginal(const GaussianMixture &stacked, Eigen::Index offset,
                         Eigen::Index size) {
  std::vector<GaussianComponent> out;
  for (const auto &c : stacked.components())
    out.push_back({c.weight, c.mean.segment(offset, size),
                   c.cov.block(offset, offset, size, size)});
  return GaussianMixture(std::move(out));
}

} // namespace

JointNoiseModel::JointNoiseModel(NoiseSource process, NoiseSource output,
                                 Coupling coupling,
                                 std::optional<GaussianMixture> stacked)
    : process_(std::move(process)), output_(std::move(output)),
      coupling_(coupling), stacked_(std::move(stacked)) {
  check_source(process_, "noise.process");
  check_source(output_, "noise.output");
  n_ = source_dimension(process_);
  q_ = source_dimension(output_);
}

JointNoiseModel JointNoiseModel::independent(NoiseSource process,
                                             NoiseSource output) {
  return JointNoiseModel(std::move(process), std::move(output),
                         Coupling::Independent, std::nullopt);
}

JointNoiseModel JointNoiseModel::joint(GaussianMixture stacked,
                                       Eigen::Index n) {
  const auto total = stacked.dimension();
  if (n <= 0 || n >= total)
    throw Error(ErrorCode::DimensionMismatch,
                "joint mixture must stack a process and an output block",
                "noise.joint");
  auto w = marginal(stacked, 0, n);
  auto eps = marginal(stacked, n, total - n);
  return JointNoiseModel(std::move(w), std::move(eps), Coupling::JointMixture,
                         std::move(stacked));
}

JointNoiseModel JointNoiseModel::paired(std::vector<Vector> w,
                                        std::vector<Vector> eps) {
  if (w.size() != eps.size())
    throw Error(ErrorCode::DimensionMismatch,
                "paired samples need equal row counts", "noise");
  return JointNoiseModel(EmpiricalSource{std::move(w)},
                         EmpiricalSource{std::move(eps)}, Coupling::Paired,
                         std::nullopt);
}

bool JointNoiseModel::is_mixture() const noexcept {
  return !std::holds_alternative<EmpiricalSource>(process_) &&
         !std::holds_alternative<EmpiricalSource>(output_);
}

GaussianMixture JointNoiseModel::process_mixture() const {
  auto m = as_mixture(process_);
  if (!m)
    throw Error(ErrorCode::UnsupportedSource,
                "process noise is empirical; no mixture form", "noise.process");
  return *m;
}

GaussianMixture JointNoiseModel::output_mixture() const {
  auto m = as_mixture(output_);
  if (!m)
    throw Error(ErrorCode::UnsupportedSource,
                "output noise is empirical; no mixture form", "noise.output");
  return *m;
}

// --- Sampling ---------------------------------------------------------------

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

template <class Engine>
Vector draw_source(const NoiseSource &source, Engine &engine) {
  if (const auto *m = std::get_if<GaussianMixture>(&source))
    return m->draw(engine);
  if (const auto *ic = std::get_if<InputChannelSource>(&source))
    return ic->injection * ic->shock.draw(engine);
  const auto &rows = std::get<EmpiricalSource>(source).samples;
  std::uniform_int_distribution<std::size_t> index(0, rows.size() - 1);
  return rows[index(engine)];
}

} // namespace

NoiseStream::NoiseStream(const JointNoiseModel &model, std::uint64_t seed,
                         std::uint64_t stream)
    : model_(&model), engine_(make_engine(seed, stream)) {}

void NoiseStream::next(Vector &w, Vector &eps) {
  switch (model_->coupling()) {
  case Coupling::Independent:
    w = draw_source(model_->process(), engine_);
    eps = draw_source(model_->output(), engine_);
    return;
  case Coupling::JointMixture: {
    const Vector z = model_->stacked()->draw(engine_);
    w = z.head(model_->process_dim());
    eps = z.tail(model_->output_dim());
    return;
  }
  case Coupling::Paired: {
    const auto &ws = std::get<EmpiricalSource>(model_->process()).samples;
    const auto &es = std::get<EmpiricalSource>(model_->output()).samples;
    std::uniform_int_distribution<std::size_t> index(0, ws.size() - 1);
    const auto k = index(engine_);
    w = ws[k];
    eps = es[k];
    return;
  }
  }
}

NoiseSamples sample(const JointNoiseModel &model, std::size_t count,
                    std::uint64_t seed) {
  if (count == 0)
    throw Error(ErrorCode::InsufficientSamples, "sample count must be >= 1");
  NoiseSamples out;
  out.w.resize(count);
  out.eps.resize(count);
  NoiseStream stream(model, seed);
  for (std::size_t k = 0; k < count; ++k)
    stream.next(out.w[k], out.eps[k]);
  return out;
}

// --- Moments ----------------------------------------------------------------

Vector mixture_third_moment(const GaussianMixture &mix, const Matrix &Q) {
  const Vector mu = mix.mean();
  Vector out = Vector::Zero(mix.dimension());
  for (const auto &c : mix.components()) {
    const Vector d = c.mean - mu;
    const double quad = d.dot(Q * d);
    const double trace = (Q * c.cov).trace();
    out += c.weight * (d * quad + 2.0 * c.cov * Q * d + d * trace);
  }
  return out;
}

double mixture_fourth_moment(const GaussianMixture &mix, const Matrix &Q) {
  const Vector mu = mix.mean();
  const double mean_quad = (Q * mix.covariance()).trace();
  double second = 0.0; // E (d^T Q d)^2
  for (const auto &c : mix.components()) {
    const Vector d = c.mean - mu;
    const double a = d.dot(Q * d);
    const Matrix QS = Q * c.cov;
    const double trace = QS.trace();
    second += c.weight * (a * a + 4.0 * d.dot(QS * Q * d) + trace * trace +
                          2.0 * (QS * QS).trace() + 2.0 * a * trace);
  }
  return std::max(0.0, second - mean_quad * mean_quad);
}

namespace {

void check_weights(const Matrix &Qs, const Matrix &Qo, const Matrix &C,
                   Eigen::Index n, Eigen::Index q) {
  linalg::require_shape(Qs, n, n, "Qs");
  linalg::require_shape(Qo, q, q, "Qo");
  linalg::require_shape(C, q, n, "C");
  for (const auto &[M, name] : {std::pair{&Qs, "Qs"}, std::pair{&Qo, "Qo"}}) {
    if (!linalg::is_symmetric(*M) ||
        linalg::min_eigenvalue(*M) < -linalg::kPsdTol)
      throw Error(ErrorCode::NonPsdWeight,
                  std::string(name) + " must be symmetric PSD", name);
  }
}

// Law of p = C (w - w_bar) + (eps - eps_bar), up to its (irrelevant) mean
// shift: the weighted statistics below re-centre on the grand mean.
GaussianMixture output_sum_law(const JointNoiseModel &model, const Matrix &C) {
  std::vector<GaussianComponent> out;
  if (model.coupling() == Coupling::JointMixture) {
    const auto n = model.process_dim();
    const auto q = model.output_dim();
    for (const auto &c : model.stacked()->components()) {
      const Matrix Sww = c.cov.topLeftCorner(n, n);
      const Matrix Swe = c.cov.topRightCorner(n, q);
      const Matrix See = c.cov.bottomRightCorner(q, q);
      const Matrix CSwe = C * Swe;
      out.push_back({c.weight, C * c.mean.head(n) + c.mean.tail(q),
                     linalg::symmetrize(C * Sww * C.transpose() + CSwe +
                                        CSwe.transpose() + See)});
    }
  } else {
    const auto w = model.process_mixture();
    const auto e = model.output_mixture();
    for (const auto &a : w.components())
      for (const auto &b : e.components())
        out.push_back({a.weight * b.weight, C * a.mean + b.mean,
                       linalg::symmetrize(C * a.cov * C.transpose() + b.cov)});
  }
  // Renormalise the product weights against rounding.
  double total = 0.0;
  for (const auto &c : out)
    total += c.weight;
  for (auto &c : out)
    c.weight /= total;
  return GaussianMixture(std::move(out));
}

} // namespace

NoiseMoments moments_analytic(const JointNoiseModel &model, const Matrix &Qs,
                              const Matrix &Qo, const Matrix &C) {
  if (!model.is_mixture())
    throw Error(ErrorCode::UnsupportedSource,
                "analytic moments need mixture sources", "noise");
  const auto n = model.process_dim();
  const auto q = model.output_dim();
  check_weights(Qs, Qo, C, n, q);

  const auto w = model.process_mixture();
  const auto e = model.output_mixture();
  const auto p = output_sum_law(model, C);

  NoiseMoments mo;
  mo.w_bar = w.mean();
  mo.eps_bar = e.mean();
  mo.W = w.covariance();
  mo.E = e.covariance();
  mo.H = Matrix::Zero(n, q);
  if (model.coupling() == Coupling::JointMixture) {
    for (const auto &c : model.stacked()->components()) {
      const Vector dw = c.mean.head(n) - mo.w_bar;
      const Vector de = c.mean.tail(q) - mo.eps_bar;
      mo.H += c.weight * (c.cov.topRightCorner(n, q) + dw * de.transpose());
    }
  }
  mo.P = p.covariance();
  mo.Z = linalg::symmetrize(C * mo.W * C.transpose() +
                            mo.eps_bar * mo.eps_bar.transpose());
  mo.M_w = mixture_third_moment(w, Qs);
  mo.M_eps = mixture_third_moment(e, Qo);
  mo.M = mixture_third_moment(p, Qo);
  mo.M_weps = mo.M - mo.M_eps;
  mo.m_w = mixture_fourth_moment(w, Qs);
  mo.m_weps = mixture_fourth_moment(p, Qo);
  mo.Qs = Qs;
  mo.Qo = Qo;
  mo.C = C;
  return mo;
}

namespace {

struct RunningMean {
  double sum = 0.0, sum_sq = 0.0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
  double mean(double n) const { return sum / n; }
  double standard_error(double n) const {
    const double mu = sum / n;
    const double var = std::max(0.0, sum_sq / n - mu * mu);
    return std::sqrt(var / n);
  }
};

} // namespace

namespace {

// Moments of the uniform law over the rows; no sample-size floor.
EmpiricalMoments plug_in_moments(std::span<const Vector> samples_w,
                                 std::span<const Vector> samples_eps,
                                 const Matrix &Qs, const Matrix &Qo,
                                 const Matrix &C) {
  if (samples_w.size() != samples_eps.size())
    throw Error(ErrorCode::DimensionMismatch,
                "process and output samples must be paired");
  if (samples_w.empty())
    throw Error(ErrorCode::InsufficientSamples, "no sample rows");
  const auto count = samples_w.size();
  const double nd = static_cast<double>(count);
  const auto n = samples_w.front().size();
  const auto q = samples_eps.front().size();
  check_weights(Qs, Qo, C, n, q);
  for (std::size_t k = 0; k < count; ++k) {
    if (samples_w[k].size() != n || samples_eps[k].size() != q)
      throw Error(ErrorCode::DimensionMismatch,
                  "sample rows must share one dimension");
  }

  NoiseMoments mo;
  mo.w_bar = Vector::Zero(n);
  mo.eps_bar = Vector::Zero(q);
  for (std::size_t k = 0; k < count; ++k) {
    mo.w_bar += samples_w[k];
    mo.eps_bar += samples_eps[k];
  }
  mo.w_bar /= nd;
  mo.eps_bar /= nd;

  mo.W = Matrix::Zero(n, n);
  mo.E = Matrix::Zero(q, q);
  mo.H = Matrix::Zero(n, q);
  mo.P = Matrix::Zero(q, q);
  for (std::size_t k = 0; k < count; ++k) {
    const Vector dw = samples_w[k] - mo.w_bar;
    const Vector de = samples_eps[k] - mo.eps_bar;
    const Vector p = C * dw + de;
    mo.W.noalias() += dw * dw.transpose();
    mo.E.noalias() += de * de.transpose();
    mo.H.noalias() += dw * de.transpose();
    mo.P.noalias() += p * p.transpose();
  }
  mo.W = linalg::symmetrize(mo.W / nd);
  mo.E = linalg::symmetrize(mo.E / nd);
  mo.H /= nd;
  mo.P = linalg::symmetrize(mo.P / nd);
  mo.Z = linalg::symmetrize(C * mo.W * C.transpose() +
                            mo.eps_bar * mo.eps_bar.transpose());

  const double tr_w = (Qs * mo.W).trace();
  const double tr_p = (Qo * mo.P).trace();
  std::vector<RunningMean> third_w(n), third_e(q), third_p(q);
  RunningMean fourth_w, fourth_p;
  for (std::size_t k = 0; k < count; ++k) {
    const Vector dw = samples_w[k] - mo.w_bar;
    const Vector de = samples_eps[k] - mo.eps_bar;
    const Vector p = C * dw + de;
    const double qw = dw.dot(Qs * dw);
    const double qe = de.dot(Qo * de);
    const double qp = p.dot(Qo * p);
    for (Eigen::Index i = 0; i < n; ++i)
      third_w[i].add(dw(i) * qw);
    for (Eigen::Index i = 0; i < q; ++i) {
      third_e[i].add(de(i) * qe);
      third_p[i].add(p(i) * qp);
    }
    fourth_w.add((qw - tr_w) * (qw - tr_w));
    fourth_p.add((qp - tr_p) * (qp - tr_p));
  }

  EmpiricalMoments out;
  out.count = count;
  mo.M_w.resize(n);
  out.se.M_w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mo.M_w(i) = third_w[i].mean(nd);
    out.se.M_w(i) = third_w[i].standard_error(nd);
  }
  mo.M_eps.resize(q);
  mo.M.resize(q);
  out.se.M_eps.resize(q);
  out.se.M.resize(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    mo.M_eps(i) = third_e[i].mean(nd);
    mo.M(i) = third_p[i].mean(nd);
    out.se.M_eps(i) = third_e[i].standard_error(nd);
    out.se.M(i) = third_p[i].standard_error(nd);
  }
  mo.M_weps = mo.M - mo.M_eps;
  mo.m_w = fourth_w.mean(nd);
  mo.m_weps = fourth_p.mean(nd);
  out.se.m_w = fourth_w.standard_error(nd);
  out.se.m_weps = fourth_p.standard_error(nd);

  mo.Qs = Qs;
  mo.Qo = Qo;
  mo.C = C;
  mo.fourth_order_method = "empirical";
  mo.fourth_order_samples = count;
  out.moments = std::move(mo);
  return out;
}

} // namespace

EmpiricalMoments moments_empirical(std::span<const Vector> samples_w,
                                   std::span<const Vector> samples_eps,
                                   const Matrix &Qs, const Matrix &Qo,
                                   const Matrix &C) {
  if (samples_w.size() < 1000)
    throw Error(ErrorCode::InsufficientSamples,
                "empirical moments need at least 1000 samples");
  return plug_in_moments(samples_w, samples_eps, Qs, Qo, C);
}

NoiseMoments compute_moments(const JointNoiseModel &model, const Matrix &Qs,
                             const Matrix &Qo, const Matrix &C,
                             const MomentOptions &options) {
  if (model.coupling() == Coupling::Paired) {
    const auto &w = std::get<EmpiricalSource>(model.process()).samples;
    const auto &e = std::get<EmpiricalSource>(model.output()).samples;
    return plug_in_moments(w, e, Qs, Qo, C).moments;
  }
  if (model.is_mixture()) {
    NoiseMoments mo = moments_analytic(model, Qs, Qo, C);
    if (options.method == FourthOrderMethod::MonteCarlo) {
      const auto draws = sample(model, options.samples, options.seed);
      const auto mc = moments_empirical(draws.w, draws.eps, Qs, Qo, C);
      mo.m_w = mc.moments.m_w;
      mo.m_weps = mc.moments.m_weps;
      mo.fourth_order_method = "monte_carlo";
      mo.fourth_order_seed = options.seed;
      mo.fourth_order_samples = options.samples;
    }
    return mo;
  }
  const auto draws = sample(model, std::max<std::size_t>(options.samples, 1000),
                            options.seed);
  NoiseMoments mo = moments_empirical(draws.w, draws.eps, Qs, Qo, C).moments;
  mo.fourth_order_method = "monte_carlo";
  mo.fourth_order_seed = options.seed;
  return mo;
}

} // namespace riskctl
