#ifndef POWALLOC_MODEL_HPP
#define POWALLOC_MODEL_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "powalloc/errors.hpp"
#include "powalloc/matrix.hpp"
#include "powalloc/quadrature.hpp"

namespace powalloc {

/// One noise component given as a scalar log-density with derivative and
/// integration bounds. Fisher information under translation comes out of
///   integral of (d/dx log f)^2 f(x) dx
/// by adaptive quadrature. Callables must be re-entrant.
struct ScalarDensity {
  std::function<double(double)> log_density;
  std::function<double(double)> log_density_derivative;
  double lower = -40.0;
  double upper = 40.0;
};

/// Noise description: diagonal Gaussian variances, a user-supplied Fisher
/// information matrix, or independent per-component scalar densities.
class NoiseModel {
public:
  enum class Kind { gaussian_diagonal, custom_fim, independent_densities };

  static NoiseModel gaussian_diagonal(std::vector<double> variances) {
    if (variances.empty()) throw domain_error("NoiseModel: empty variance vector");
    for (double v : variances)
      if (!(v > 0.0) || !std::isfinite(v))
        throw domain_error("NoiseModel: variances must be strictly positive and finite");
    NoiseModel m;
    m.kind_ = Kind::gaussian_diagonal;
    m.variances_ = std::move(variances);
    return m;
  }

  static NoiseModel custom_fim(SymMatrix fim) {
    const EigenDecomposition dec = sym_eigen(fim);
    const double max_eig = std::max(std::abs(dec.min_eigenvalue()), dec.max_eigenvalue());
    if (dec.min_eigenvalue() < -1e-10 * max_eig)
      throw domain_error("NoiseModel: custom FIM is not positive semidefinite");
    NoiseModel m;
    m.kind_ = Kind::custom_fim;
    m.fim_ = std::move(fim);
    return m;
  }

  static NoiseModel independent_densities(std::vector<ScalarDensity> densities) {
    if (densities.empty()) throw domain_error("NoiseModel: empty density list");
    for (const auto& d : densities)
      if (!d.log_density || !d.log_density_derivative || !(d.lower < d.upper))
        throw domain_error("NoiseModel: density needs callables and ordered bounds");
    NoiseModel m;
    m.kind_ = Kind::independent_densities;
    m.densities_ = std::move(densities);
    return m;
  }

  Kind kind() const { return kind_; }

  int dim() const {
    switch (kind_) {
      case Kind::gaussian_diagonal: return static_cast<int>(variances_.size());
      case Kind::custom_fim: return fim_->dim();
      case Kind::independent_densities: return static_cast<int>(densities_.size());
    }
    return 0;
  }

  const std::vector<double>& variances() const { return variances_; }
  const SymMatrix& fim() const { return *fim_; }
  const std::vector<ScalarDensity>& densities() const { return densities_; }

private:
  Kind kind_ = Kind::gaussian_diagonal;
  std::vector<double> variances_;
  std::optional<SymMatrix> fim_;
  std::vector<ScalarDensity> densities_;
};

/// Fisher information of the noise vector with respect to a translation
/// parameter. Depends only on the noise distribution. Gaussian diagonal
/// noise short-circuits to diag(1/sigma_i^2); independent densities go
/// through scalar quadrature.
inline SymMatrix noise_fim(const NoiseModel& noise, int n) {
  if (noise.dim() != n) throw domain_error("noise_fim: dimension mismatch");
  switch (noise.kind()) {
    case NoiseModel::Kind::gaussian_diagonal: {
      std::vector<double> d(n);
      for (int i = 0; i < n; ++i) d[i] = 1.0 / noise.variances()[i];
      return SymMatrix::diagonal(d);
    }
    case NoiseModel::Kind::custom_fim:
      return noise.fim();
    case NoiseModel::Kind::independent_densities: {
      std::vector<double> d(n);
      for (int i = 0; i < n; ++i) {
        const ScalarDensity& sd = noise.densities()[i];
        auto integrand = [&sd](double x) {
          const double dl = sd.log_density_derivative(x);
          return dl * dl * std::exp(sd.log_density(x));
        };
        d[i] = integrate_adaptive_simpson(integrand, sd.lower, sd.upper).value;
      }
      return SymMatrix::diagonal(d);
    }
  }
  throw domain_error("noise_fim: unknown noise kind");
}

/// Nonlinear observation map. `jacobian`, when supplied, must return the
/// k x n matrix with entry (i, j) = d f_j / d phi_i; otherwise central finite
/// differences are used with step 1e-6 * max(1, |phi_i|).
struct NonlinearMap {
  std::function<std::vector<double>(const std::vector<double>&)> map;
  std::function<Matrix(const std::vector<double>&)> jacobian;  // optional
  std::vector<double> linearization_point;                     // length k
};

/// Observation model: k parameters, n observations, linear channel F (k x n)
/// or a nonlinear map linearized at a caller-chosen point, plus the noise
/// model. Trailing `nuisance_count` parameters are nuisance. Immutable after
/// construction and safe to share across threads.
class SystemModel {
public:
  static SystemModel linear(Matrix f, NoiseModel noise, int nuisance_count = 0) {
    SystemModel m;
    m.k_ = f.rows;
    m.n_ = f.cols;
    m.channel_ = std::move(f);
    m.noise_ = std::move(noise);
    m.nuisance_count_ = nuisance_count;
    m.validate_common();
    m.check_rank(m.channel_, "SystemModel: channel matrix F");
    return m;
  }

  static SystemModel nonlinear(NonlinearMap map, int k, int n, NoiseModel noise,
                               int nuisance_count = 0) {
    if (!map.map) throw domain_error("SystemModel: nonlinear map callable required");
    if (static_cast<int>(map.linearization_point.size()) != k)
      throw domain_error("SystemModel: linearization point must have length k");
    SystemModel m;
    m.k_ = k;
    m.n_ = n;
    m.map_ = std::move(map);
    m.noise_ = std::move(noise);
    m.nuisance_count_ = nuisance_count;
    m.validate_common();
    return m;
  }

  int k() const { return k_; }
  int n() const { return n_; }
  int nuisance_count() const { return nuisance_count_; }
  bool is_linear() const { return !map_.has_value(); }
  const Matrix& channel() const { return channel_; }
  const NonlinearMap& map() const { return *map_; }
  const NoiseModel& noise() const { return *noise_; }

  /// Same model with a new linearization point (nonlinear models only).
  SystemModel with_linearization_point(std::vector<double> phi) const {
    if (is_linear()) throw domain_error("SystemModel: linear model has no linearization point");
    SystemModel m = *this;
    if (static_cast<int>(phi.size()) != k_)
      throw domain_error("SystemModel: linearization point must have length k");
    m.map_->linearization_point = std::move(phi);
    return m;
  }

private:
  SystemModel() = default;

  void validate_common() const {
    if (k_ < 1 || n_ < 1) throw domain_error("SystemModel: k and n must be positive");
    if (k_ > n_) throw domain_error("SystemModel: need k <= n");
    if (noise_->dim() != n_) throw domain_error("SystemModel: noise dimension must equal n");
    if (nuisance_count_ < 0 || nuisance_count_ >= k_)
      throw domain_error("SystemModel: nuisance_count must lie in [0, k-1]");
  }

  void check_rank(const Matrix& f, const std::string& what) const {
    if (!f.all_finite()) throw domain_error(what + ": non-finite entry");
    const SymMatrix gram = SymMatrix::from_dense(f * f.transposed());
    const EigenDecomposition dec = sym_eigen(gram);
    if (is_singular(dec))
      throw rank_error(what + ": not full row rank within tolerance");
  }

  int k_ = 0, n_ = 0, nuisance_count_ = 0;
  Matrix channel_;
  std::optional<NonlinearMap> map_;
  std::optional<NoiseModel> noise_;
};

/// The k x n channel entering the information matrix: F itself for linear
/// models, the Jacobian of the map at the linearization point otherwise.
inline Matrix effective_channel(const SystemModel& model) {
  if (model.is_linear()) return model.channel();

  const NonlinearMap& nm = model.map();
  const std::vector<double>& phi = nm.linearization_point;
  Matrix f;
  if (nm.jacobian) {
    f = nm.jacobian(phi);
    if (f.rows != model.k() || f.cols != model.n())
      throw domain_error("effective_channel: jacobian shape must be k x n");
  } else {
    f = Matrix(model.k(), model.n());
    for (int i = 0; i < model.k(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(phi[i]));
      std::vector<double> hi = phi, lo = phi;
      hi[i] += h;
      lo[i] -= h;
      const std::vector<double> fhi = nm.map(hi), flo = nm.map(lo);
      if (static_cast<int>(fhi.size()) != model.n() ||
          static_cast<int>(flo.size()) != model.n())
        throw domain_error("effective_channel: map output must have length n");
      for (int j = 0; j < model.n(); ++j) f(i, j) = (fhi[j] - flo[j]) / (2.0 * h);
    }
  }
  if (!f.all_finite()) throw domain_error("effective_channel: non-finite Jacobian entry");
  const EigenDecomposition dec = sym_eigen(SymMatrix::from_dense(f * f.transposed()));
  if (is_singular(dec))
    throw rank_error("effective_channel: Jacobian not full row rank at linearization point");
  return f;
}

/// Cached information matrices for one model: J = F I(N) F^T, A = J^{-1},
/// their diagonals, and (when nuisance parameters exist) the reduced pair
/// J_relevant (leading block of J) and A_relevant (inverse Schur complement,
/// equal to the leading block of A). For a reduced view A is intentionally
/// NOT the inverse of J: the criteria consume exactly this pairing.
struct FimBundle {
  SymMatrix J;
  SymMatrix A;
  std::vector<double> j_diag;
  std::vector<double> a_diag;

  struct ReducedBlocks {
    SymMatrix J_relevant;
    SymMatrix A_relevant;
  };
  std::optional<ReducedBlocks> reduced;
  bool schur_reduced = false;

  int dim() const { return J.dim(); }

  /// Bundle over the relevant parameters only.
  FimBundle reduced_view() const {
    if (!reduced) throw domain_error("FimBundle: no nuisance partition present");
    FimBundle out;
    out.J = reduced->J_relevant;
    out.A = reduced->A_relevant;
    out.j_diag = out.J.diag();
    out.a_diag = out.A.diag();
    out.schur_reduced = true;
    return out;
  }
};

/// Assembles J, A and diagonals for a model; with s > 0 trailing nuisance
/// parameters also the reduced blocks over the r = k - s relevant ones.
inline FimBundle build_fim_bundle(const SystemModel& model) {
  const Matrix f = effective_channel(model);
  const SymMatrix in = noise_fim(model.noise(), model.n());

  FimBundle bundle;
  bundle.J = SymMatrix::from_dense((f * in.dense()) * f.transposed());
  try {
    bundle.A = sym_inverse(bundle.J);
  } catch (const singular_matrix_error& e) {
    throw singular_matrix_error(std::string("build_fim_bundle: J = F I(N) F^T singular: ") +
                                    e.what(),
                                e.min_abs_eigenvalue);
  }
  bundle.j_diag = bundle.J.diag();
  bundle.a_diag = bundle.A.diag();
  double max_a = 0.0;
  for (double a : bundle.a_diag) max_a = std::max(max_a, std::abs(a));
  for (double& a : bundle.a_diag) {
    if (a < 0.0) {
      if (a < -1e-10 * max_a)
        throw domain_error("build_fim_bundle: CRLB diagonal markedly negative");
      a = 0.0;
    }
  }

  const int s = model.nuisance_count();
  if (s > 0) {
    const int r = model.k() - s;
    SymMatrix j_rel(r);
    for (int i = 0; i < r; ++i)
      for (int j = i; j < r; ++j) j_rel.set(i, j, bundle.J(i, j));
    FimBundle::ReducedBlocks blocks{std::move(j_rel), schur_reduce(bundle.J, r)};
    bundle.reduced = std::move(blocks);
  }
  return bundle;
}

}  // namespace powalloc

#endif  // POWALLOC_MODEL_HPP
