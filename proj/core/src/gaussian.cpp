#include "cvqkd/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cvqkd/errors.hpp"

namespace cvqkd {
namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kPurityTolerance = 1e-9;

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

void check_mode(const CovarianceMatrix& gamma, std::size_t mode) {
  if (mode >= gamma.n_modes()) {
    throw IndexError(fmt::format("mode {} out of range for a {}-mode state", mode, gamma.n_modes()));
  }
}

std::vector<Eigen::Index> indices_except(std::size_t dim, std::size_t mode) {
  std::vector<Eigen::Index> rest;
  rest.reserve(dim - 2);
  for (std::size_t i = 0; i < dim; ++i) {
    if (i / 2 != mode) rest.push_back(static_cast<Eigen::Index>(i));
  }
  return rest;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows,
                          const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  }
  return out;
}

}  // namespace

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0 || m_.rows() % 2 != 0) {
    throw DomainError(fmt::format("covariance matrix must be square with positive even dimension, got {}x{}",
                                  m_.rows(), m_.cols()));
  }
  if (!m_.allFinite()) throw DomainError("covariance matrix has non-finite entries");
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw DomainError(fmt::format("covariance matrix is not symmetric (max asymmetry {:.3e})", asym));
  }
  m_ = 0.5 * (m_ + m_.transpose());
}

double CovarianceMatrix::variance(std::size_t mode, Quadrature q) const {
  check_mode(*this, mode);
  const auto i = static_cast<Eigen::Index>(quadrature_index(mode, q));
  return m_(i, i);
}

Eigen::Matrix2d CovarianceMatrix::block(std::size_t row_mode, std::size_t col_mode) const {
  check_mode(*this, row_mode);
  check_mode(*this, col_mode);
  return m_.block<2, 2>(static_cast<Eigen::Index>(2 * row_mode), static_cast<Eigen::Index>(2 * col_mode));
}

std::string CovarianceMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m_.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m_.cols(); ++c) row.push_back(m_(r, c));
    rows.push_back(std::move(row));
  }
  return rows.dump();
}

CovarianceMatrix CovarianceMatrix::from_json(const std::string& text) {
  nlohmann::json rows;
  try {
    rows = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(fmt::format("covariance matrix JSON: {}", e.what()));
  }
  if (!rows.is_array() || rows.empty()) throw DomainError("covariance matrix JSON must be a non-empty array");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw DomainError("covariance matrix JSON rows must all have the matrix dimension");
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return CovarianceMatrix(std::move(m));
}

Eigen::MatrixXd symplectic_form(std::size_t n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    const auto i = static_cast<Eigen::Index>(2 * k);
    omega(i, i + 1) = 1.0;
    omega(i + 1, i) = -1.0;
  }
  return omega;
}

// The spectrum of i*Omega*gamma is {+-nu_k}. Its square is similar to the symmetric
// PSD matrix gamma^(1/2) Omega^T gamma Omega gamma^(1/2), whose eigenvalues nu_k^2 each
// appear twice. Extended precision keeps near-pure states with large entries
// (V_m ~ 1e3) inside the 1e-9 purity tolerance.
std::vector<double> symplectic_eigenvalues(const CovarianceMatrix& gamma) {
  const std::size_t n = gamma.n_modes();
  const MatrixXld g = gamma.matrix().cast<long double>();

  Eigen::SelfAdjointEigenSolver<MatrixXld> es(g);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigen-solver failed on covariance matrix");
  const auto& evals = es.eigenvalues();
  if (evals.minCoeff() <= 0.0L) {
    throw NonPhysicalState(fmt::format("covariance matrix is not positive definite (min eigenvalue {:.3e})",
                                       static_cast<double>(evals.minCoeff())));
  }
  const MatrixXld root = es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const MatrixXld omega = symplectic_form(n).cast<long double>();
  MatrixXld m = root * omega.transpose() * g * omega * root;
  m = 0.5L * (m + m.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<MatrixXld> ms(m, Eigen::EigenvaluesOnly);
  if (ms.info() != Eigen::Success) throw NumericalFailure("eigen-solver failed on symplectic spectrum");
  const auto& sq = ms.eigenvalues();  // ascending
  const long double scale = std::max(1.0L, sq(sq.size() - 1));

  std::vector<double> nus;
  nus.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const long double a = sq(static_cast<Eigen::Index>(2 * k));
    const long double b = sq(static_cast<Eigen::Index>(2 * k + 1));
    if (std::abs(a - b) > kPurityTolerance * scale) {
      throw NumericalFailure(fmt::format("symplectic eigenvalues failed to pair ({:.12g} vs {:.12g})",
                                         static_cast<double>(a), static_cast<double>(b)));
    }
    double nu = static_cast<double>(std::sqrt(std::max(0.0L, 0.5L * (a + b))));
    if (nu < 1.0 - kPurityTolerance) {
      throw NonPhysicalState(fmt::format("symplectic eigenvalue {:.12g} violates the uncertainty relation", nu));
    }
    nus.push_back(std::max(nu, 1.0));
  }
  std::sort(nus.begin(), nus.end(), std::greater<>());
  return nus;
}

bool is_physical(const CovarianceMatrix& gamma) {
  try {
    (void)symplectic_eigenvalues(gamma);
    return true;
  } catch (const NonPhysicalState&) {
    return false;
  }
}

void require_physical(const CovarianceMatrix& gamma) { (void)symplectic_eigenvalues(gamma); }

// With t = (nu - 1) / 2:  g = (1 + t) log2(1 + t) - t log2(t). log1p keeps the first
// term accurate near purity; the second term is evaluated directly and tends to 0.
double entropy_g(double nu) {
  if (!(nu >= 1.0 - kPurityTolerance)) {
    throw DomainError(fmt::format("entropy_g requires nu >= 1, got {:.12g}", nu));
  }
  if (nu <= 1.0) return 0.0;
  const double t = 0.5 * (nu - 1.0);
  return ((1.0 + t) * std::log1p(t) - t * std::log(t)) / std::numbers::ln2;
}

double von_neumann_entropy(const CovarianceMatrix& gamma) {
  double s = 0.0;
  for (double nu : symplectic_eigenvalues(gamma)) s += entropy_g(nu);
  return s;
}

CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& gamma, std::size_t mode, Quadrature quadrature) {
  if (gamma.n_modes() < 2) throw DomainError("conditioning needs at least two modes");
  check_mode(gamma, mode);
  const auto& m = gamma.matrix();
  const auto rest = indices_except(gamma.dim(), mode);
  const auto q = static_cast<Eigen::Index>(quadrature_index(mode, quadrature));

  // (Pi gamma_m Pi)^MP has a single non-zero entry 1 / gamma_qq.
  const double v = m(q, q);
  if (!(v > 1e-300)) throw NumericalFailure("homodyne conditioning on a zero-variance quadrature");
  Eigen::VectorXd c(rest.size());
  for (std::size_t r = 0; r < rest.size(); ++r) c(r) = m(rest[r], q);
  Eigen::MatrixXd out = submatrix(m, rest, rest) - (c * c.transpose()) / v;
  return CovarianceMatrix(std::move(out));
}

CovarianceMatrix condition_on_heterodyne(const CovarianceMatrix& gamma, std::size_t mode) {
  if (gamma.n_modes() < 2) throw DomainError("conditioning needs at least two modes");
  check_mode(gamma, mode);
  const auto& m = gamma.matrix();
  const auto rest = indices_except(gamma.dim(), mode);
  const std::vector<Eigen::Index> measured{static_cast<Eigen::Index>(2 * mode),
                                           static_cast<Eigen::Index>(2 * mode + 1)};
  const Eigen::Matrix2d shifted = submatrix(m, measured, measured) + Eigen::Matrix2d::Identity();
  if (!(shifted.determinant() > 1e-300)) throw NumericalFailure("heterodyne conditioning on a singular block");
  const Eigen::MatrixXd sigma = submatrix(m, rest, measured);
  Eigen::MatrixXd out = submatrix(m, rest, rest) - sigma * shifted.inverse() * sigma.transpose();
  return CovarianceMatrix(std::move(out));
}

CovarianceMatrix vacuum(std::size_t n_modes) {
  if (n_modes == 0) throw DomainError("vacuum needs at least one mode");
  return CovarianceMatrix(Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
}

CovarianceMatrix thermal(double v) {
  if (!(v >= 1.0)) throw DomainError(fmt::format("thermal variance must be >= 1, got {}", v));
  return CovarianceMatrix(v * Eigen::MatrixXd::Identity(2, 2));
}

CovarianceMatrix tmsv(double mu) {
  if (!(mu >= 1.0)) throw DomainError(fmt::format("tmsv requires mu >= 1, got {}", mu));
  const double c = std::sqrt(mu * mu - 1.0);
  Eigen::MatrixXd m = mu * Eigen::MatrixXd::Identity(4, 4);
  m(0, 2) = m(2, 0) = c;
  m(1, 3) = m(3, 1) = -c;
  return CovarianceMatrix(std::move(m));
}

CovarianceMatrix apply_symplectic(const CovarianceMatrix& gamma, const Eigen::MatrixXd& s) {
  if (s.rows() != static_cast<Eigen::Index>(gamma.dim()) || s.cols() != s.rows()) {
    throw DomainError("symplectic matrix dimension does not match the state");
  }
  return CovarianceMatrix(s * gamma.matrix() * s.transpose());
}

CovarianceMatrix apply_squeezer(const CovarianceMatrix& gamma, std::size_t mode, double s) {
  if (!(s > 0.0)) throw DomainError(fmt::format("squeezing parameter must be > 0, got {}", s));
  check_mode(gamma, mode);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Identity(gamma.dim(), gamma.dim());
  const auto i = static_cast<Eigen::Index>(2 * mode);
  sq(i, i) = std::sqrt(s);
  sq(i + 1, i + 1) = 1.0 / std::sqrt(s);
  return apply_symplectic(gamma, sq);
}

CovarianceMatrix apply_qnd(const CovarianceMatrix& gamma, std::size_t control_mode, std::size_t target_mode,
                           double gain) {
  check_mode(gamma, control_mode);
  check_mode(gamma, target_mode);
  if (control_mode == target_mode) throw DomainError("QND control and target must be different modes");
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(gamma.dim(), gamma.dim());
  const auto xc = static_cast<Eigen::Index>(quadrature_index(control_mode, Quadrature::X));
  const auto pc = static_cast<Eigen::Index>(quadrature_index(control_mode, Quadrature::P));
  const auto xt = static_cast<Eigen::Index>(quadrature_index(target_mode, Quadrature::X));
  const auto pt = static_cast<Eigen::Index>(quadrature_index(target_mode, Quadrature::P));
  s(pt, xc) = gain;
  s(pc, xt) = gain;
  return apply_symplectic(gamma, s);
}

CovarianceMatrix tensor(const CovarianceMatrix& first, const CovarianceMatrix& second) {
  const auto a = static_cast<Eigen::Index>(first.dim());
  const auto b = static_cast<Eigen::Index>(second.dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a + b, a + b);
  m.topLeftCorner(a, a) = first.matrix();
  m.bottomRightCorner(b, b) = second.matrix();
  return CovarianceMatrix(std::move(m));
}

CovarianceMatrix reduced_state(const CovarianceMatrix& gamma, std::span<const std::size_t> kept_modes) {
  if (kept_modes.empty()) throw DomainError("reduced_state needs at least one mode");
  std::vector<Eigen::Index> idx;
  for (std::size_t mode : kept_modes) {
    check_mode(gamma, mode);
    idx.push_back(static_cast<Eigen::Index>(2 * mode));
    idx.push_back(static_cast<Eigen::Index>(2 * mode + 1));
  }
  return CovarianceMatrix(submatrix(gamma.matrix(), idx, idx));
}

CovarianceMatrix partial_trace(const CovarianceMatrix& gamma, std::span<const std::size_t> traced_modes) {
  for (std::size_t mode : traced_modes) check_mode(gamma, mode);
  std::vector<std::size_t> kept;
  for (std::size_t mode = 0; mode < gamma.n_modes(); ++mode) {
    if (std::find(traced_modes.begin(), traced_modes.end(), mode) == traced_modes.end()) kept.push_back(mode);
  }
  return reduced_state(gamma, kept);
}

}  // namespace cvqkd
