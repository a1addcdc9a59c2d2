#pragma once

// Multimode Gaussian-state calculus on centred second moments.
//
// Conventions used everywhere in the library:
//   * quadrature ordering (x_1, p_1, x_2, p_2, ..., x_N, p_N);
//   * shot-noise units, the vacuum has covariance matrix = identity;
//   * entropies are in bits.
// Blocks are always addressed by mode index; raw row offsets stay internal.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cvqkd {

enum class Quadrature { X = 0, P = 1 };

/// Symmetric 2N x 2N matrix of quadrature second moments.
///
/// Construction checks shape and symmetry only. Physicality (gamma + i*Omega >= 0)
/// is a property of the spectrum and is checked by symplectic_eigenvalues(),
/// is_physical() and require_physical().
class CovarianceMatrix {
 public:
  /// Throws DomainError when the matrix is not square with even dimension or is
  /// asymmetric beyond 1e-12 relative tolerance. The stored matrix is symmetrised.
  explicit CovarianceMatrix(Eigen::MatrixXd entries);

  std::size_t n_modes() const { return static_cast<std::size_t>(m_.rows() / 2); }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }

  double variance(std::size_t mode, Quadrature q) const;
  /// 2x2 block between modes `row_mode` and `col_mode`.
  Eigen::Matrix2d block(std::size_t row_mode, std::size_t col_mode) const;

  /// Row-major nested JSON array, quadrature ordering as documented above.
  std::string to_json() const;
  static CovarianceMatrix from_json(const std::string& text);

 private:
  Eigen::MatrixXd m_;
};

/// Row offset of quadrature `q` of `mode` in the 2N x 2N layout.
constexpr std::size_t quadrature_index(std::size_t mode, Quadrature q) {
  return 2 * mode + static_cast<std::size_t>(q);
}

/// Block-diagonal symplectic form with per-mode blocks [[0, 1], [-1, 0]].
Eigen::MatrixXd symplectic_form(std::size_t n_modes);

/// Symplectic eigenvalues sorted descending. Values in [1 - 1e-9, 1) are clipped to 1.
/// Throws NonPhysicalState if the matrix is not positive definite or any value falls
/// below 1 - 1e-9, NumericalFailure if the eigen-solver fails or eigenvalues do not pair.
std::vector<double> symplectic_eigenvalues(const CovarianceMatrix& gamma);

bool is_physical(const CovarianceMatrix& gamma);
void require_physical(const CovarianceMatrix& gamma);

/// Bosonic entropy g(nu) in bits; g(1) = 0. Throws DomainError for nu < 1 - 1e-9.
double entropy_g(double nu);

double von_neumann_entropy(const CovarianceMatrix& gamma);

/// Conditional state of the remaining modes after homodyne detection of `quadrature`
/// on `mode`: gamma_rest - sigma (Pi gamma_m Pi)^MP sigma^T.
CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& gamma, std::size_t mode,
                                       Quadrature quadrature);

/// Conditional state of the remaining modes after heterodyne detection of `mode`:
/// gamma_rest - sigma (gamma_m + 1)^-1 sigma^T.
CovarianceMatrix condition_on_heterodyne(const CovarianceMatrix& gamma, std::size_t mode);

CovarianceMatrix vacuum(std::size_t n_modes);
/// Single-mode thermal state diag(v, v), v >= 1.
CovarianceMatrix thermal(double v);
/// Two-mode squeezed vacuum [[mu 1, sqrt(mu^2-1) Z], [sqrt(mu^2-1) Z, mu 1]], mu >= 1.
CovarianceMatrix tmsv(double mu);

/// Single-mode squeezer (x, p) -> (x sqrt(s), p / sqrt(s)) on `mode`, s > 0.
CovarianceMatrix apply_squeezer(const CovarianceMatrix& gamma, std::size_t mode, double s);

/// QND (controlled-Z) coupling p_target -> p_target + g x_control, p_control -> p_control + g x_target.
/// Both momenta pick up the other mode's position with the same sign; this is what keeps the
/// map symplectic.
CovarianceMatrix apply_qnd(const CovarianceMatrix& gamma, std::size_t control_mode,
                           std::size_t target_mode, double gain);

/// S gamma S^T for an arbitrary real 2N x 2N matrix S (symplecticity is the caller's job).
CovarianceMatrix apply_symplectic(const CovarianceMatrix& gamma, const Eigen::MatrixXd& s);

CovarianceMatrix tensor(const CovarianceMatrix& first, const CovarianceMatrix& second);

/// Traces out `traced_modes`; the remaining modes keep their relative order.
CovarianceMatrix partial_trace(const CovarianceMatrix& gamma,
                               std::span<const std::size_t> traced_modes);

/// Keeps only `kept_modes`, in the order given.
CovarianceMatrix reduced_state(const CovarianceMatrix& gamma,
                               std::span<const std::size_t> kept_modes);

}  // namespace cvqkd
