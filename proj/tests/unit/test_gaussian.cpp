#include <array>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cvqkd/errors.hpp"
#include "cvqkd/gaussian.hpp"

using namespace cvqkd;

namespace {

Eigen::MatrixXd diag(std::initializer_list<double> d) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return v.asDiagonal();
}

void expect_matrix_near(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol) << "got\n" << a << "\nexpected\n" << b;
}

CovarianceMatrix random_thermal_product(std::mt19937_64& rng, std::size_t modes) {
  std::uniform_real_distribution<double> u(1.0, 5.0);
  CovarianceMatrix g = thermal(u(rng));
  for (std::size_t m = 1; m < modes; ++m) g = tensor(g, thermal(u(rng)));
  return g;
}

}  // namespace

TEST(Gaussian, SymplecticFormIsAntisymmetricSquareRoot) {
  const Eigen::MatrixXd om = symplectic_form(3);
  expect_matrix_near(om.transpose(), -om, 0.0);
  expect_matrix_near(om * om, -Eigen::MatrixXd::Identity(6, 6), 0.0);
}

TEST(Gaussian, CovarianceRejectsAsymmetricOrOddMatrices) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 1) = 0.1;
  EXPECT_THROW(CovarianceMatrix{m}, DomainError);
  EXPECT_THROW(CovarianceMatrix{Eigen::MatrixXd::Identity(3, 3)}, DomainError);
}

TEST(Gaussian, JsonRoundTrip) {
  const CovarianceMatrix g = tmsv(2.5);
  const CovarianceMatrix back = CovarianceMatrix::from_json(g.to_json());
  expect_matrix_near(back.matrix(), g.matrix(), 0.0);
}

TEST(Gaussian, SpectrumExamples) {
  const auto vac = symplectic_eigenvalues(vacuum(1));
  ASSERT_EQ(vac.size(), 1u);
  EXPECT_DOUBLE_EQ(vac[0], 1.0);

  const auto pure = symplectic_eigenvalues(tmsv(2.0));
  ASSERT_EQ(pure.size(), 2u);
  EXPECT_NEAR(pure[0], 1.0, 1e-12);
  EXPECT_NEAR(pure[1], 1.0, 1e-12);

  // TMSV mu = 2 after eta = 0.5 pure loss on B.
  Eigen::MatrixXd m = diag({2, 2, 1.5, 1.5});
  const double c = std::sqrt(1.5);
  m(0, 2) = m(2, 0) = c;
  m(1, 3) = m(3, 1) = -c;
  const auto lossy = symplectic_eigenvalues(CovarianceMatrix(m));
  EXPECT_NEAR(lossy[0], 1.5, 1e-12);
  EXPECT_NEAR(lossy[1], 1.0, 1e-12);
}

TEST(Gaussian, SpectrumRejectsUnphysicalStates) {
  EXPECT_THROW(symplectic_eigenvalues(CovarianceMatrix(diag({0.5, 0.5}))), NonPhysicalState);
  EXPECT_THROW(symplectic_eigenvalues(CovarianceMatrix(diag({-1.0, 1.0}))), NonPhysicalState);
  EXPECT_FALSE(is_physical(CovarianceMatrix(diag({0.9, 1.0}))));
  EXPECT_TRUE(is_physical(CovarianceMatrix(diag({0.5, 2.0}))));
  EXPECT_NO_THROW(symplectic_eigenvalues(CovarianceMatrix(diag({1.0 - 5e-10, 1.0}))));
}

TEST(Gaussian, EntropyExamples) {
  EXPECT_EQ(entropy_g(1.0), 0.0);
  EXPECT_NEAR(entropy_g(3.0), 2.0, 1e-14);
  EXPECT_NEAR(entropy_g(1.5), 0.90241, 1e-5);
  EXPECT_THROW(entropy_g(0.9), DomainError);
  double prev = 0.0;
  for (double nu = 1.0; nu < 50.0; nu *= 1.1) {
    const double g = entropy_g(nu);
    EXPECT_GE(g, prev);
    prev = g;
  }
}

TEST(Gaussian, VonNeumannEntropyExamples) {
  EXPECT_NEAR(von_neumann_entropy(tmsv(4.0)), 0.0, 1e-9);
  EXPECT_NEAR(von_neumann_entropy(thermal(3.0)), 2.0, 1e-12);
  EXPECT_NEAR(von_neumann_entropy(tensor(thermal(3.0), thermal(1.5))), 2.90241, 1e-5);
}

TEST(Gaussian, EntropyIsAdditiveOverTensorProducts) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const CovarianceMatrix a = random_thermal_product(rng, 1 + trial % 3);
    const CovarianceMatrix b = random_thermal_product(rng, 1 + trial % 2);
    EXPECT_NEAR(von_neumann_entropy(tensor(a, b)), von_neumann_entropy(a) + von_neumann_entropy(b), 1e-9);
  }
}

TEST(Gaussian, HomodyneConditioningExamples) {
  const CovarianceMatrix x = condition_on_homodyne(tmsv(2.0), 1, Quadrature::X);
  expect_matrix_near(x.matrix(), diag({0.5, 2.0}), 1e-12);
  const CovarianceMatrix p = condition_on_homodyne(tmsv(2.0), 1, Quadrature::P);
  expect_matrix_near(p.matrix(), diag({2.0, 0.5}), 1e-12);
  const CovarianceMatrix prod = tensor(thermal(2.0), CovarianceMatrix(diag({0.5, 2.0})));
  expect_matrix_near(condition_on_homodyne(prod, 0, Quadrature::X).matrix(), diag({0.5, 2.0}), 1e-15);
  expect_matrix_near(condition_on_homodyne(prod, 1, Quadrature::P).matrix(), diag({2.0, 2.0}), 1e-15);
  EXPECT_THROW(condition_on_homodyne(tmsv(2.0), 2, Quadrature::X), IndexError);
  EXPECT_THROW(condition_on_homodyne(vacuum(1), 0, Quadrature::X), DomainError);
}

TEST(Gaussian, HeterodyneConditioningExamples) {
  expect_matrix_near(condition_on_heterodyne(tmsv(4.0), 0).matrix(), diag({1.0, 1.0}), 1e-12);
  expect_matrix_near(condition_on_heterodyne(tmsv(2.0), 0).matrix(), diag({1.0, 1.0}), 1e-12);
  const CovarianceMatrix prod = tensor(thermal(2.0), thermal(3.0));
  expect_matrix_near(condition_on_heterodyne(prod, 1).matrix(), diag({2.0, 2.0}), 1e-15);
}

TEST(Gaussian, ConditioningIsPhysicalAndPhaseIndependent) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    CovarianceMatrix g = tensor(tmsv(1.0 + 5.0 * u(rng)), thermal(1.0 + u(rng)));
    g = apply_qnd(g, 1, 2, 2.0 * u(rng) - 1.0);
    g = apply_squeezer(g, 2, 0.2 + u(rng));
    for (std::size_t m = 0; m < 3; ++m) {
      EXPECT_TRUE(is_physical(condition_on_homodyne(g, m, Quadrature::X)));
      EXPECT_TRUE(is_physical(condition_on_heterodyne(g, m)));
    }
    // A phase rotation on unmeasured mode 0 is a local unitary: spectrum of the
    // conditional state is unchanged.
    const double th = 6.0 * u(rng);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(6, 6);
    r.block(0, 0, 2, 2) << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
    const CovarianceMatrix rotated = apply_symplectic(g, r);
    const auto a = symplectic_eigenvalues(condition_on_homodyne(g, 2, Quadrature::X));
    const auto b = symplectic_eigenvalues(condition_on_homodyne(rotated, 2, Quadrature::X));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(Gaussian, ConstructorExamples) {
  expect_matrix_near(apply_squeezer(vacuum(1), 0, 0.5).matrix(), diag({0.5, 2.0}), 1e-15);
  expect_matrix_near(tmsv(1.0).matrix(), Eigen::MatrixXd::Identity(4, 4), 0.0);
  const CovarianceMatrix q = apply_qnd(vacuum(2), 0, 1, 1.0);
  EXPECT_NEAR(q.variance(1, Quadrature::P), 2.0, 1e-15);
  EXPECT_NEAR(q.variance(0, Quadrature::X), 1.0, 1e-15);
  for (double nu : symplectic_eigenvalues(q)) EXPECT_NEAR(nu, 1.0, 1e-12);
  EXPECT_THROW(tmsv(0.5), DomainError);
  EXPECT_THROW(apply_squeezer(vacuum(1), 0, 0.0), DomainError);
}

TEST(Gaussian, QndGateIsSymplectic) {
  // S Omega S^T = Omega for the conjugation matrix.
  const CovarianceMatrix id = vacuum(2);
  const Eigen::MatrixXd ss = apply_qnd(id, 0, 1, 0.7).matrix();  // = S S^T
  // Purity of S S^T is equivalent to S being symplectic up to an orthogonal factor.
  for (double nu : symplectic_eigenvalues(CovarianceMatrix(ss))) EXPECT_NEAR(nu, 1.0, 1e-12);
}

TEST(Gaussian, PurityPreservedUnderSymplecticMaps) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    CovarianceMatrix g = tensor(tmsv(1.0 + 10.0 * u(rng)), vacuum(1));
    g = apply_squeezer(g, trial % 3, 0.05 + 3.0 * u(rng));
    g = apply_qnd(g, (trial + 1) % 3, (trial + 2) % 3, 4.0 * u(rng) - 2.0);
    g = apply_squeezer(g, (trial + 2) % 3, 0.05 + 3.0 * u(rng));
    for (double nu : symplectic_eigenvalues(g)) EXPECT_NEAR(nu, 1.0, 1e-8);
  }
}

TEST(Gaussian, PartialTraceAndReducedState) {
  const CovarianceMatrix g = tensor(tensor(thermal(2.0), thermal(3.0)), thermal(4.0));
  const std::array<std::size_t, 1> drop{1};
  expect_matrix_near(partial_trace(g, drop).matrix(), diag({2, 2, 4, 4}), 0.0);
  const std::array<std::size_t, 2> keep{2, 0};
  expect_matrix_near(reduced_state(g, keep).matrix(), diag({4, 4, 2, 2}), 0.0);
  const std::array<std::size_t, 1> bad{5};
  EXPECT_THROW(partial_trace(g, bad), IndexError);
}
