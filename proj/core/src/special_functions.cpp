#include "cvqkd/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "cvqkd/errors.hpp"

namespace cvqkd::special {
namespace {

constexpr double kSeriesLimit = 25.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_argument(double x, const char* name) {
  if (!(x >= 0.0) || std::isnan(x)) throw DomainError(fmt::format("{} requires x >= 0, got {}", name, x));
}

// I_nu(x) = sum_k (x/2)^(2k+nu) / (k! (k+nu)!), summed until terms are negligible.
double bessel_series(int nu, double x) {
  const double q = 0.25 * x * x;
  double term = (nu == 0) ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + nu));
    sum += term;
    if (term < kEps * 1e-3 * sum) return sum;
  }
  throw NumericalFailure(fmt::format("Bessel series did not converge at x = {}", x));
}

// exp(-x) I_nu(x) ~ (2 pi x)^(-1/2) sum_k (-1)^k a_k(nu) / x^k.
double bessel_asymptotic(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (8.0 * k * x);
    if (std::abs(next) > std::abs(term)) break;  // series started to diverge
    term = next;
    sum += term;
    if (std::abs(term) < kEps * 1e-3 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace

double bessel_i0e(double x) {
  check_argument(x, "bessel_i0e");
  if (std::isinf(x)) return 0.0;
  if (x <= kSeriesLimit) return std::exp(-x) * bessel_series(0, x);
  return bessel_asymptotic(0, x);
}

double bessel_i1e(double x) {
  check_argument(x, "bessel_i1e");
  if (std::isinf(x)) return 0.0;
  if (x <= kSeriesLimit) return std::exp(-x) * bessel_series(1, x);
  return bessel_asymptotic(1, x);
}

// exp(-x) I0(x) = 1F1(1/2; 1; -2x) = sum_k (1/2)_k (-2x)^k / (k!)^2. The k = 0 term is
// the 1 that cancels, so the remaining alternating series is summed directly for small x.
double one_minus_i0e(double x) {
  check_argument(x, "one_minus_i0e");
  if (x > 0.5) return 1.0 - bessel_i0e(x);
  double term = 1.0;
  double sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= (k - 0.5) * (-2.0 * x) / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (std::abs(term) < kEps * 1e-3 * std::abs(sum)) break;
  }
  return -sum;
}

double lambert_w0_exp(double t) {
  if (std::isnan(t)) throw DomainError("lambert_w0_exp of NaN");
  if (t == std::numeric_limits<double>::infinity()) return t;
  if (t < -700.0) return std::exp(t);  // W(z) = z - z^2 + ... and z^2 underflows

  // Newton on g(u) = e^u + u - t with u = ln w; g is convex and increasing.
  double u = (t > 1.0) ? std::log(t - std::log(t) + std::log(t) / t) : t - std::log1p(std::exp(t));
  for (int it = 0; it < 100; ++it) {
    const double eu = std::exp(u);
    const double step = (eu + u - t) / (eu + 1.0);
    u -= step;
    if (std::abs(step) <= 4.0 * kEps * std::max(1.0, std::abs(u))) return std::exp(u);
  }
  throw NumericalFailure(fmt::format("Lambert W iteration did not converge for t = {}", t));
}

double lambert_w0(double x) {
  constexpr double kBranch = -1.0 / std::numbers::e;
  if (!(x >= kBranch)) throw DomainError(fmt::format("lambert_w0 requires x >= -1/e, got {}", x));
  if (x == 0.0) return 0.0;
  if (x > 0.0) return lambert_w0_exp(std::log(x));

  // Halley on w e^w - x, starting from the branch-point expansion.
  const double p = std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * x + 1.0)));
  double w = (p < 0.5) ? -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p : x * (1.0 - x);
  if (p == 0.0) return -1.0;
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double fp = ew * (w + 1.0);
    if (fp == 0.0) return w;
    const double step = f / (fp - (w + 2.0) * f / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= 4.0 * kEps * std::max(1.0, std::abs(w))) return w;
  }
  throw NumericalFailure(fmt::format("Lambert W iteration did not converge for x = {}", x));
}

}  // namespace cvqkd::special
