#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {
namespace {

long double log1p_series(long double t) {
  long double sum = 0.0L;
  long double p = t;
  for (int k = 1; k < 400; ++k) {
    const long double term = p / k;
    sum += (k % 2 == 1) ? term : -term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
    p *= t;
  }
  return sum;
}

long double bessel_series(long double x, int order) {
  const long double q = 0.25L * x * x;
  long double term = order == 0 ? 1.0L : 0.5L * x;
  long double sum = term;
  for (int k = 1; k < 5000; ++k) {
    term *= q / (static_cast<long double>(k) * static_cast<long double>(k + order));
    sum += term;
    if (term < 1e-25L * sum) break;
  }
  return sum;
}

// Nodes and weights on [-1, 1].
const std::pair<std::vector<long double>, std::vector<long double>>& gauss_legendre(int n) {
  static thread_local std::map<int, std::pair<std::vector<long double>, std::vector<long double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<long double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    long double z = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2.0L * k - 1.0L) * z * p1 - (k - 1.0L) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0L);
      const long double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-19L) break;
    }
    x[i] = z;
    w[i] = 2.0L / ((1.0L - z * z) * dp * dp);
  }
  return cache[n] = {std::move(x), std::move(w)};
}

double g_bits(double nu) { return static_cast<double>(entropy_g(nu)); }

}  // namespace

long double entropy_g(long double nu) {
  const long double t = (nu - 1.0L) / 2.0L;
  if (t <= 0.0L) return 0.0L;
  const long double l1p = t < 0.1L ? log1p_series(t) : std::log(1.0L + t);
  return ((1.0L + t) * l1p - t * std::log(t)) / std::numbers::ln2_v<long double>;
}

long double bessel_i0(long double x) { return bessel_series(x, 0); }
long double bessel_i1(long double x) { return bessel_series(x, 1); }

long double lambert_w0(long double x) {
  const long double e = std::numbers::e_v<long double>;
  long double w;
  if (x < -0.25L) {
    const long double p = std::sqrt(2.0L * (e * x + 1.0L));
    w = -1.0L + p - p * p / 3.0L;
  } else if (x < 3.0L) {
    w = std::log1p(x) * 0.75L;
  } else {
    const long double l = std::log(x);
    w = l - std::log(l);
  }
  for (int i = 0; i < 200; ++i) {
    const long double ew = std::exp(w);
    const long double f = w * ew - x;
    const long double d = ew * (w + 1.0L) - (w + 2.0L) * f / (2.0L * w + 2.0L);
    const long double step = f / d;
    w -= step;
    if (std::fabs(step) <= 1e-19L * (1.0L + std::fabs(w))) break;
  }
  return w;
}

std::array<double, 2> two_mode_spectrum(const std::array<double, 16>& g) {
  auto at = [&](int r, int c) { return static_cast<long double>(g[4 * r + c]); };
  auto det2 = [&](int r, int c) { return at(r, c) * at(r + 1, c + 1) - at(r, c + 1) * at(r + 1, c); };
  // Full 4x4 determinant by cofactor expansion.
  long double m[4][4];
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r][c] = at(r, c);
  auto det3 = [&](int skip_row, int skip_col) {
    long double s[3][3];
    for (int r = 0, rr = 0; r < 4; ++r) {
      if (r == skip_row) continue;
      for (int c = 0, cc = 0; c < 4; ++c) {
        if (c == skip_col) continue;
        s[rr][cc++] = m[r][c];
      }
      ++rr;
    }
    return s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) - s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0]) +
           s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
  };
  long double det = 0.0L;
  for (int c = 0; c < 4; ++c) det += ((c % 2 == 0) ? 1.0L : -1.0L) * m[0][c] * det3(0, c);
  const long double delta = det2(0, 0) + det2(2, 2) + 2.0L * det2(0, 2);
  const long double disc = std::sqrt(std::max(0.0L, delta * delta - 4.0L * det));
  return {static_cast<double>(std::sqrt((delta + disc) / 2.0L)),
          static_cast<double>(std::sqrt(std::max(0.0L, (delta - disc) / 2.0L)))};
}

double overlap_integral(double w1, double w2, double phi, double x0, double y0, double a, int radial_nodes,
                        int angular_nodes) {
  const auto& [rx, rw] = gauss_legendre(radial_nodes);
  const auto& [tx, tw] = gauss_legendre(angular_nodes);
  const long double c = std::cos(phi), s = std::sin(phi);
  const long double norm = 2.0L / (std::numbers::pi_v<long double> * w1 * w2);
  long double sum = 0.0L;
  for (int i = 0; i < radial_nodes; ++i) {
    const long double rho = 0.5L * a * (rx[i] + 1.0L);
    long double ring = 0.0L;
    for (int j = 0; j < angular_nodes; ++j) {
      const long double th = std::numbers::pi_v<long double> * (tx[j] + 1.0L);
      const long double dx = rho * std::cos(th) - x0;
      const long double dy = rho * std::sin(th) - y0;
      const long double u = c * dx + s * dy;
      const long double v = -s * dx + c * dy;
      ring += tw[j] * std::exp(-2.0L * (u * u / (w1 * w1) + v * v / (w2 * w2)));
    }
    sum += rw[i] * rho * ring * std::numbers::pi_v<long double>;
  }
  return static_cast<double>(norm * sum * 0.5L * a);
}

ScalarRate coherent_rate(double vm, const ScalarChannel& ch, double beta, bool reverse) {
  const double a = vm + 1.0;
  const double b = ch.t_eta * vm + 1.0 + ch.eps;
  const double c2 = ch.t_sqrt * ch.t_sqrt * (a * a - 1.0);
  const double i_ab = 0.5 * std::log2(b / (b - c2 / (a + 1.0)));
  const double delta = a * a + b * b - 2.0 * c2;
  const double det = (a * b - c2) * (a * b - c2);
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * det));
  const double nu1 = std::sqrt((delta + disc) / 2.0);
  const double nu2 = std::sqrt(std::max(1.0, (delta - disc) / 2.0));
  const double nu3 = reverse ? std::sqrt(a * (a - c2 / b)) : b - c2 / (a + 1.0);
  const double chi = g_bits(nu1) + g_bits(nu2) - g_bits(nu3);
  return {i_ab, chi, beta * i_ab - chi};
}

ScalarRate squeezed_rate(double vs, double vm, const ScalarChannel& ch, double beta, bool reverse) {
  const double mu = std::sqrt(1.0 + vm / vs);
  const double s = std::sqrt(vs * (vs + vm));
  const double c = std::sqrt(mu * mu - 1.0);
  const double bx = ch.t_eta * (mu * s - 1.0) + 1.0 + ch.eps;
  const double bp = ch.t_eta * (mu / s - 1.0) + 1.0 + ch.eps;
  const double cx = ch.t_sqrt * c * std::sqrt(s);
  const double cp = -ch.t_sqrt * c / std::sqrt(s);
  const double i_ab = 0.5 * std::log2(bx / (bx - cx * cx / mu));
  const double delta = mu * mu + bx * bp + 2.0 * cx * cp;
  const double det = (mu * bx - cx * cx) * (mu * bp - cp * cp);
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * det));
  const double nu1 = std::sqrt((delta + disc) / 2.0);
  const double nu2 = std::sqrt(std::max(1.0, (delta - disc) / 2.0));
  const double nu3 = reverse ? std::sqrt((mu - cx * cx / bx) * mu) : std::sqrt((bx - cx * cx / mu) * bp);
  const double chi = g_bits(nu1) + g_bits(nu2) - g_bits(nu3);
  return {i_ab, chi, beta * i_ab - chi};
}

}  // namespace oracle
