#include "cvqkd/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cvqkd/errors.hpp"
#include "cvqkd/parallel.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/special_functions.hpp"
#include "embedded.hpp"

namespace cvqkd {
namespace {

using nlohmann::json;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// Below this x = a^2 xi^2 the ratio N/D is formed from its Taylor series.
constexpr double kSmallX = 0.5;

// ln(N/D) with N = 2(1 - e^(-x/2)) and D = 1 - e^(-x) I0(x). Both vanish like x, and
// N - D ~ x^2/2, so for small x the difference is summed term by term.
double log_ratio(double x, double d) {
  if (x >= kSmallX) return std::log(-2.0 * std::expm1(-0.5 * x) / d);
  // D = -sum_{k>=1} c_k x^k with c_k the coefficients of e^(-x) I0(x);
  // N = sum_{k>=1} n_k x^k with n_k = 2 (-1)^(k+1) / (2^k k!).
  double c = 1.0;
  double n = -2.0;
  double xk = 1.0;
  double diff = 0.0;
  for (int k = 1; k < 60; ++k) {
    c *= (k - 0.5) * -2.0 / (static_cast<double>(k) * static_cast<double>(k));
    n *= -0.5 / static_cast<double>(k);
    xk *= x;
    const double term = (n + c) * xk;
    diff += term;
    if (k > 2 && std::abs(term) < 1e-18 * std::abs(diff)) break;
  }
  return std::log1p(diff / d);
}

void clamp_unit(double& eta) {
  if (!std::isfinite(eta)) throw NumericalFailure("transmittance evaluation produced a non-finite value");
  eta = std::clamp(eta, 0.0, 1.0);
}

// Lower-triangular factor of a positive semidefinite 4x4 matrix; zero pivots give zero columns.
Eigen::Matrix4d semidefinite_cholesky(const Eigen::Matrix4d& a) {
  Eigen::Matrix4d l = Eigen::Matrix4d::Zero();
  const double scale = std::max(1e-300, a.diagonal().cwiseAbs().maxCoeff());
  for (int j = 0; j < 4; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -1e-12 * scale) throw DomainError("beam moment covariance is not positive semidefinite");
    if (d <= 1e-15 * scale) continue;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < 4; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

}  // namespace

double BeamScenario::wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }

double BeamScenario::fresnel() const { return wavenumber() * w0 * w0 / (2.0 * distance); }

double BeamScenario::rytov_variance() const {
  if (rytov) return *rytov;
  return cvqkd::rytov(cn2.value_or(0.0), wavenumber(), distance);
}

double BeamScenario::diffraction_offset() const {
  if (!focal_length) return 0.0;
  if (std::isinf(*focal_length)) return 1.0;
  const double r = 1.0 - distance / *focal_length;
  return r * r;
}

void BeamScenario::validate() const {
  if (!positive_finite(wavelength)) throw ConfigError(fmt::format("beam wavelength must be > 0, got {}", wavelength));
  if (!positive_finite(w0)) throw ConfigError(fmt::format("beam w0 must be > 0, got {}", w0));
  if (!positive_finite(aperture)) throw ConfigError(fmt::format("beam aperture must be > 0, got {}", aperture));
  if (!positive_finite(distance)) throw ConfigError(fmt::format("beam distance must be > 0, got {}", distance));
  if (cn2 && rytov) throw ConfigError("beam scenario sets both cn2 and rytov");
  if (!cn2 && !rytov) throw ConfigError("beam scenario needs cn2 or rytov");
  if (cn2 && !(std::isfinite(*cn2) && *cn2 >= 0.0)) throw ConfigError(fmt::format("cn2 must be >= 0, got {}", *cn2));
  if (rytov && !(std::isfinite(*rytov) && *rytov >= 0.0))
    throw ConfigError(fmt::format("rytov variance must be >= 0, got {}", *rytov));
  if (focal_length && !(*focal_length > 0.0))
    throw ConfigError(fmt::format("focal_length must be > 0, got {}", *focal_length));
}

std::string BeamScenario::to_json() const {
  json j{{"wavelength", wavelength}, {"w0", w0}, {"aperture", aperture}, {"distance", distance}, {"tracking", tracking}};
  if (cn2) j["cn2"] = *cn2;
  if (rytov) j["rytov"] = *rytov;
  if (focal_length) {
    if (std::isinf(*focal_length))
      j["focus"] = "collimated";
    else
      j["focal_length"] = *focal_length;
  } else {
    j["focus"] = "receiver";
  }
  return j.dump();
}

double rytov(double cn2, double wavenumber, double distance) {
  if (!(cn2 >= 0.0) || !positive_finite(wavenumber) || !positive_finite(distance))
    throw DomainError(fmt::format("rytov needs cn2 >= 0, k > 0, L > 0 (got {}, {}, {})", cn2, wavenumber, distance));
  return 1.23 * cn2 * std::pow(wavenumber, 7.0 / 6.0) * std::pow(distance, 11.0 / 6.0);
}

TurbulenceTable TurbulenceTable::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("turbulence table is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("turbulence table must be a JSON object");
  TurbulenceTable t;
  auto number = [&](const char* key) {
    if (!j.contains(key)) throw ConfigError(fmt::format("turbulence table is missing '{}'", key));
    if (!j[key].is_number()) throw ConfigError(fmt::format("turbulence table entry '{}' must be a number", key));
    return j[key].get<double>();
  };
  for (const auto& [key, value] : j.items()) {
    static const char* const known[] = {"version", "provenance", "wander", "broadening", "theta_variance",
                                        "theta_covariance"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw ConfigError(fmt::format("turbulence table has unknown key '{}'", key));
  }
  if (!j.contains("version") || !j["version"].is_string() || j["version"].get<std::string>().empty())
    throw ConfigError("turbulence table needs a non-empty string 'version'");
  t.version = j["version"].get<std::string>();
  t.wander = number("wander");
  t.broadening = number("broadening");
  t.theta_variance = number("theta_variance");
  t.theta_covariance = number("theta_covariance");
  t.validate();
  return t;
}

const TurbulenceTable& TurbulenceTable::published() {
  static const TurbulenceTable table = from_json(detail::embedded_turbulence_table());
  return table;
}

void TurbulenceTable::validate() const {
  if (version.empty()) throw ConfigError("turbulence table version is empty");
  for (auto [name, v] : {std::pair{"wander", wander}, std::pair{"broadening", broadening},
                         std::pair{"theta_variance", theta_variance}, std::pair{"theta_covariance", theta_covariance}}) {
    if (!(std::isfinite(v) && v >= 0.0)) throw ConfigError(fmt::format("turbulence coefficient {} must be >= 0", name));
  }
  if (theta_covariance > theta_variance)
    throw ConfigError("turbulence table needs theta_covariance <= theta_variance");
}

std::string TurbulenceTable::to_json() const {
  return json{{"version", version},
              {"wander", wander},
              {"broadening", broadening},
              {"theta_variance", theta_variance},
              {"theta_covariance", theta_covariance}}
      .dump();
}

BeamMoments turbulence_gaussian_params(double rytov_variance, double fresnel, double w0, const TurbulenceTable& table,
                                       double diffraction_offset, bool tracking) {
  if (!(std::isfinite(rytov_variance) && rytov_variance >= 0.0))
    throw DomainError(fmt::format("rytov variance must be >= 0, got {}", rytov_variance));
  if (!positive_finite(fresnel)) throw DomainError(fmt::format("Fresnel parameter must be > 0, got {}", fresnel));
  if (!positive_finite(w0)) throw DomainError(fmt::format("w0 must be > 0, got {}", w0));
  if (!(diffraction_offset >= 0.0)) throw DomainError("diffraction offset must be >= 0");
  table.validate();

  const double om2 = fresnel * fresnel;
  const double q = rytov_variance * std::pow(fresnel, 5.0 / 6.0);
  // Moments of W_i^2 / W0^2.
  const double m2 = diffraction_offset + (1.0 + table.broadening * q) / om2;
  const double dm4 = table.theta_variance * q / (om2 * om2);
  const double dm12 = table.theta_covariance * q / (om2 * om2);
  const double rel12 = dm12 / (m2 * m2);
  if (!(rel12 < 1.0)) throw NumericalFailure("turbulence moments give a non-positive <W1^2 W2^2>");

  BeamMoments out;
  const double mean_theta = std::log(m2) - 0.5 * std::log1p(dm4 / (m2 * m2));
  const double var_theta = std::log1p(dm4 / (m2 * m2));
  const double cov_theta = std::log1p(-rel12);
  out.mean << 0.0, 0.0, mean_theta, mean_theta;
  const double wander = tracking ? 0.0 : table.wander * w0 * w0 * rytov_variance * std::pow(fresnel, -7.0 / 6.0);
  out.cov(0, 0) = wander;
  out.cov(1, 1) = wander;
  out.cov(2, 2) = var_theta;
  out.cov(3, 3) = var_theta;
  out.cov(2, 3) = cov_theta;
  out.cov(3, 2) = cov_theta;
  return out;
}

BeamMoments turbulence_gaussian_params(const BeamScenario& scenario, const TurbulenceTable& table) {
  scenario.validate();
  return turbulence_gaussian_params(scenario.rytov_variance(), scenario.fresnel(), scenario.w0, table,
                                    scenario.diffraction_offset(), scenario.tracking);
}

ScaleShape scale_shape(double xi, double aperture) {
  const double x = aperture * aperture * xi * xi;
  if (!(x > 0.0) || !std::isfinite(x)) throw NumericalFailure(fmt::format("scale/shape function at a^2 xi^2 = {}", x));
  const double d = special::one_minus_i0e(x);
  const double ln_term = log_ratio(x, d);
  if (!(ln_term > 0.0)) throw NumericalFailure(fmt::format("scale/shape function lost precision at x = {}", x));
  const double shape = 2.0 * x * special::bessel_i1e(x) / d / ln_term;
  const double scale = std::pow(ln_term, -1.0 / shape);
  return {scale, shape};
}

double centered_transmittance(double w1, double w2, double aperture) {
  if (!positive_finite(w1) || !positive_finite(w2) || !positive_finite(aperture))
    throw DomainError("centered_transmittance needs positive radii");
  const double a2 = aperture * aperture;
  const double i1 = 1.0 / (w1 * w1);
  const double i2 = 1.0 / (w2 * w2);
  const double z = a2 * std::abs(i1 - i2);
  const double s = a2 * (i1 + i2);
  double eta = 1.0 - special::bessel_i0e(z) * std::exp(z - s);
  const double xi = std::abs(1.0 / w1 - 1.0 / w2);
  if (xi > 0.0) {
    const double spread = -std::expm1(-0.5 * a2 * xi * xi);
    const auto [scale, shape] = scale_shape(xi, aperture);
    const double ratio = (w1 + w2) / std::abs(w1 - w2);
    eta -= 2.0 * spread * std::exp(-std::pow(ratio / scale, shape));
  }
  return eta;
}

double effective_radius(double w1, double w2, double angle, double aperture) {
  if (!positive_finite(w1) || !positive_finite(w2) || !positive_finite(aperture))
    throw DomainError("effective_radius needs positive radii");
  const double a2 = aperture * aperture;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double log_arg = std::log(4.0 * a2 / (w1 * w2)) + a2 / (w1 * w1) * (1.0 + 2.0 * c * c) +
                         a2 / (w2 * w2) * (1.0 + 2.0 * s * s);
  const double w = special::lambert_w0_exp(log_arg);
  return std::sqrt(4.0 * a2 / w);
}

double elliptic_transmittance(double w1, double w2, double phi, double x0, double y0, double aperture) {
  double eta = centered_transmittance(w1, w2, aperture);
  const double r0 = std::hypot(x0, y0);
  if (r0 > 0.0) {
    const double w_eff = effective_radius(w1, w2, phi - std::atan2(y0, x0), aperture);
    const auto [scale, shape] = scale_shape(2.0 / w_eff, aperture);
    eta *= std::exp(-std::pow(r0 / aperture / scale, shape));
  }
  clamp_unit(eta);
  return eta;
}

double transmittance(const EllipticSample& sample, const BeamScenario& scenario) {
  const double w1 = scenario.w0 * std::exp(0.5 * sample.theta1);
  const double w2 = scenario.w0 * std::exp(0.5 * sample.theta2);
  return elliptic_transmittance(w1, w2, sample.phi, sample.x0, sample.y0, scenario.aperture);
}

SimulationResult simulate(const BeamScenario& scenario, std::size_t n, std::uint64_t seed,
                          const TurbulenceTable& table, unsigned jobs) {
  if (n < 1) throw ConfigError("simulate needs n >= 1");
  const BeamMoments moments = turbulence_gaussian_params(scenario, table);
  const Eigen::Matrix4d chol = semidefinite_cholesky(moments.cov);

  SimulationResult out;
  out.eta.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    CounterRng rng(seed, i);
    Eigen::Vector4d z;
    for (int k = 0; k < 4; ++k) z[k] = rng.normal();
    const Eigen::Vector4d v = moments.mean + chol * z;
    EllipticSample s{v[0], v[1], v[2], v[3], 0.5 * std::numbers::pi * rng.uniform()};
    out.eta[i] = transmittance(s, scenario);
  });
  out.stats = fading_stats(out.eta);

  out.metadata_json = json{{"scenario", json::parse(scenario.to_json())},
                           {"seed", seed},
                           {"generator", CounterRng::kName},
                           {"n", n},
                           {"turbulence_table", table.version}}
                          .dump();
  return out;
}

}  // namespace cvqkd
