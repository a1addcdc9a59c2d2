#pragma once

// Elliptic-beam model of free-space transmittance through weak turbulence.
//
// A beam of initial spot radius W0 reaches a circular aperture of radius a as an
// elliptic spot with semi-axes W_i^2 = W0^2 exp(Theta_i), orientation phi and centroid
// (x0, y0). (x0, y0, Theta_1, Theta_2) is Gaussian with moments from a coefficient
// table, phi is uniform on [0, pi/2], and each draw is mapped to a transmittance through
// the closed-form aperture overlap approximation. The formulas are collected in
// docs/elliptic_beam.md.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cvqkd/channel.hpp"

namespace cvqkd {

struct BeamScenario {
  double wavelength = 1550e-9;  // m
  double w0 = 0.04;             // initial spot radius, m
  double aperture = 0.02;       // aperture radius, m
  double distance = 1000.0;     // m
  std::optional<double> cn2;    // m^(-2/3); exactly one of cn2 / rytov is set
  std::optional<double> rytov;  // sigma_R^2, dimensionless
  bool tracking = false;
  /// Focal length of the transmitter, m. Unset: focused on the receiver (the form of
  /// the published coefficient table). +infinity: collimated.
  std::optional<double> focal_length;

  double wavenumber() const;
  /// Fresnel parameter Omega = k W0^2 / (2 L).
  double fresnel() const;
  double rytov_variance() const;
  /// Vacuum spot offset (1 - L/F)^2 added to <W^2>/W0^2.
  double diffraction_offset() const;
  void validate() const;
  std::string to_json() const;
};

/// sigma_R^2 = 1.23 C_n^2 k^(7/6) L^(11/6).
double rytov(double cn2, double wavenumber, double distance);

/// Versioned coefficients of the weak-turbulence moment table.
struct TurbulenceTable {
  std::string version;
  double wander = 0.33;            // <x0^2> = wander W0^2 sigma_R^2 Omega^(-7/6)
  double broadening = 2.96;        // <W^2> = W0^2 [f + (1 + broadening q) / Omega^2], q = sigma_R^2 Omega^(5/6)
  double theta_variance = 1.2;     // <W^4> - <W^2>^2 = W0^4 theta_variance q / Omega^4
  double theta_covariance = 0.8;   // <W1^2 W2^2> - <W^2>^2 = -W0^4 theta_covariance q / Omega^4

  /// Throws ConfigError for missing, non-numeric or non-positive coefficients.
  static TurbulenceTable from_json(std::string_view text);
  /// The table shipped in core/data/turbulence_weak.json.
  static const TurbulenceTable& published();
  void validate() const;
  std::string to_json() const;
};

/// Gaussian law of v = (x0, y0, Theta_1, Theta_2).
struct BeamMoments {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
};

/// Moment table for the given turbulence strength and geometry. `diffraction_offset`
/// is (1 - L/F)^2; tracking suppresses centroid wander.
BeamMoments turbulence_gaussian_params(double rytov_variance, double fresnel, double w0, const TurbulenceTable& table,
                                       double diffraction_offset = 0.0, bool tracking = false);
BeamMoments turbulence_gaussian_params(const BeamScenario& scenario, const TurbulenceTable& table);

struct EllipticSample {
  double x0 = 0.0;
  double y0 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double phi = 0.0;
};

/// Scale R(xi) and shape lambda(xi) functions of the overlap approximation.
struct ScaleShape {
  double scale;
  double shape;
};
ScaleShape scale_shape(double xi, double aperture);

/// Transmittance of the elliptic spot centred on the aperture.
double centered_transmittance(double w1, double w2, double aperture);
/// Effective radius of the circular spot matching the elliptic one along `angle`.
double effective_radius(double w1, double w2, double angle, double aperture);
/// Transmittance of an elliptic spot with semi-axes w1, w2 at offset (x0, y0), clamped to [0, 1].
double elliptic_transmittance(double w1, double w2, double phi, double x0, double y0, double aperture);
double transmittance(const EllipticSample& sample, const BeamScenario& scenario);

struct SimulationResult {
  std::vector<double> eta;
  FadingStats stats;
  std::string metadata_json;
};

/// n transmittance draws; a pure function of (scenario, table, n, seed) for any `jobs`.
SimulationResult simulate(const BeamScenario& scenario, std::size_t n, std::uint64_t seed,
                          const TurbulenceTable& table = TurbulenceTable::published(), unsigned jobs = 1);

}  // namespace cvqkd
