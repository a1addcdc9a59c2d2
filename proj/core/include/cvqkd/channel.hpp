#pragma once

// Composite untrusted channel: fixed segment (eta1, eps1), fading segment
// (transmittance statistics, eps_atm), fixed segment (eta2, eps2).
//
// Excess noises are in SNU as seen at Bob's input and compose to
//   eps_plus = eps2 + eps_atm * eta2 + eps1 * eta2 * <eta>.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvqkd/gaussian.hpp"
#include "cvqkd/source.hpp"

namespace cvqkd {

/// First two moments of sqrt(eta) for a fading distribution on [0, 1].
struct FadingStats {
  double mean_eta = 1.0;
  double mean_sqrt_eta = 1.0;
  double var_sqrt = 0.0;  // <eta> - <sqrt eta>^2

  static FadingStats fixed(double eta);
  static FadingStats from_means(double mean_eta, double mean_sqrt_eta);
  /// <sqrt eta> = sqrt(<eta> - Var(sqrt eta)).
  static FadingStats from_variance(double mean_eta, double var_sqrt);

  /// Checks <sqrt eta>^2 <= <eta> <= <sqrt eta> and 0 <= Var <= 0.25 (1e-12 slack).
  void validate() const;
  std::string to_json() const;
};

/// Statistics of a transmittance sample set, using pairwise summation.
/// Throws DomainError for an empty set or samples outside [0, 1].
FadingStats fading_stats(std::span<const double> samples);

/// Pairwise (cascade) summation with a fixed split order.
double pairwise_sum(std::span<const double> values);

/// Equal-width histogram on [0, 1]; diagnostics only, never used for key rates.
struct Histogram {
  std::vector<std::size_t> counts;
  double bin_width() const { return counts.empty() ? 0.0 : 1.0 / static_cast<double>(counts.size()); }
};
Histogram fading_histogram(std::span<const double> samples, std::size_t bins = 200);

/// Fading-induced excess noise on a quadrature of variance `quadrature_variance`:
/// Var(sqrt eta) (V_q - 1). Negative for sub-shot-noise quadratures.
double effective_excess_noise(const FadingStats& stats, double quadrature_variance);

struct CompositeChannel {
  double eta1 = 1.0;
  double eta2 = 1.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps_atm = 0.0;
  FadingStats fading{};

  double eta_comb() const { return eta1 * eta2; }
  double eps_plus() const { return eps2 + eps_atm * eta2 + eps1 * eta2 * fading.mean_eta; }
  void validate() const;
};

/// Trusted modes plus Bob's mode after the channel.
struct SharedState {
  CovarianceMatrix gamma;
  AliceMeasurement alice_measurement;
  std::size_t alice_mode = 0;
  std::size_t bob_mode = 1;
};

/// Mixture average over sub-channels: Bob's block becomes
/// eta_comb <eta> (gamma_B - 1) + (1 + eps_plus) 1, trusted-B correlations scale
/// by sqrt(eta_comb) <sqrt eta>, trusted-trusted blocks are untouched.
/// Throws NonPhysicalState if the result violates the uncertainty relation.
SharedState apply_composite(const SourceState& source, const CompositeChannel& channel);

/// The same state written as a fixed channel of transmittance eta_comb <sqrt eta>^2
/// with per-quadrature fading noise eta_comb * eps_f(V_q) added to Bob's diagonal.
/// Agrees with apply_composite whenever Bob's input block is diagonal, which holds
/// for every source produced by build_source().
SharedState apply_equivalent_fixed(const SourceState& source, const CompositeChannel& channel);

}  // namespace cvqkd
