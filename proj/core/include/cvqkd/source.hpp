#pragma once

// Entanglement-based equivalents of the prepare-and-measure coherent- and
// squeezed-state sources.

#include <cstddef>

#include "cvqkd/gaussian.hpp"

namespace cvqkd {

enum class Reconciliation { Direct, Reverse };
enum class NoiseTrust { Trusted, Untrusted };
enum class AliceMeasurement { HomodyneX, Heterodyne };

struct ProtocolParams {
  double vs = 1.0;              // squeezed-quadrature variance, SNU, (0, 1]
  double vm = 0.0;              // modulation variance, SNU
  bool both_quadratures = true;  // b = 1 (coherent protocol) or b = 0 (squeezed protocol)
  double van = 0.0;             // anti-squeezing noise on P, SNU; only with b = 0
  Reconciliation reconciliation = Reconciliation::Reverse;
  double beta = 1.0;
  NoiseTrust prep_noise_trust = NoiseTrust::Trusted;

  static ProtocolParams coherent(double vm, double beta = 1.0);
  static ProtocolParams squeezed(double vs, double vm, double beta = 1.0, double van = 0.0);

  bool is_coherent() const { return both_quadratures; }
  /// Throws DomainError when the parameter invariants are violated.
  void validate() const;
};

/// Pure (or, for untrusted V_AN, mixed) state over (Alice's mode, [sender ancilla], B).
struct SourceState {
  CovarianceMatrix gamma;
  AliceMeasurement alice_measurement;
  std::size_t alice_mode = 0;
  std::size_t signal_mode = 1;
};

/// Coherent: tmsv(V_m + 1), Alice heterodynes.
/// Squeezed: tmsv(sqrt(1 + V_m/V_s)) followed by a squeezer s = sqrt(V_s (V_s + V_m)) on B,
/// Alice homodynes X. Trusted anti-squeezing noise purifies through a vacuum ancilla
/// and a QND gate of gain sqrt(V_AN); untrusted noise is added to B's P variance.
SourceState build_source(const ProtocolParams& params);

/// 10^(dB/10). Squeezing is quoted in negative dB (V_s = db_to_linear(-3) ~ 0.501).
double db_to_linear(double db);
/// 10 log10(value), value > 0.
double linear_to_db(double value);

}  // namespace cvqkd
