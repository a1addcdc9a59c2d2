#pragma once

// Key-rate maximization over (V_s, V_m): coarse grid, then a Nelder-Mead simplex in
// (log10 V_s, log10 V_m) started from the best grid point.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/source.hpp"

namespace cvqkd {

enum class ProtocolFamily { Coherent, Squeezed };

struct OptimizationSpec {
  ProtocolFamily family = ProtocolFamily::Squeezed;
  double vs_cap_db = -10.0;  // strongest allowed squeezing, dB, <= 0
  /// Search only V_m at this V_s (squeezed family).
  std::optional<double> fix_vs;
  double vm_min = 1e-3;  // smallest non-zero V_m of the log grid, SNU
  double vm_max = 1e3;   // SNU
  std::size_t vs_points = 25;
  std::size_t vm_points = 25;  // including V_m = 0
  double tolerance = 1e-6;     // bits per use
  std::size_t max_iterations = 2000;
  bool trace = false;

  void validate() const;
};

struct TracePoint {
  std::string stage;  // "grid" or "simplex"
  double vs;
  double vm;
  double rate;
};

struct OptimizationResult {
  double vs = 1.0;
  double vm = 0.0;
  KeyRateResult result;
  ProtocolParams protocol;
  bool no_positive_rate = false;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  std::vector<TracePoint> trace;
};

/// Maximizes the asymptotic rate; the finite-size rate is reported at the optimum.
/// `protocol` supplies beta, V_AN, reconciliation and noise trust. Grid points are
/// evaluated on up to `jobs` threads; the result does not depend on `jobs`.
OptimizationResult optimize(const OptimizationSpec& spec, const ProtocolParams& protocol,
                            const CompositeChannel& channel,
                            const std::optional<FiniteSizeParams>& finite = std::nullopt, unsigned jobs = 1);

}  // namespace cvqkd
