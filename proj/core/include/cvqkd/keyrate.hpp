#pragma once

// Mutual information, Holevo bounds and key rates of the Gaussian protocols under
// collective attacks, evaluated on the fading-averaged state.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/source.hpp"

namespace cvqkd {

struct FiniteSizeParams {
  double n = 1e6;  // block size; a double so that asymptotic checks can use n = 1e18
  double eps_bar = 1e-10;
  double key_fraction = 1.0;

  /// Throws DomainError unless n >= 1e3, 0 < eps_bar < 1 and 0 < key_fraction <= 1.
  void validate() const;
};

/// Finite-size penalty Delta(n) subtracted from the asymptotic rate.
class FiniteSizeCorrection {
 public:
  virtual ~FiniteSizeCorrection() = default;
  virtual double penalty(const FiniteSizeParams& params) const = 0;
  virtual std::string name() const = 0;
};

/// Delta(n) = 7 sqrt(log2(2 / eps_bar) / n).
class StandardFiniteSize final : public FiniteSizeCorrection {
 public:
  double penalty(const FiniteSizeParams& params) const override;
  std::string name() const override { return "7sqrt-log2"; }
};

const FiniteSizeCorrection& standard_finite_size();

struct KeyRateResult {
  double i_ab = 0.0;
  double chi = 0.0;
  double rate_asymptotic = 0.0;
  std::optional<double> rate_finite;
  std::optional<double> n_block;
  std::optional<double> penalty;
  Reconciliation reconciliation = Reconciliation::Reverse;
  double v_b = 0.0;
  double v_b_given_a = 0.0;
  std::vector<double> spectrum;              // symplectic spectrum of the shared state
  std::vector<double> conditional_spectrum;  // after the reference party's measurement
  /// Direct reconciliation beyond its 3 dB validity range (eta_comb <eta> <= 1/2).
  bool dr_warning = false;
};

/// 1/2 log2(V_B / V_B|A) for Bob's X homodyne.
double mutual_information(const SharedState& state);
/// S(shared) - S(shared | Bob's X homodyne).
double holevo_rr(const SharedState& state);
/// S(shared) - S(shared | Alice's measurement).
double holevo_dr(const SharedState& state);

/// Rate on a given shared state. The finite-size rate is key_fraction (R - Delta) when
/// R - Delta >= 0; a deficit is reported unscaled.
KeyRateResult key_rate_from_state(const SharedState& state, const ProtocolParams& protocol,
                                  const std::optional<FiniteSizeParams>& finite = std::nullopt,
                                  const FiniteSizeCorrection& correction = standard_finite_size());

enum class ChannelRoute { Mixture, EquivalentFixed };

/// source -> composite channel -> key rate.
KeyRateResult key_rate(const ProtocolParams& protocol, const CompositeChannel& channel,
                       const std::optional<FiniteSizeParams>& finite = std::nullopt,
                       ChannelRoute route = ChannelRoute::Mixture,
                       const FiniteSizeCorrection& correction = standard_finite_size());

}  // namespace cvqkd
