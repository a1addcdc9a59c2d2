#include "cvqkd/keyrate.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cvqkd/errors.hpp"

namespace cvqkd {
namespace {

constexpr double kNegativeGuard = -1e-9;

// Index of `mode` once `removed` has been conditioned away.
std::size_t shifted(std::size_t mode, std::size_t removed) { return mode > removed ? mode - 1 : mode; }

CovarianceMatrix condition_on_alice(const SharedState& state) {
  if (state.alice_measurement == AliceMeasurement::Heterodyne)
    return condition_on_heterodyne(state.gamma, state.alice_mode);
  return condition_on_homodyne(state.gamma, state.alice_mode, Quadrature::X);
}

double guarded(double chi, const char* what) {
  if (!std::isfinite(chi)) throw NumericalFailure(fmt::format("{} is not finite", what));
  if (chi < kNegativeGuard) throw InternalError(fmt::format("{} is negative ({})", what, chi));
  return chi < 0.0 ? 0.0 : chi;
}

}  // namespace

void FiniteSizeParams::validate() const {
  if (!(n >= 1e3) || !std::isfinite(n)) throw DomainError(fmt::format("block size must be >= 1e3, got {}", n));
  if (!(eps_bar > 0.0 && eps_bar < 1.0)) throw DomainError(fmt::format("eps_bar must lie in (0, 1), got {}", eps_bar));
  if (!(key_fraction > 0.0 && key_fraction <= 1.0))
    throw DomainError(fmt::format("key_fraction must lie in (0, 1], got {}", key_fraction));
}

double StandardFiniteSize::penalty(const FiniteSizeParams& params) const {
  params.validate();
  return 7.0 * std::sqrt(std::log2(2.0 / params.eps_bar) / params.n);
}

const FiniteSizeCorrection& standard_finite_size() {
  static const StandardFiniteSize instance;
  return instance;
}

double mutual_information(const SharedState& state) {
  const double vb = state.gamma.variance(state.bob_mode, Quadrature::X);
  const CovarianceMatrix cond = condition_on_alice(state);
  const double vba = cond.variance(shifted(state.bob_mode, state.alice_mode), Quadrature::X);
  if (!(vba > 0.0)) throw DegenerateInput(fmt::format("conditional variance V_B|A = {} is not positive", vba));
  const double i = 0.5 * std::log2(vb / vba);
  return guarded(i, "mutual information");
}

double holevo_rr(const SharedState& state) {
  const double s_all = von_neumann_entropy(state.gamma);
  const double s_cond = von_neumann_entropy(condition_on_homodyne(state.gamma, state.bob_mode, Quadrature::X));
  return guarded(s_all - s_cond, "Holevo bound chi_BE");
}

double holevo_dr(const SharedState& state) {
  const double s_all = von_neumann_entropy(state.gamma);
  const double s_cond = von_neumann_entropy(condition_on_alice(state));
  return guarded(s_all - s_cond, "Holevo bound chi_AE");
}

KeyRateResult key_rate_from_state(const SharedState& state, const ProtocolParams& protocol,
                                  const std::optional<FiniteSizeParams>& finite,
                                  const FiniteSizeCorrection& correction) {
  protocol.validate();
  KeyRateResult r;
  r.reconciliation = protocol.reconciliation;
  r.v_b = state.gamma.variance(state.bob_mode, Quadrature::X);
  const CovarianceMatrix given_a = condition_on_alice(state);
  r.v_b_given_a = given_a.variance(shifted(state.bob_mode, state.alice_mode), Quadrature::X);
  r.i_ab = mutual_information(state);
  r.spectrum = symplectic_eigenvalues(state.gamma);
  if (protocol.reconciliation == Reconciliation::Reverse) {
    r.chi = holevo_rr(state);
    r.conditional_spectrum = symplectic_eigenvalues(condition_on_homodyne(state.gamma, state.bob_mode, Quadrature::X));
  } else {
    r.chi = holevo_dr(state);
    r.conditional_spectrum = symplectic_eigenvalues(given_a);
  }
  r.rate_asymptotic = protocol.beta * r.i_ab - r.chi;
  if (finite) {
    const double delta = correction.penalty(*finite);
    const double net = r.rate_asymptotic - delta;
    r.penalty = delta;
    r.n_block = finite->n;
    r.rate_finite = net >= 0.0 ? finite->key_fraction * net : net;
  }
  return r;
}

KeyRateResult key_rate(const ProtocolParams& protocol, const CompositeChannel& channel,
                       const std::optional<FiniteSizeParams>& finite, ChannelRoute route,
                       const FiniteSizeCorrection& correction) {
  const SourceState source = build_source(protocol);
  const SharedState state =
      route == ChannelRoute::Mixture ? apply_composite(source, channel) : apply_equivalent_fixed(source, channel);
  KeyRateResult r = key_rate_from_state(state, protocol, finite, correction);
  r.dr_warning = protocol.reconciliation == Reconciliation::Direct && channel.eta_comb() * channel.fading.mean_eta <= 0.5;
  return r;
}

}  // namespace cvqkd
