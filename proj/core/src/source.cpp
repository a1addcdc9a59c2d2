#include "cvqkd/source.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>

#include "cvqkd/errors.hpp"

namespace cvqkd {

ProtocolParams ProtocolParams::coherent(double vm, double beta) {
  ProtocolParams p;
  p.vs = 1.0;
  p.vm = vm;
  p.both_quadratures = true;
  p.beta = beta;
  return p;
}

ProtocolParams ProtocolParams::squeezed(double vs, double vm, double beta, double van) {
  ProtocolParams p;
  p.vs = vs;
  p.vm = vm;
  p.both_quadratures = false;
  p.beta = beta;
  p.van = van;
  return p;
}

// V_s = 1 with b = 0 is admitted: it is the unsqueezed end of the squeezed family's
// search range.
void ProtocolParams::validate() const {
  if (!(vs > 0.0 && vs <= 1.0)) throw DomainError(fmt::format("V_s must lie in (0, 1], got {}", vs));
  if (!(vm >= 0.0) || !std::isfinite(vm)) throw DomainError(fmt::format("V_m must be >= 0, got {}", vm));
  if (!(van >= 0.0) || !std::isfinite(van)) throw DomainError(fmt::format("V_AN must be >= 0, got {}", van));
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError(fmt::format("beta must lie in [0, 1], got {}", beta));
  if (both_quadratures) {
    if (vs != 1.0) throw DomainError("the coherent protocol (b = 1) requires V_s = 1");
    if (van != 0.0) throw DomainError("anti-squeezing noise is only allowed with b = 0");
  }
}

SourceState build_source(const ProtocolParams& params) {
  params.validate();

  if (params.both_quadratures) {
    return SourceState{tmsv(params.vm + 1.0), AliceMeasurement::Heterodyne, 0, 1};
  }

  const double mu = std::sqrt(1.0 + params.vm / params.vs);
  const double s = std::sqrt(params.vs * (params.vs + params.vm));
  CovarianceMatrix ab = apply_squeezer(tmsv(mu), 1, s);

  if (params.van == 0.0) return SourceState{std::move(ab), AliceMeasurement::HomodyneX, 0, 1};

  if (params.prep_noise_trust == NoiseTrust::Untrusted) {
    Eigen::MatrixXd m = ab.matrix();
    const auto pb = static_cast<Eigen::Index>(quadrature_index(1, Quadrature::P));
    m(pb, pb) += params.van;
    return SourceState{CovarianceMatrix(std::move(m)), AliceMeasurement::HomodyneX, 0, 1};
  }

  // Mode order (A, ancilla, B).
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(6, 6);
  const std::array<Eigen::Index, 4> map{0, 1, 4, 5};
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      m(map[r], map[c]) = ab.matrix()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  CovarianceMatrix three(std::move(m));
  return SourceState{apply_qnd(three, 1, 2, std::sqrt(params.van)), AliceMeasurement::HomodyneX, 0, 2};
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double value) {
  if (!(value > 0.0)) throw DomainError(fmt::format("dB conversion requires a positive value, got {}", value));
  return 10.0 * std::log10(value);
}

}  // namespace cvqkd
