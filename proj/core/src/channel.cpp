#include "cvqkd/channel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cvqkd/errors.hpp"

namespace cvqkd {
namespace {

constexpr double kJensenSlack = 1e-12;

double checked_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(fmt::format("{} must lie in [0, 1], got {}", name, v));
  return v;
}

}  // namespace

FadingStats FadingStats::fixed(double eta) {
  checked_fraction(eta, "transmittance");
  return FadingStats{eta, std::sqrt(eta), 0.0};
}

FadingStats FadingStats::from_means(double mean_eta, double mean_sqrt_eta) {
  FadingStats s{mean_eta, mean_sqrt_eta, mean_eta - mean_sqrt_eta * mean_sqrt_eta};
  if (s.var_sqrt < 0.0 && s.var_sqrt > -kJensenSlack) s.var_sqrt = 0.0;
  s.validate();
  return s;
}

FadingStats FadingStats::from_variance(double mean_eta, double var_sqrt) {
  checked_fraction(mean_eta, "<eta>");
  if (!(var_sqrt >= 0.0 && var_sqrt <= mean_eta)) {
    throw DomainError(fmt::format("Var(sqrt eta) must lie in [0, <eta>], got {}", var_sqrt));
  }
  FadingStats s{mean_eta, std::sqrt(mean_eta - var_sqrt), var_sqrt};
  s.validate();
  return s;
}

void FadingStats::validate() const {
  checked_fraction(mean_eta, "<eta>");
  checked_fraction(mean_sqrt_eta, "<sqrt eta>");
  if (mean_sqrt_eta * mean_sqrt_eta > mean_eta + kJensenSlack || mean_eta > mean_sqrt_eta + kJensenSlack) {
    throw DomainError(fmt::format("fading moments violate <sqrt eta>^2 <= <eta> <= <sqrt eta> ({}, {})",
                                  mean_eta, mean_sqrt_eta));
  }
  if (!(var_sqrt >= -kJensenSlack && var_sqrt <= 0.25 + kJensenSlack)) {
    throw DomainError(fmt::format("Var(sqrt eta) must lie in [0, 0.25], got {}", var_sqrt));
  }
}

std::string FadingStats::to_json() const {
  nlohmann::json j;
  j["mean_eta"] = mean_eta;
  j["mean_sqrt_eta"] = mean_sqrt_eta;
  j["var_sqrt"] = var_sqrt;
  return j.dump();
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 64;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

FadingStats fading_stats(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("fading_stats needs at least one sample");
  std::vector<double> roots(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double eta = samples[i];
    if (!(eta >= 0.0 && eta <= 1.0)) {
      throw DomainError(fmt::format("transmittance sample {} = {} outside [0, 1]", i, eta));
    }
    roots[i] = std::sqrt(eta);
  }
  const auto n = static_cast<double>(samples.size());
  const double mean = pairwise_sum(samples) / n;
  const double mean_sqrt = pairwise_sum(roots) / n;
  return FadingStats::from_means(std::min(mean, 1.0), std::min(mean_sqrt, 1.0));
}

Histogram fading_histogram(std::span<const double> samples, std::size_t bins) {
  if (bins == 0) throw DomainError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  for (double eta : samples) {
    checked_fraction(eta, "transmittance sample");
    auto k = static_cast<std::size_t>(eta * static_cast<double>(bins));
    h.counts[std::min(k, bins - 1)] += 1;
  }
  return h;
}

double effective_excess_noise(const FadingStats& stats, double quadrature_variance) {
  if (!(quadrature_variance > 0.0)) throw DomainError("quadrature variance must be > 0");
  return stats.var_sqrt * (quadrature_variance - 1.0);
}

void CompositeChannel::validate() const {
  if (!(eta1 > 0.0 && eta1 <= 1.0) || !(eta2 > 0.0 && eta2 <= 1.0)) {
    throw DomainError(fmt::format("fixed transmittances must lie in (0, 1], got {} and {}", eta1, eta2));
  }
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0) || !(eps_atm >= 0.0)) throw DomainError("excess noises must be >= 0");
  fading.validate();
}

namespace {

SharedState transform_bob(const SourceState& source, double cross_scale, const Eigen::Matrix2d& bob_block) {
  Eigen::MatrixXd m = source.gamma.matrix();
  const auto b = static_cast<Eigen::Index>(2 * source.signal_mode);
  const auto dim = static_cast<Eigen::Index>(source.gamma.dim());
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (i == b || i == b + 1) continue;
    m(i, b) *= cross_scale;
    m(i, b + 1) *= cross_scale;
    m(b, i) *= cross_scale;
    m(b + 1, i) *= cross_scale;
  }
  m.block<2, 2>(b, b) = bob_block;
  SharedState out{CovarianceMatrix(std::move(m)), source.alice_measurement, source.alice_mode,
                  source.signal_mode};
  require_physical(out.gamma);
  return out;
}

}  // namespace

SharedState apply_composite(const SourceState& source, const CompositeChannel& channel) {
  channel.validate();
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d gb = source.gamma.block(source.signal_mode, source.signal_mode);
  const Eigen::Matrix2d bob = channel.eta_comb() * channel.fading.mean_eta * (gb - id) + (1.0 + channel.eps_plus()) * id;
  const double cross = std::sqrt(channel.eta_comb()) * channel.fading.mean_sqrt_eta;
  return transform_bob(source, cross, bob);
}

SharedState apply_equivalent_fixed(const SourceState& source, const CompositeChannel& channel) {
  channel.validate();
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d gb = source.gamma.block(source.signal_mode, source.signal_mode);
  const double t = channel.eta_comb() * channel.fading.mean_sqrt_eta * channel.fading.mean_sqrt_eta;
  Eigen::Matrix2d bob = t * (gb - id) + (1.0 + channel.eps_plus()) * id;
  bob(0, 0) += channel.eta_comb() * effective_excess_noise(channel.fading, gb(0, 0));
  bob(1, 1) += channel.eta_comb() * effective_excess_noise(channel.fading, gb(1, 1));
  return transform_bob(source, std::sqrt(t), bob);
}

}  // namespace cvqkd
