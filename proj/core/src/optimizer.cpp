#include "cvqkd/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "cvqkd/errors.hpp"
#include "cvqkd/parallel.hpp"

namespace cvqkd {
namespace {

constexpr double kTie = 1e-12;

struct Point {
  double vs;
  double vm;
  double rate;
};

// True if a is preferred over b: higher rate, then larger V_s, then smaller V_m.
bool better(const Point& a, const Point& b) {
  if (a.rate > b.rate + kTie) return true;
  if (b.rate > a.rate + kTie) return false;
  if (a.vs != b.vs) return a.vs > b.vs;
  return a.vm < b.vm;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = hi;
    return g;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

class Objective {
 public:
  Objective(const OptimizationSpec& spec, const ProtocolParams& base, const CompositeChannel& channel)
      : spec_(spec), base_(base), channel_(channel) {}

  ProtocolParams protocol(double vs, double vm) const {
    ProtocolParams p = base_;
    p.vs = vs;
    p.vm = vm;
    p.both_quadratures = spec_.family == ProtocolFamily::Coherent;
    if (p.both_quadratures) p.van = 0.0;
    return p;
  }

  double rate(double vs, double vm) const { return key_rate(protocol(vs, vm), channel_).rate_asymptotic; }

 private:
  const OptimizationSpec& spec_;
  const ProtocolParams& base_;
  const CompositeChannel& channel_;
};

}  // namespace

void OptimizationSpec::validate() const {
  if (!(vs_cap_db <= 0.0) || !std::isfinite(vs_cap_db))
    throw ConfigError(fmt::format("vs_cap_db must be <= 0, got {}", vs_cap_db));
  if (!(vm_min > 0.0) || !(vm_max >= vm_min) || !std::isfinite(vm_max))
    throw ConfigError(fmt::format("V_m range [{}, {}] is empty", vm_min, vm_max));
  if (vs_points < 1 || vm_points < 2) throw ConfigError("optimizer grid needs >= 1 V_s point and >= 2 V_m points");
  if (!(tolerance > 0.0)) throw ConfigError("optimizer tolerance must be > 0");
  if (fix_vs) {
    if (family == ProtocolFamily::Coherent) throw ConfigError("fix_vs only applies to the squeezed family");
    if (!(*fix_vs > 0.0 && *fix_vs <= 1.0)) throw ConfigError(fmt::format("fix_vs must lie in (0, 1], got {}", *fix_vs));
  }
}

OptimizationResult optimize(const OptimizationSpec& spec, const ProtocolParams& protocol,
                            const CompositeChannel& channel, const std::optional<FiniteSizeParams>& finite,
                            unsigned jobs) {
  spec.validate();
  channel.validate();
  if (finite) finite->validate();
  const Objective objective(spec, protocol, channel);

  const double vs_lo = spec.fix_vs ? *spec.fix_vs : db_to_linear(spec.vs_cap_db);
  const double vs_hi = spec.fix_vs ? *spec.fix_vs : 1.0;
  const bool search_vs = spec.family == ProtocolFamily::Squeezed && vs_lo < vs_hi;

  std::vector<double> vs_grid = search_vs ? log_grid(vs_lo, vs_hi, spec.vs_points) : std::vector<double>{vs_hi};
  if (spec.family == ProtocolFamily::Coherent) vs_grid = {1.0};
  std::vector<double> vm_grid{0.0};
  const auto vm_log = log_grid(spec.vm_min, spec.vm_max, spec.vm_points - 1);
  vm_grid.insert(vm_grid.end(), vm_log.begin(), vm_log.end());

  OptimizationResult out;
  std::vector<Point> grid(vs_grid.size() * vm_grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t k) {
    const double vs = vs_grid[k / vm_grid.size()];
    const double vm = vm_grid[k % vm_grid.size()];
    grid[k] = Point{vs, vm, objective.rate(vs, vm)};
  });
  out.evaluations = grid.size();
  Point best = grid.front();
  for (const auto& p : grid) {
    if (better(p, best)) best = p;
    if (spec.trace) out.trace.push_back({"grid", p.vs, p.vm, p.rate});
  }
  const Point best_grid = best;

  // Simplex coordinates: (log10 V_m) or (log10 V_s, log10 V_m).
  const Eigen::Index dim = search_vs ? 2 : 1;
  Eigen::VectorXd lo(dim), hi(dim), step(dim), start(dim);
  const double lvm_lo = std::log10(spec.vm_min);
  const double lvm_hi = std::log10(spec.vm_max);
  const double vm_step = spec.vm_points > 2 ? (lvm_hi - lvm_lo) / static_cast<double>(spec.vm_points - 2) : 0.5;
  const double vm_start = std::log10(std::max(best.vm, spec.vm_min));
  if (search_vs) {
    const double lvs_lo = std::log10(vs_lo);
    lo << lvs_lo, lvm_lo;
    hi << 0.0, lvm_hi;
    step << (spec.vs_points > 1 ? -lvs_lo / static_cast<double>(spec.vs_points - 1) : 0.1), vm_step;
    start << std::log10(best.vs), vm_start;
  } else {
    lo << lvm_lo;
    hi << lvm_hi;
    step << vm_step;
    start << vm_start;
  }
  const double fixed_vs = vs_grid.front();
  auto to_point = [&](const Eigen::VectorXd& u) {
    const Eigen::VectorXd c = u.cwiseMax(lo).cwiseMin(hi);
    const double vs = search_vs ? std::pow(10.0, c[0]) : fixed_vs;
    const double vm = std::pow(10.0, c[dim - 1]);
    return Point{search_vs ? std::min(1.0, std::max(vs_lo, vs)) : vs, vm, 0.0};
  };
  auto evaluate = [&](const Eigen::VectorXd& u) {
    Point p = to_point(u);
    p.rate = objective.rate(p.vs, p.vm);
    ++out.evaluations;
    if (spec.trace) out.trace.push_back({"simplex", p.vs, p.vm, p.rate});
    return p;
  };

  struct Vertex {
    Eigen::VectorXd u;
    Point p;
  };
  std::vector<Vertex> simplex;
  simplex.push_back({start, evaluate(start)});
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd v = start;
    v[i] += (start[i] + step[i] <= hi[i]) ? step[i] : -step[i];
    v = v.cwiseMax(lo).cwiseMin(hi);
    simplex.push_back({v, evaluate(v)});
  }
  auto order = [&] {
    std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return better(a.p, b.p); });
  };
  auto clamp = [&](Eigen::VectorXd v) -> Eigen::VectorXd { return v.cwiseMax(lo).cwiseMin(hi); };

  order();
  std::size_t it = 0;
  for (; it < spec.max_iterations; ++it) {
    const double spread = simplex.front().p.rate - simplex.back().p.rate;
    double diameter = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
      diameter = std::max(diameter, (simplex[i].u - simplex.front().u).cwiseAbs().maxCoeff());
    if (spread < spec.tolerance && diameter < 1e-4) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i].u;
    centroid /= static_cast<double>(dim);
    Vertex& worst = simplex.back();

    const Eigen::VectorXd xr = clamp(centroid + (centroid - worst.u));
    const Point pr = evaluate(xr);
    if (better(pr, simplex.front().p)) {
      const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - worst.u));
      const Point pe = evaluate(xe);
      worst = better(pe, pr) ? Vertex{xe, pe} : Vertex{xr, pr};
    } else if (better(pr, simplex[simplex.size() - 2].p)) {
      worst = {xr, pr};
    } else {
      const bool outside = better(pr, worst.p);
      const Eigen::VectorXd xc = outside ? clamp(centroid + 0.5 * (xr - centroid)) : clamp(centroid + 0.5 * (worst.u - centroid));
      const Point pc = evaluate(xc);
      if (better(pc, outside ? pr : worst.p)) {
        worst = {xc, pc};
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i].u = simplex.front().u + 0.5 * (simplex[i].u - simplex.front().u);
          simplex[i].p = evaluate(simplex[i].u);
        }
      }
    }
    order();
  }
  out.iterations = it;

  best = better(simplex.front().p, best_grid) ? simplex.front().p : best_grid;
  out.vs = best.vs;
  out.vm = best.vm;
  out.protocol = objective.protocol(best.vs, best.vm);
  out.result = key_rate(out.protocol, channel, finite);
  out.no_positive_rate = !(out.result.rate_asymptotic > 0.0);
  return out;
}

}  // namespace cvqkd
