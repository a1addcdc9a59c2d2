#include "cvqkd/commands.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cvqkd/beam.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/io.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/optimizer.hpp"
#include "cvqkd/parallel.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/scenario.hpp"

namespace cvqkd {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum class Mode { Fixed, Optimize, Either };

Scenario load(const CommandOptions& o) {
  if (!o.config) throw ConfigError("--config is required");
  return load_scenario(resolve_config_path(*o.config), ScenarioOverrides{o.seed, o.n});
}

std::string config_hash(const Scenario& s) { return fmt::format("fnv1a64:{:016x}", fnv1a64(s.canonical_json)); }

std::vector<std::pair<std::string, std::string>> base_metadata(std::string_view command, const Scenario& s) {
  return {{"command", std::string(command)},
          {"config_hash", config_hash(s)},
          {"seed", std::to_string(s.seed)},
          {"generator", CounterRng::kName},
          {"turbulence_table", s.table.version},
          {"mc_samples", std::to_string(s.mc_samples)},
          {"sifting", format_number(s.sifting)},
          {"version", kVersion}};
}

std::optional<std::filesystem::path> output_path(const CommandOptions& o, const Scenario* s) {
  if (o.out) return o.out;
  if (s && s->output_path) return s->output_path;
  return std::nullopt;
}

void emit(CommandOutput& out, const std::optional<std::filesystem::path>& path, std::string content) {
  if (path) {
    out.files.push_back({*path, std::move(content)});
  } else {
    out.stdout_text += content;
  }
}

std::string cell(bool b) { return b ? "1" : "0"; }
std::string cell(double v) { return format_number(v); }
std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }
std::string db(double v) { return v > 0.0 ? format_number(linear_to_db(v)) : std::string("-inf"); }

// Fading statistics of one scenario point; beam results are shared between points
// whose beam description is identical.
class FadingCache {
 public:
  FadingCache(std::uint64_t seed, std::size_t samples, const TurbulenceTable& table, unsigned jobs)
      : seed_(seed), samples_(samples), table_(table), jobs_(jobs) {}

  FadingStats get(const FadingSource& f) {
    switch (f.kind) {
      case FadingKind::None:
        return FadingStats::fixed(1.0);
      case FadingKind::Stats:
        return f.stats;
      case FadingKind::Samples: {
        const std::string key = "samples:" + f.samples_path.string();
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const auto eta = read_eta_csv(f.samples_path);
        return cache_[key] = fading_stats(eta);
      }
      case FadingKind::Beam: {
        const std::string key = "beam:" + f.beam.to_json();
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        return cache_[key] = simulate(f.beam, samples_, seed_, table_, jobs_).stats;
      }
    }
    throw InternalError("unknown fading kind");
  }

 private:
  std::uint64_t seed_;
  std::size_t samples_;
  const TurbulenceTable& table_;
  unsigned jobs_;
  std::map<std::string, FadingStats> cache_;
};

struct Evaluation {
  ProtocolParams protocol;
  KeyRateResult result;
  bool no_positive_rate = false;
  bool optimized = false;
  std::vector<TracePoint> trace;
};

Evaluation evaluate(const ProtocolEntry& entry, const CompositeChannel& channel,
                    const std::optional<FiniteSizeParams>& finite, bool trace) {
  Evaluation e;
  if (entry.optimize) {
    OptimizationSpec spec = entry.spec;
    spec.trace = trace;
    OptimizationResult r = optimize(spec, entry.params, channel, finite, 1);
    e.protocol = r.protocol;
    e.result = r.result;
    e.no_positive_rate = r.no_positive_rate;
    e.optimized = true;
    e.trace = std::move(r.trace);
  } else {
    e.protocol = entry.params;
    e.result = key_rate(entry.params, channel, finite);
    e.no_positive_rate = !(e.result.rate_asymptotic > 0.0);
  }
  return e;
}

CommandOutput run_table(std::string_view command, const CommandOptions& o, Mode mode) {
  const Scenario s = load(o);
  if (s.protocols.empty()) throw ConfigError("scenario defines no protocols");
  for (const auto& p : s.protocols) {
    if (mode == Mode::Fixed && p.optimize)
      throw ConfigError(fmt::format("protocol '{}' is in mode 'optimize'; keyrate needs mode 'fixed'", p.label));
    if (mode == Mode::Optimize && !p.optimize)
      throw ConfigError(fmt::format("protocol '{}' is in mode 'fixed'; optimize needs mode 'optimize'", p.label));
  }
  if (command == "sweep" && s.sweep.empty()) throw ConfigError("sweep needs a 'sweep' section");
  const auto out_path = output_path(o, &s);
  if (o.trace && !out_path) throw ConfigError("--trace needs an output file (--out or output.path)");

  const std::vector<SweepPoint> points = expand_sweep(s);
  FadingCache cache(s.seed, s.mc_samples, s.table, o.jobs);
  std::vector<CompositeChannel> channels;
  std::vector<FadingStats> fading;
  for (const auto& p : points) {
    fading.push_back(cache.get(p.scenario.channel.fading));
    channels.push_back(p.scenario.channel.with_fading(fading.back()));
  }

  const std::size_t np = s.protocols.size();
  std::vector<Evaluation> results(points.size() * np);
  parallel_for(results.size(), o.jobs, [&](std::size_t k) {
    const SweepPoint& point = points[k / np];
    results[k] = evaluate(point.scenario.protocols[k % np], channels[k / np], point.scenario.finite, o.trace);
  });

  std::vector<std::string> header;
  for (const auto& a : s.sweep) header.push_back(a.parameter);
  for (const char* h : {"protocol", "family", "mode", "reconciliation", "beta", "vs", "vs_db", "vm", "van",
                        "eta_comb_db", "eps_plus", "mean_eta", "mean_eta_db", "mean_sqrt_eta", "var_sqrt", "i_ab",
                        "chi", "r_asym", "n", "delta", "r_finite", "no_positive_rate", "dr_warning"})
    header.emplace_back(h);
  CsvTable table(header);

  std::vector<std::string> trace_header;
  for (const auto& a : s.sweep) trace_header.push_back(a.parameter);
  for (const char* h : {"protocol", "stage", "vs", "vm", "r_asym"}) trace_header.emplace_back(h);
  CsvTable trace(trace_header);

  for (std::size_t k = 0; k < results.size(); ++k) {
    const SweepPoint& point = points[k / np];
    const ProtocolEntry& entry = point.scenario.protocols[k % np];
    const Evaluation& e = results[k];
    const CompositeChannel& ch = channels[k / np];
    const double sift = point.scenario.sifting;
    std::vector<std::string> row;
    for (double c : point.coordinates) row.push_back(cell(c));
    std::optional<double> r_finite;
    if (e.result.rate_finite) r_finite = sift * *e.result.rate_finite;
    for (auto&& c : {entry.label, std::string(e.protocol.both_quadratures ? "coherent" : "squeezed"),
                     std::string(e.optimized ? "optimize" : "fixed"),
                     std::string(e.protocol.reconciliation == Reconciliation::Reverse ? "reverse" : "direct"),
                     cell(e.protocol.beta), cell(e.protocol.vs), db(e.protocol.vs), cell(e.protocol.vm),
                     cell(e.protocol.van), db(ch.eta_comb()), cell(ch.eps_plus()), cell(ch.fading.mean_eta),
                     db(ch.fading.mean_eta), cell(ch.fading.mean_sqrt_eta), cell(ch.fading.var_sqrt),
                     cell(e.result.i_ab), cell(e.result.chi), cell(sift * e.result.rate_asymptotic),
                     cell(e.result.n_block), cell(e.result.penalty), cell(r_finite), cell(e.no_positive_rate),
                     cell(e.result.dr_warning)})
      row.push_back(c);
    table.add_row(std::move(row));
    for (const auto& t : e.trace) {
      std::vector<std::string> tr;
      for (double c : point.coordinates) tr.push_back(cell(c));
      for (auto&& c : {entry.label, t.stage, cell(t.vs), cell(t.vm), cell(t.rate)}) tr.push_back(c);
      trace.add_row(std::move(tr));
    }
  }

  const std::string meta = metadata_line(base_metadata(command, s));
  CommandOutput out;
  emit(out, out_path, table.render({meta}));
  if (o.trace) {
    std::filesystem::path tp = *out_path;
    tp += ".trace.csv";
    out.files.push_back({tp, trace.render({meta})});
  }
  return out;
}

}  // namespace

CommandOutput run_simulate(const CommandOptions& o) {
  const Scenario s = load(o);
  if (s.channel.fading.kind != FadingKind::Beam) throw ConfigError("simulate needs channel.fading of type 'beam'");
  if (!s.sweep.empty()) throw ConfigError("simulate does not take a 'sweep' section");
  const SimulationResult sim = simulate(s.channel.fading.beam, s.mc_samples, s.seed, s.table, o.jobs);

  auto fields = base_metadata("simulate", s);
  fields.emplace_back("n", std::to_string(sim.eta.size()));
  CsvTable table({"eta"});
  for (double v : sim.eta) table.add_row({format_number(v)});

  CommandOutput out;
  const auto path = output_path(o, &s);
  emit(out, path, table.render({metadata_line(fields)}));
  if (path) {
    json side = json::parse(sim.metadata_json);
    side["config_hash"] = config_hash(s);
    side["turbulence_table"] = json::parse(s.table.to_json());
    side["stats"] = json::parse(sim.stats.to_json());
    side["version"] = kVersion;
    std::filesystem::path sp = *path;
    sp += ".json";
    out.files.push_back({sp, side.dump(2) + "\n"});
  }
  return out;
}

CommandOutput run_stats(const CommandOptions& o) {
  if (!o.input) throw ConfigError("stats needs a sample file");
  const std::string text = read_file(*o.input);
  const std::vector<double> eta = parse_eta_csv(text, o.input->string());
  const FadingStats st = fading_stats(eta);
  json j = json::parse(st.to_json());
  j["n"] = eta.size();
  j["mean_eta_db"] = st.mean_eta > 0.0 ? json(linear_to_db(st.mean_eta)) : json(nullptr);
  j["source_hash"] = fmt::format("fnv1a64:{:016x}", fnv1a64(text));
  if (o.bins > 0) {
    const Histogram h = fading_histogram(eta, o.bins);
    j["histogram"] = json{{"bin_width", h.bin_width()}, {"counts", h.counts}};
  }
  CommandOutput out;
  emit(out, o.out, j.dump(2) + "\n");
  return out;
}

CommandOutput run_keyrate(const CommandOptions& o) { return run_table("keyrate", o, Mode::Fixed); }
CommandOutput run_optimize(const CommandOptions& o) { return run_table("optimize", o, Mode::Optimize); }
CommandOutput run_sweep(const CommandOptions& o) { return run_table("sweep", o, Mode::Either); }

CommandOutput run_daily(const CommandOptions& o) {
  const Scenario s = load(o);
  if (s.channel.fading.kind != FadingKind::Beam) throw ConfigError("daily needs channel.fading of type 'beam'");
  if (!s.sweep.empty()) throw ConfigError("daily does not take a 'sweep' section");
  if (s.protocols.empty()) throw ConfigError("scenario defines no protocols");
  std::filesystem::path series_path;
  if (o.input) {
    series_path = *o.input;
  } else if (s.daily.series) {
    series_path = *s.daily.series;
  } else {
    throw ConfigError("daily needs a C_n^2 series (argument or daily.series)");
  }
  const std::vector<Cn2Row> series = read_cn2_series(series_path);

  FiniteSizeParams base_finite = s.finite.value_or(FiniteSizeParams{});
  std::vector<double> blocks = s.daily.block_sizes;
  if (blocks.empty() && s.finite) blocks.push_back(s.finite->n);
  for (double n : blocks) {
    FiniteSizeParams f = base_finite;
    f.n = n;
    try {
      f.validate();
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("daily.block_sizes: {}", e.what()));
    }
  }

  std::vector<FadingStats> stats;
  std::vector<double> rytovs;
  for (const auto& row : series) {
    BeamScenario beam = s.channel.fading.beam;
    beam.cn2 = row.cn2;
    beam.rytov.reset();
    rytovs.push_back(beam.rytov_variance());
    stats.push_back(simulate(beam, s.mc_samples, s.seed, s.table, o.jobs).stats);
  }

  const std::size_t np = s.protocols.size();
  struct Cell {
    Evaluation eval;
    std::vector<double> finite_rates;
  };
  std::vector<Cell> cells(series.size() * np);
  parallel_for(cells.size(), o.jobs, [&](std::size_t k) {
    const CompositeChannel ch = s.channel.with_fading(stats[k / np]);
    Cell c;
    c.eval = evaluate(s.protocols[k % np], ch, std::nullopt, false);
    for (double n : blocks) {
      FiniteSizeParams f = base_finite;
      f.n = n;
      c.finite_rates.push_back(s.sifting * *key_rate(c.eval.protocol, ch, f).rate_finite);
    }
    cells[k] = std::move(c);
  });

  std::vector<std::string> header{"hour", "cn2", "rytov", "mean_eta", "mean_eta_db", "mean_sqrt_eta", "var_sqrt"};
  for (const auto& p : s.protocols) {
    header.push_back(p.label + "_vs");
    header.push_back(p.label + "_vm");
    header.push_back(p.label + "_r_asym");
    for (double n : blocks) header.push_back(fmt::format("{}_r_n{:g}", p.label, n));
  }
  CsvTable table(header);
  for (std::size_t r = 0; r < series.size(); ++r) {
    std::vector<std::string> row{series[r].label,          cell(series[r].cn2),         cell(rytovs[r]),
                                 cell(stats[r].mean_eta),  db(stats[r].mean_eta),       cell(stats[r].mean_sqrt_eta),
                                 cell(stats[r].var_sqrt)};
    for (std::size_t p = 0; p < np; ++p) {
      const Cell& c = cells[r * np + p];
      row.push_back(cell(c.eval.protocol.vs));
      row.push_back(cell(c.eval.protocol.vm));
      row.push_back(cell(s.sifting * c.eval.result.rate_asymptotic));
      for (double v : c.finite_rates) row.push_back(cell(v));
    }
    table.add_row(std::move(row));
  }

  auto fields = base_metadata("daily", s);
  fields.emplace_back("series_hash", fmt::format("fnv1a64:{:016x}", fnv1a64(read_file(series_path))));
  CommandOutput out;
  emit(out, output_path(o, &s), table.render({metadata_line(fields)}));
  return out;
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return kExitConfig;
  if (dynamic_cast<const IoError*>(&error)) return kExitIo;
  return kExitNumerical;
}

int run_command(std::string_view command, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    CommandOutput result;
    if (command == "simulate") {
      result = run_simulate(options);
    } else if (command == "stats") {
      result = run_stats(options);
    } else if (command == "keyrate") {
      result = run_keyrate(options);
    } else if (command == "optimize") {
      result = run_optimize(options);
    } else if (command == "sweep") {
      result = run_sweep(options);
    } else if (command == "daily") {
      result = run_daily(options);
    } else {
      throw ConfigError(fmt::format("unknown command '{}'", command));
    }
    for (const auto& f : result.files) write_file_atomic(f.path, f.content);
    out << result.stdout_text;
    out.flush();
    return kExitOk;
  } catch (const std::exception& e) {
    err << "cvqkd " << command << ": error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace cvqkd
