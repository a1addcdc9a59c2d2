#include "cvqkd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cvqkd/errors.hpp"
#include "cvqkd/io.hpp"
#include "embedded.hpp"

namespace cvqkd {
namespace {

using nlohmann::json;

// ---- schema subset validator ----------------------------------------------------

struct SchemaError {
  std::string path;
  std::string keyword;
  std::string message;
};

std::string describe(const json& v) {
  std::string s = v.dump();
  return s.size() > 60 ? s.substr(0, 57) + "..." : s;
}

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    if (!v.is_number_float()) return false;
    const double d = v.get<double>();
    return std::isfinite(d) && std::floor(d) == d;
  }
  return false;
}

void check(const json& v, const json& schema, const std::string& path, std::vector<SchemaError>& errors) {
  const std::string where = path.empty() ? "(root)" : path;
  auto fail = [&](const char* keyword, std::string message) {
    errors.push_back({where, keyword, std::move(message)});
  };

  if (schema.contains("oneOf")) {
    std::vector<std::vector<SchemaError>> branch_errors;
    std::size_t matches = 0;
    for (const auto& branch : schema["oneOf"]) {
      std::vector<SchemaError> e;
      check(v, branch, path, e);
      if (e.empty()) ++matches;
      branch_errors.push_back(std::move(e));
    }
    if (matches == 1) return;
    if (matches > 1) {
      fail("oneOf", "matches more than one allowed form");
      return;
    }
    // Report the first branch that was not ruled out by its discriminating const or type.
    for (const auto& e : branch_errors) {
      const bool ruled_out = std::any_of(e.begin(), e.end(), [&](const SchemaError& x) {
        return x.keyword == "const" || (x.keyword == "type" && x.path == where);
      });
      if (!ruled_out) {
        errors.insert(errors.end(), e.begin(), e.end());
        return;
      }
    }
    fail("oneOf", fmt::format("{} does not match any allowed form", describe(v)));
    return;
  }

  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = has_type(v, t.get<std::string>());
    } else {
      for (const auto& alt : t) ok = ok || has_type(v, alt.get<std::string>());
    }
    if (!ok) {
      fail("type", fmt::format("expected {}, got {}", t.is_string() ? t.get<std::string>() : t.dump(), describe(v)));
      return;
    }
  }
  if (schema.contains("const") && v != schema["const"]) {
    fail("const", fmt::format("must be {}", schema["const"].dump()));
    return;
  }
  if (schema.contains("enum")) {
    const auto& options = schema["enum"];
    if (std::find(options.begin(), options.end(), v) == options.end())
      fail("enum", fmt::format("{} is not one of {}", describe(v), options.dump()));
  }
  if (v.is_number()) {
    const double d = v.get<double>();
    if (schema.contains("minimum") && d < schema["minimum"].get<double>())
      fail("minimum", fmt::format("{} is below the minimum {}", describe(v), schema["minimum"].dump()));
    if (schema.contains("maximum") && d > schema["maximum"].get<double>())
      fail("maximum", fmt::format("{} exceeds the maximum {}", describe(v), schema["maximum"].dump()));
    if (schema.contains("exclusiveMinimum") && !(d > schema["exclusiveMinimum"].get<double>()))
      fail("exclusiveMinimum", fmt::format("{} must be > {}", describe(v), schema["exclusiveMinimum"].dump()));
    if (schema.contains("exclusiveMaximum") && !(d < schema["exclusiveMaximum"].get<double>()))
      fail("exclusiveMaximum", fmt::format("{} must be < {}", describe(v), schema["exclusiveMaximum"].dump()));
  }
  if (v.is_string() && schema.contains("minLength") &&
      v.get<std::string>().size() < schema["minLength"].get<std::size_t>())
    fail("minLength", "string is too short");
  if (v.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!v.contains(key.get<std::string>())) fail("required", fmt::format("missing required key '{}'", key.get<std::string>()));
      }
    }
    const json empty = json::object();
    const json& props = schema.contains("properties") ? schema["properties"] : empty;
    const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
    for (const auto& [key, value] : v.items()) {
      const std::string child = path.empty() ? key : path + "." + key;
      if (props.contains(key)) {
        check(value, props[key], child, errors);
      } else if (closed) {
        errors.push_back({child, "additionalProperties", "unknown key"});
      }
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      fail("minItems", fmt::format("needs at least {} item(s)", schema["minItems"].get<std::size_t>()));
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], schema["items"], fmt::format("{}[{}]", where, i), errors);
    }
  }
}

const json& schema_json() {
  static const json schema = json::parse(detail::embedded_scenario_schema());
  return schema;
}

std::vector<SchemaError> validate_document(const json& doc) {
  std::vector<SchemaError> errors;
  check(doc, schema_json(), "", errors);
  return errors;
}

// ---- document -> Scenario -------------------------------------------------------

[[noreturn]] void config_error(const std::string& context, const std::string& message) {
  throw ConfigError(context.empty() ? message : fmt::format("{}: {}", context, message));
}

template <class F>
void as_config_error(const std::string& context, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    config_error(context, e.what());
  }
}

std::optional<double> number(const json& obj, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  return obj[key].get<double>();
}

double exclusive(const json& obj, const char* linear, const char* db, double fallback, const std::string& ctx) {
  const auto a = number(obj, linear);
  const auto b = number(obj, db);
  if (a && b) config_error(ctx, fmt::format("'{}' and '{}' are mutually exclusive", linear, db));
  if (a) return *a;
  if (b) return db_to_linear(*b);
  return fallback;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() || base.empty()) ? path : base / path;
}

ProtocolEntry parse_protocol(const json& j) {
  ProtocolEntry e;
  e.label = j["label"].get<std::string>();
  const std::string ctx = fmt::format("protocol '{}'", e.label);
  const bool coherent = j["family"] == "coherent";
  e.optimize = j.value("mode", "optimize") == "optimize";

  if (coherent) {
    for (const char* key : {"vs", "vs_db", "van", "van_db", "vs_cap_db", "prep_noise_trust"}) {
      if (j.contains(key)) config_error(ctx, fmt::format("'{}' does not apply to the coherent family", key));
    }
  }
  ProtocolParams& p = e.params;
  p.both_quadratures = coherent;
  p.beta = j.value("beta", 1.0);
  p.reconciliation = j.value("reconciliation", "reverse") == "direct" ? Reconciliation::Direct : Reconciliation::Reverse;
  p.prep_noise_trust = j.value("prep_noise_trust", "trusted") == "untrusted" ? NoiseTrust::Untrusted : NoiseTrust::Trusted;
  p.van = exclusive(j, "van", "van_db", 0.0, ctx);
  const bool vs_given = j.contains("vs") || j.contains("vs_db");
  p.vs = exclusive(j, "vs", "vs_db", 1.0, ctx);
  if (p.vs > 1.0) config_error(ctx, fmt::format("V_s = {} exceeds 1", p.vs));

  if (e.optimize) {
    if (j.contains("vm")) config_error(ctx, "'vm' is optimized; use mode 'fixed' to set it");
  } else {
    if (!j.contains("vm")) config_error(ctx, "mode 'fixed' needs 'vm'");
    if (!coherent && !vs_given) config_error(ctx, "mode 'fixed' needs 'vs' or 'vs_db'");
    for (const char* key : {"vs_cap_db", "vm_min", "vm_max", "grid", "tolerance"}) {
      if (j.contains(key)) config_error(ctx, fmt::format("'{}' only applies in mode 'optimize'", key));
    }
    p.vm = j["vm"].get<double>();
  }
  as_config_error(ctx, [&] { p.validate(); });

  OptimizationSpec& s = e.spec;
  s.family = coherent ? ProtocolFamily::Coherent : ProtocolFamily::Squeezed;
  s.vs_cap_db = coherent ? 0.0 : j.value("vs_cap_db", -10.0);
  if (!coherent && vs_given) s.fix_vs = p.vs;
  s.vm_min = j.value("vm_min", s.vm_min);
  s.vm_max = j.value("vm_max", s.vm_max);
  if (j.contains("grid")) {
    s.vs_points = j["grid"].value("vs_points", s.vs_points);
    s.vm_points = j["grid"].value("vm_points", s.vm_points);
  }
  s.tolerance = j.value("tolerance", s.tolerance);
  if (e.optimize) as_config_error(ctx, [&] { s.validate(); });
  return e;
}

FadingSource parse_fading(const json& j, const std::filesystem::path& base) {
  FadingSource f;
  const std::string ctx = "channel.fading";
  const std::string type = j["type"].get<std::string>();
  if (type == "none") return f;
  if (type == "stats") {
    f.kind = FadingKind::Stats;
    if (j.contains("mean_eta") == j.contains("mean_eta_db")) config_error(ctx, "needs exactly one of 'mean_eta', 'mean_eta_db'");
    const double mean = exclusive(j, "mean_eta", "mean_eta_db", 1.0, ctx);
    if (mean > 1.0) config_error(ctx, "mean transmittance exceeds 1");
    if (j.contains("var_sqrt") && j.contains("mean_sqrt_eta")) config_error(ctx, "'var_sqrt' and 'mean_sqrt_eta' are mutually exclusive");
    as_config_error(ctx, [&] {
      f.stats = j.contains("mean_sqrt_eta") ? FadingStats::from_means(mean, j["mean_sqrt_eta"].get<double>())
                                            : FadingStats::from_variance(mean, j.value("var_sqrt", 0.0));
      f.stats.validate();
    });
    return f;
  }
  if (type == "samples") {
    f.kind = FadingKind::Samples;
    f.samples_path = resolve(base, j["path"].get<std::string>());
    return f;
  }
  f.kind = FadingKind::Beam;
  BeamScenario& b = f.beam;
  b.wavelength = j["wavelength"].get<double>();
  b.w0 = j["w0"].get<double>();
  b.aperture = j["aperture"].get<double>();
  b.distance = j.value("distance", 2200.0);
  if (j.contains("cn2")) b.cn2 = j["cn2"].get<double>();
  if (j.contains("rytov")) b.rytov = j["rytov"].get<double>();
  b.tracking = j.value("tracking", false);
  if (j.contains("focus") && j.contains("focal_length")) config_error(ctx, "'focus' and 'focal_length' are mutually exclusive");
  if (j.contains("focal_length")) b.focal_length = j["focal_length"].get<double>();
  if (j.value("focus", "receiver") == "collimated") b.focal_length = std::numeric_limits<double>::infinity();
  as_config_error(ctx, [&] { b.validate(); });
  return f;
}

ChannelConfig parse_channel(const json& j, const std::filesystem::path& base) {
  ChannelConfig c;
  const std::string ctx = "channel";
  if (j.contains("eta_comb_db")) {
    for (const char* key : {"eta1", "eta1_db", "eta2", "eta2_db"}) {
      if (j.contains(key)) config_error(ctx, fmt::format("'eta_comb_db' and '{}' are mutually exclusive", key));
    }
    c.eta1 = db_to_linear(j["eta_comb_db"].get<double>());
  } else {
    c.eta1 = exclusive(j, "eta1", "eta1_db", 1.0, ctx);
    c.eta2 = exclusive(j, "eta2", "eta2_db", 1.0, ctx);
  }
  if (j.contains("eps_plus")) {
    for (const char* key : {"eps1", "eps2", "eps_atm"}) {
      if (j.contains(key)) config_error(ctx, fmt::format("'eps_plus' and '{}' are mutually exclusive", key));
    }
    c.eps2 = j["eps_plus"].get<double>();
  } else {
    c.eps1 = j.value("eps1", 0.0);
    c.eps2 = j.value("eps2", 0.0);
    c.eps_atm = j.value("eps_atm", 0.0);
  }
  if (j.contains("fading")) c.fading = parse_fading(j["fading"], base);
  as_config_error(ctx, [&] { c.with_fading(FadingStats{}).validate(); });
  return c;
}

SweepAxis parse_axis(const json& j) {
  SweepAxis a;
  a.parameter = j["parameter"].get<std::string>();
  const std::string ctx = fmt::format("sweep '{}'", a.parameter);
  if (j.contains("values")) {
    for (const auto& v : j["values"]) a.values.push_back(v.get<double>());
    return a;
  }
  const double from = j["from"].get<double>();
  const double to = j["to"].get<double>();
  const auto steps = j["steps"].get<std::size_t>();
  const bool log = j.value("scale", "linear") == "log";
  if (log && !(from > 0.0 && to > 0.0)) config_error(ctx, "log scale needs positive 'from' and 'to'");
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    a.values.push_back(log ? std::pow(10.0, std::log10(from) + t * (std::log10(to) - std::log10(from)))
                           : from + t * (to - from));
  }
  a.values.back() = steps == 1 ? from : to;
  return a;
}

Scenario build(const json& doc, const std::filesystem::path& base) {
  const auto errors = validate_document(doc);
  if (!errors.empty()) {
    std::string msg = "scenario does not match the schema:";
    for (const auto& e : errors) msg += fmt::format("\n  {}: {}", e.path, e.message);
    throw ConfigError(msg);
  }

  Scenario s;
  s.base_dir = base;
  s.name = doc.value("name", "");
  if (doc.contains("seed")) {
    const json& v = doc["seed"];
    s.seed = v.is_number_unsigned() ? v.get<std::uint64_t>() : static_cast<std::uint64_t>(v.get<double>());
  }
  if (doc.contains("protocols")) {
    for (const auto& p : doc["protocols"]) {
      ProtocolEntry e = parse_protocol(p);
      for (const auto& other : s.protocols) {
        if (other.label == e.label) config_error("protocols", fmt::format("duplicate label '{}'", e.label));
      }
      s.protocols.push_back(std::move(e));
    }
  }
  s.channel = parse_channel(doc["channel"], base);
  if (doc.contains("finite_size")) {
    const auto& f = doc["finite_size"];
    FiniteSizeParams fp;
    fp.n = f["n"].get<double>();
    fp.eps_bar = f.value("eps_bar", fp.eps_bar);
    fp.key_fraction = f.value("key_fraction", fp.key_fraction);
    as_config_error("finite_size", [&] { fp.validate(); });
    s.finite = fp;
  }
  s.sifting = doc.value("sifting", 1.0);
  if (doc.contains("monte_carlo")) s.mc_samples = doc["monte_carlo"].value("samples", s.mc_samples);
  if (doc.contains("turbulence_table"))
    s.table = TurbulenceTable::from_json(read_file(resolve(base, doc["turbulence_table"].get<std::string>())));
  if (doc.contains("sweep")) {
    for (const auto& a : doc["sweep"]) s.sweep.push_back(parse_axis(a));
  }
  if (doc.contains("output") && doc["output"].contains("path")) s.output_path = doc["output"]["path"].get<std::string>();
  if (doc.contains("daily")) {
    const auto& d = doc["daily"];
    if (d.contains("series")) s.daily.series = resolve(base, d["series"].get<std::string>());
    if (d.contains("block_sizes")) {
      for (const auto& n : d["block_sizes"]) s.daily.block_sizes.push_back(n.get<double>());
    }
  }
  s.canonical_json = doc.dump();
  return s;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("scenario is not valid JSON: {}", e.what()));
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void assign(json& node, const std::vector<std::string>& keys, std::size_t k, double value, const std::string& parameter) {
  const std::string& key = keys[k];
  if (key.empty()) config_error("sweep", fmt::format("malformed parameter path '{}'", parameter));
  if (key == "*") {
    if (!node.is_array()) config_error("sweep", fmt::format("'*' in '{}' does not refer to an array", parameter));
    if (k + 1 == keys.size()) config_error("sweep", fmt::format("parameter '{}' cannot end in '*'", parameter));
    for (auto& item : node) assign(item, keys, k + 1, value, parameter);
    return;
  }
  if (!node.is_object()) config_error("sweep", fmt::format("parameter path '{}' does not exist", parameter));
  if (k + 1 == keys.size()) {
    if (node.contains(key) && !node[key].is_number())
      config_error("sweep", fmt::format("parameter '{}' is not numeric", parameter));
    node[key] = value;
    return;
  }
  if (!node.contains(key)) config_error("sweep", fmt::format("parameter path '{}' does not exist", parameter));
  assign(node[key], keys, k + 1, value, parameter);
}

}  // namespace

CompositeChannel ChannelConfig::with_fading(const FadingStats& stats) const {
  CompositeChannel c;
  c.eta1 = eta1;
  c.eta2 = eta2;
  c.eps1 = eps1;
  c.eps2 = eps2;
  c.eps_atm = eps_atm;
  c.fading = stats;
  return c;
}

std::string_view scenario_schema() { return detail::embedded_scenario_schema(); }

std::vector<std::string> schema_errors(std::string_view document) {
  std::vector<std::string> out;
  for (const auto& e : validate_document(parse_json(document))) out.push_back(fmt::format("{}: {}", e.path, e.message));
  return out;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir, const ScenarioOverrides& overrides) {
  json doc = parse_json(text);
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.samples) doc["monte_carlo"]["samples"] = *overrides.samples;
  Scenario s = build(doc, base_dir);
  // Dry run of every sweep axis so that bad parameter paths fail before any work is done.
  for (const auto& axis : s.sweep) {
    json copy = doc;
    copy.erase("sweep");
    assign(copy, split(axis.parameter, '.'), 0, axis.values.front(), axis.parameter);
    build(copy, base_dir);
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides) {
  const std::string text = read_file(path);
  return parse_scenario(text, path.parent_path(), overrides);
}

std::filesystem::path resolve_config_path(const std::filesystem::path& path) {
  if (path.is_absolute() || std::filesystem::exists(path)) return path;
  if (const char* dir = std::getenv("CVQKD_CONFIG_DIR"); dir != nullptr && *dir != '\0') {
    const auto candidate = std::filesystem::path(dir) / path;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return path;
}

std::vector<SweepPoint> expand_sweep(const Scenario& scenario) {
  json base = json::parse(scenario.canonical_json);
  base.erase("sweep");
  if (scenario.sweep.empty()) return {SweepPoint{{}, build(base, scenario.base_dir)}};

  std::size_t total = 1;
  for (const auto& a : scenario.sweep) total *= a.values.size();
  std::vector<SweepPoint> points;
  points.reserve(total);
  std::vector<std::size_t> index(scenario.sweep.size(), 0);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rem = p;
    for (std::size_t a = scenario.sweep.size(); a-- > 0;) {
      index[a] = rem % scenario.sweep[a].values.size();
      rem /= scenario.sweep[a].values.size();
    }
    json doc = base;
    SweepPoint point;
    for (std::size_t a = 0; a < scenario.sweep.size(); ++a) {
      const double v = scenario.sweep[a].values[index[a]];
      point.coordinates.push_back(v);
      assign(doc, split(scenario.sweep[a].parameter, '.'), 0, v, scenario.sweep[a].parameter);
    }
    point.scenario = build(doc, scenario.base_dir);
    points.push_back(std::move(point));
  }
  return points;
}

}  // namespace cvqkd
