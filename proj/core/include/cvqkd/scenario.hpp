#pragma once

// Scenario files: JSON documents validated against core/schema/scenario.schema.json
// and turned into protocol, channel and sweep descriptions.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvqkd/beam.hpp"
#include "cvqkd/channel.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/optimizer.hpp"
#include "cvqkd/source.hpp"

namespace cvqkd {

struct ProtocolEntry {
  std::string label;
  bool optimize = true;
  ProtocolParams params;  // V_s, V_m used in fixed mode
  OptimizationSpec spec;  // used in optimize mode
};

enum class FadingKind { None, Stats, Samples, Beam };

struct FadingSource {
  FadingKind kind = FadingKind::None;
  FadingStats stats;                    // kind == Stats
  std::filesystem::path samples_path;   // kind == Samples, resolved against the scenario directory
  BeamScenario beam;                    // kind == Beam; distance defaults to 2200 m
};

struct ChannelConfig {
  double eta1 = 1.0;
  double eta2 = 1.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps_atm = 0.0;
  FadingSource fading;

  CompositeChannel with_fading(const FadingStats& stats) const;
};

struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

struct DailyConfig {
  std::optional<std::filesystem::path> series;
  std::vector<double> block_sizes;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<ProtocolEntry> protocols;
  ChannelConfig channel;
  std::optional<FiniteSizeParams> finite;
  double sifting = 1.0;
  std::size_t mc_samples = 100000;
  TurbulenceTable table = TurbulenceTable::published();
  std::vector<SweepAxis> sweep;
  std::optional<std::filesystem::path> output_path;
  DailyConfig daily;
  std::filesystem::path base_dir;
  /// Canonical (key-sorted, whitespace-free) JSON of the effective document.
  std::string canonical_json;
};

struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
};

/// The published validation document.
std::string_view scenario_schema();

/// Schema violations of `document`, one message per violation (empty if valid).
/// Throws ConfigError if `document` is not JSON.
std::vector<std::string> schema_errors(std::string_view document);

/// Parses and validates; every problem with the document is reported as ConfigError.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {},
                        const ScenarioOverrides& overrides = {});

/// Reads `path` (IoError if unreadable) and parses it relative to its directory.
Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides = {});

/// Resolves a --config argument: as given if it exists, else under $CVQKD_CONFIG_DIR.
std::filesystem::path resolve_config_path(const std::filesystem::path& path);

struct SweepPoint {
  std::vector<double> coordinates;  // one per axis
  Scenario scenario;
};

/// Cartesian product of the sweep axes, first axis outermost. Each point is the base
/// document with the swept values written into it and re-validated. A parameter is a
/// dotted path such as "channel.fading.distance"; "protocols.*.vs_cap_db" sets the key
/// in every protocol entry.
std::vector<SweepPoint> expand_sweep(const Scenario& scenario);

}  // namespace cvqkd
