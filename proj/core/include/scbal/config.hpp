#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "scbal/harness.hpp"

namespace scbal {

/// Replication index reserved for the stream that plants the treated unit's
/// factor; experiment replications never reach it.
inline constexpr std::uint64_t kPlantStream = ~std::uint64_t{0};

/// A fully defaulted run configuration.
struct RunConfig {
  ExperimentSpec spec;
  /// Set when the config asked for a planted treated unit (mu.plant_concentration).
  std::optional<SimplexWeights> planted_beta;
};

/// Parses a YAML config with sections `model`, `experiment` and `solver`.
/// Every key is optional; unknown keys are rejected. `seed_override` replaces
/// experiment.seed before anything seed-dependent is derived.
RunConfig parse_config_text(std::string_view text,
                            std::optional<std::uint64_t> seed_override = std::nullopt);

/// Throws IoError when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

/// Human-readable list of every key with its default.
std::string config_reference();

}  // namespace scbal
