#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "bsodiag/eval.hpp"
#include "bsodiag/fcm.hpp"
#include "bsodiag/mfd.hpp"
#include "bsodiag/model.hpp"
#include "bsodiag/orca.hpp"

namespace bsodiag {

/// Every tunable of the pipeline. Sources, lowest precedence first: built-in
/// defaults, the TOML config file, command-line flags.
struct PipelineConfig {
  WindowParams windows;
  std::int64_t delta_minutes = 1;
  std::int64_t eta_minutes = 5;
  double spot_q = 1e-4;
  double spot_init_quantile = 0.98;
  std::size_t spot_min_nonzero = 10;
  bool intensity_fallback = false;
  std::optional<std::int64_t> gap_split_slots;
  std::string whitelist_path;  // empty: every proactive change passes
  CatalogMode catalog_mode = CatalogMode::strict;

  double alpha = 0.001;
  SupportMode support_mode = SupportMode::groups;

  std::size_t walk_iterations = 100;
  double damping = 0.85;
  double tol = 1e-12;
  std::size_t k = 3;
  std::size_t max_path_len = 10;

  eval::PcrDenominator pcr_denominator = eval::PcrDenominator::predicted;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  MfdConfig mfd() const;
  OrcaConfig orca() const;
  nlohmann::json to_json() const;
  /// Short stable hash of to_json(), hex.
  std::string hash() const;
};

/// Overlays the keys present in a TOML document onto `config`.
/// Sections: [windows] L T T_prime; [mfd] delta_minutes eta_minutes spot_q
/// spot_init_quantile spot_min_nonzero intensity_fallback gap_split_slots
/// whitelist_path catalog_mode; [fcm] alpha support_mode; [orca]
/// walk_iterations damping tol k max_path_len; [eval] pcr_denominator.
void apply_config_toml(PipelineConfig& config, std::string_view toml_text, std::string_view source_name);
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Config file to read: explicit path, else $BSODIAG_CONFIG, else
/// ./bsodiag.toml if it exists.
std::optional<std::filesystem::path> locate_config(const std::optional<std::string>& explicit_path);

}  // namespace bsodiag
