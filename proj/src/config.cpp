#include "bsodiag/config.hpp"

#include <cstdio>
#include <cstdlib>

#include <toml.hpp>

#include "bsodiag/error.hpp"
#include "bsodiag/snapshot_io.hpp"

namespace bsodiag {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  try {
    windows.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  auto positive = [](std::int64_t v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  auto open_unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1)");
  };
  positive(delta_minutes, "delta_minutes");
  positive(eta_minutes, "eta_minutes");
  open_unit(spot_q, "spot_q");
  open_unit(spot_init_quantile, "spot_init_quantile");
  open_unit(alpha, "alpha");
  open_unit(damping, "damping");
  if (walk_iterations < 1) throw ConfigError("walk_iterations must be at least 1");
  if (!(tol >= 0.0)) throw ConfigError("tol must be non-negative");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (max_path_len < 2) throw ConfigError("max_path_len must be at least 2");
  if (gap_split_slots && *gap_split_slots < 0) throw ConfigError("gap_split_slots must be non-negative");
  if ((windows.L + windows.T_prime) % delta_minutes != 0 || (windows.L - windows.T) % delta_minutes != 0) {
    throw ConfigError("delta_minutes must divide L + T' and L - T");
  }
}

MfdConfig PipelineConfig::mfd() const {
  MfdConfig m;
  m.delta_minutes = delta_minutes;
  m.eta_minutes = eta_minutes;
  m.spot = SpotParams{spot_q, spot_init_quantile, spot_min_nonzero};
  m.intensity_fallback = intensity_fallback;
  m.gap_split_slots = gap_split_slots;
  m.whitelist = whitelist_path.empty() ? ChangeWhitelist::allow_all() : load_whitelist(whitelist_path);
  return m;
}

OrcaConfig PipelineConfig::orca() const {
  OrcaConfig o;
  o.walk = WalkParams{walk_iterations, damping, tol};
  o.k = k;
  o.max_path_len = max_path_len;
  return o;
}

nlohmann::json PipelineConfig::to_json() const {
  return {
      {"windows", {{"L", windows.L}, {"T", windows.T}, {"T_prime", windows.T_prime}}},
      {"mfd",
       {{"delta_minutes", delta_minutes},
        {"eta_minutes", eta_minutes},
        {"spot_q", spot_q},
        {"spot_init_quantile", spot_init_quantile},
        {"spot_min_nonzero", spot_min_nonzero},
        {"intensity_fallback", intensity_fallback},
        {"gap_split_slots", gap_split_slots ? nlohmann::json(*gap_split_slots) : nlohmann::json(nullptr)},
        {"whitelist_path", whitelist_path},
        {"catalog_mode", catalog_mode == CatalogMode::strict ? "strict" : "permissive"}}},
      {"fcm", {{"alpha", alpha}, {"support_mode", to_string(support_mode)}}},
      {"orca",
       {{"walk_iterations", walk_iterations},
        {"damping", damping},
        {"tol", tol},
        {"k", k},
        {"max_path_len", max_path_len}}},
      {"eval", {{"pcr_denominator", eval::to_string(pcr_denominator)}}},
  };
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

template <class T>
void take(const toml::table& t, std::string_view key, T& target) {
  if (!t.contains(key)) return;
  if (auto v = t[key].value<T>()) {
    target = *v;
    return;
  }
  throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
}

void take_count(const toml::table& t, std::string_view key, std::size_t& target) {
  std::int64_t v = static_cast<std::int64_t>(target);
  take(t, key, v);
  if (v < 0) throw ConfigError("config key '" + std::string(key) + "' must be non-negative");
  target = static_cast<std::size_t>(v);
}

}  // namespace

void apply_config_toml(PipelineConfig& c, std::string_view text, std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string(source_name) + ":" + std::to_string(e.source().begin.line),
                     std::string(e.description()));
  }
  static const std::set<std::string, std::less<>> sections{"windows", "mfd", "fcm", "orca", "eval"};
  for (const auto& [key, node] : root) {
    if (!sections.count(key.str()) || !node.is_table()) {
      throw ConfigError("unknown config section '" + std::string(key.str()) + "' in " + std::string(source_name));
    }
  }
  if (auto* w = root["windows"].as_table()) {
    take(*w, "L", c.windows.L);
    take(*w, "T", c.windows.T);
    take(*w, "T_prime", c.windows.T_prime);
  }
  if (auto* m = root["mfd"].as_table()) {
    take(*m, "delta_minutes", c.delta_minutes);
    take(*m, "eta_minutes", c.eta_minutes);
    take(*m, "spot_q", c.spot_q);
    take(*m, "spot_init_quantile", c.spot_init_quantile);
    take_count(*m, "spot_min_nonzero", c.spot_min_nonzero);
    take(*m, "intensity_fallback", c.intensity_fallback);
    if (m->contains("gap_split_slots")) {
      std::int64_t g = 0;
      take(*m, "gap_split_slots", g);
      c.gap_split_slots = g;
    }
    take(*m, "whitelist_path", c.whitelist_path);
    std::string mode = c.catalog_mode == CatalogMode::strict ? "strict" : "permissive";
    take(*m, "catalog_mode", mode);
    if (mode != "strict" && mode != "permissive") throw ConfigError("catalog_mode must be strict or permissive");
    c.catalog_mode = mode == "strict" ? CatalogMode::strict : CatalogMode::permissive;
  }
  if (auto* f = root["fcm"].as_table()) {
    take(*f, "alpha", c.alpha);
    std::string mode(to_string(c.support_mode));
    take(*f, "support_mode", mode);
    c.support_mode = parse_support_mode(mode);
  }
  if (auto* o = root["orca"].as_table()) {
    take_count(*o, "walk_iterations", c.walk_iterations);
    take(*o, "damping", c.damping);
    take(*o, "tol", c.tol);
    take_count(*o, "k", c.k);
    take_count(*o, "max_path_len", c.max_path_len);
  }
  if (auto* e = root["eval"].as_table()) {
    std::string d(eval::to_string(c.pcr_denominator));
    take(*e, "pcr_denominator", d);
    c.pcr_denominator = eval::parse_pcr_denominator(d);
  }
}

void apply_config_file(PipelineConfig& config, const fs::path& path) {
  apply_config_toml(config, read_file(path), path.string());
}

std::optional<fs::path> locate_config(const std::optional<std::string>& explicit_path) {
  if (explicit_path) return fs::path(*explicit_path);
  if (const char* env = std::getenv("BSODIAG_CONFIG"); env != nullptr && *env != '\0') return fs::path(env);
  if (fs::exists("bsodiag.toml")) return fs::path("bsodiag.toml");
  return std::nullopt;
}

}  // namespace bsodiag
