#pragma once

#include <filesystem>
#include <string>

#include "bsodiag/model.hpp"

namespace bsodiag {

/// Column layout of the snapshot bundle CSV files. Device sets are
/// `;`-separated inside a single field.
namespace columns {
inline const std::vector<std::string> kAlerts{"time", "device_sn", "failure_type", "description"};
inline const std::vector<std::string> kIncidents{"start_time", "end_time", "device_sns", "failure_type",
                                                 "description"};
inline const std::vector<std::string> kChanges{"time", "device_sns", "change_type", "trigger", "description"};
}  // namespace columns

FailureTypeCatalog load_catalog(const std::filesystem::path& path, CatalogMode mode = CatalogMode::strict);
void save_catalog(const FailureTypeCatalog& catalog, const std::filesystem::path& path);

/// Reads `meta.json`, `alerts.csv`, `incidents.csv`, `changes.csv` from a
/// bundle directory and validates the result against `catalog`. Missing CSV
/// files are read as empty tables.
OutageSnapshot load_snapshot(const std::filesystem::path& dir, const FailureTypeCatalog& catalog);
void save_snapshot(const OutageSnapshot& snapshot, const std::filesystem::path& dir);

SnSet parse_sn_list(std::string_view field);
std::string join_sns(const SnSet& sns);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace bsodiag
