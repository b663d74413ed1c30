#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bsodiag/model.hpp"

namespace bsodiag {

/// Device inventory plus directed dependency edges. An edge u -> v means v
/// is a peripheral device fed (powered, cooled, connected) by u.
class CmdbGraph {
 public:
  void add_device(const DeviceSn& sn, const DeviceClass& device_class);
  /// Both endpoints must already exist.
  void add_edge(const DeviceSn& from, const DeviceSn& to);

  bool contains(std::string_view sn) const { return devices_.find(sn) != devices_.end(); }
  std::optional<DeviceClass> device_class(std::string_view sn) const;
  /// Direct downstream neighbours of `sn`. Throws CmdbLookupError if unknown.
  const SnSet& out(std::string_view sn) const;
  /// Direct upstream neighbours of `sn`. Throws CmdbLookupError if unknown.
  const SnSet& in(std::string_view sn) const;
  /// Every device reachable downstream of `sn` (excluding `sn` itself).
  SnSet downstream_closure(std::string_view sn) const;

  std::vector<DeviceSn> devices_of_class(std::string_view device_class) const;
  const std::map<DeviceSn, DeviceClass, std::less<>>& devices() const { return devices_; }
  std::size_t edge_count() const;

  friend bool operator==(const CmdbGraph&, const CmdbGraph&) = default;

 private:
  std::map<DeviceSn, DeviceClass, std::less<>> devices_;
  std::map<DeviceSn, SnSet, std::less<>> out_;
  std::map<DeviceSn, SnSet, std::less<>> in_;
};

CmdbGraph load_cmdb(const std::filesystem::path& path);
void save_cmdb(const CmdbGraph& cmdb, const std::filesystem::path& path);
std::string cmdb_to_json(const CmdbGraph& cmdb);
CmdbGraph cmdb_from_json(std::string_view text, std::string_view source_name = "cmdb.json");

}  // namespace bsodiag
