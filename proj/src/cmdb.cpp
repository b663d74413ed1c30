#include "bsodiag/cmdb.hpp"

#include <deque>

#include <json.hpp>

#include "bsodiag/error.hpp"
#include "bsodiag/snapshot_io.hpp"

namespace bsodiag {

using json = nlohmann::json;

void CmdbGraph::add_device(const DeviceSn& sn, const DeviceClass& device_class) {
  if (sn.empty()) throw ValidationError("cmdb: empty device serial number");
  auto [it, inserted] = devices_.emplace(sn, device_class);
  if (!inserted && it->second != device_class) {
    throw ValidationError("cmdb: device '" + sn + "' registered with two classes");
  }
  out_.try_emplace(sn);
  in_.try_emplace(sn);
}

void CmdbGraph::add_edge(const DeviceSn& from, const DeviceSn& to) {
  if (!contains(from)) throw CmdbLookupError("cmdb: unknown device '" + from + "'");
  if (!contains(to)) throw CmdbLookupError("cmdb: unknown device '" + to + "'");
  if (from == to) throw ValidationError("cmdb: self edge on '" + from + "'");
  out_.find(from)->second.insert(to);
  in_.find(to)->second.insert(from);
}

std::optional<DeviceClass> CmdbGraph::device_class(std::string_view sn) const {
  auto it = devices_.find(sn);
  if (it == devices_.end()) return std::nullopt;
  return it->second;
}

const SnSet& CmdbGraph::out(std::string_view sn) const {
  auto it = out_.find(sn);
  if (it == out_.end()) throw CmdbLookupError("cmdb: unknown device '" + std::string(sn) + "'");
  return it->second;
}

const SnSet& CmdbGraph::in(std::string_view sn) const {
  auto it = in_.find(sn);
  if (it == in_.end()) throw CmdbLookupError("cmdb: unknown device '" + std::string(sn) + "'");
  return it->second;
}

SnSet CmdbGraph::downstream_closure(std::string_view sn) const {
  SnSet seen;
  std::deque<std::string_view> queue{sn};
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    for (const auto& next : out(cur)) {
      if (seen.insert(next).second) queue.push_back(next);
    }
  }
  seen.erase(std::string(sn));
  return seen;
}

std::vector<DeviceSn> CmdbGraph::devices_of_class(std::string_view device_class) const {
  std::vector<DeviceSn> out;
  for (const auto& [sn, cls] : devices_) {
    if (cls == device_class) out.push_back(sn);
  }
  return out;
}

std::size_t CmdbGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [sn, outs] : out_) n += outs.size();
  return n;
}

std::string cmdb_to_json(const CmdbGraph& cmdb) {
  json devices = json::array();
  json edges = json::array();
  for (const auto& [sn, cls] : cmdb.devices()) {
    devices.push_back({{"sn", sn}, {"class", cls}});
    for (const auto& to : cmdb.out(sn)) edges.push_back({{"from", sn}, {"to", to}});
  }
  return json{{"devices", devices}, {"edges", edges}}.dump(1) + "\n";
}

CmdbGraph cmdb_from_json(std::string_view text, std::string_view source_name) {
  CmdbGraph cmdb;
  try {
    const auto doc = json::parse(text);
    for (const auto& d : doc.at("devices")) cmdb.add_device(d.at("sn").get<std::string>(), d.at("class").get<std::string>());
    for (const auto& e : doc.at("edges")) cmdb.add_edge(e.at("from").get<std::string>(), e.at("to").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(std::string(source_name), e.what());
  }
  return cmdb;
}

CmdbGraph load_cmdb(const std::filesystem::path& path) { return cmdb_from_json(read_file(path), path.string()); }

void save_cmdb(const CmdbGraph& cmdb, const std::filesystem::path& path) { write_file(path, cmdb_to_json(cmdb)); }

}  // namespace bsodiag
