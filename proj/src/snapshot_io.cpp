#include "bsodiag/snapshot_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bsodiag/csv.hpp"
#include "bsodiag/error.hpp"

namespace bsodiag {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

SnSet parse_sn_list(std::string_view field) {
  SnSet out;
  std::size_t pos = 0;
  while (pos <= field.size()) {
    auto next = field.find(';', pos);
    if (next == std::string_view::npos) next = field.size();
    auto item = field.substr(pos, next - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace(item);
    pos = next + 1;
  }
  return out;
}

std::string join_sns(const SnSet& sns) {
  std::string out;
  for (const auto& sn : sns) {
    if (!out.empty()) out.push_back(';');
    out += sn;
  }
  return out;
}

FailureTypeCatalog load_catalog(const fs::path& path, CatalogMode mode) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  std::map<FailureTypeId, FailureTypeInfo> entries;
  try {
    for (const auto& item : doc.at("failure_types")) {
      FailureTypeInfo info;
      info.level = item.at("level").get<int>();
      info.device_class = item.at("device_class").get<std::string>();
      info.numeric = item.value("numeric", false);
      info.extraction_pattern = item.value("pattern", std::string{});
      const auto id = item.at("id").get<std::string>();
      if (!entries.emplace(id, std::move(info)).second) {
        throw ValidationError(path.string() + ": duplicate failure type '" + id + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
  return FailureTypeCatalog(std::move(entries), mode);
}

void save_catalog(const FailureTypeCatalog& catalog, const fs::path& path) {
  json items = json::array();
  for (const auto& [id, info] : catalog.entries()) {
    items.push_back({{"id", id},
                     {"level", info.level},
                     {"device_class", info.device_class},
                     {"numeric", info.numeric},
                     {"pattern", info.extraction_pattern}});
  }
  write_file(path, json{{"failure_types", items}}.dump(2) + "\n");
}

namespace {

std::string where(const csv::Table& table, const csv::Row& row, std::string_view column) {
  return table.source() + ":" + std::to_string(row.line) + " field '" + std::string(column) + "'";
}

TimeRef parse_time_field(const csv::Table& table, const csv::Row& row, std::size_t col,
                         std::string_view column, SysSeconds origin) {
  try {
    return to_relative(parse_iso8601(row.fields[col]), origin);
  } catch (const ParseError& e) {
    throw ParseError(where(table, row, column), e.what());
  }
}

SnSet parse_sns_field(const csv::Table& table, const csv::Row& row, std::size_t col, std::string_view column) {
  auto sns = parse_sn_list(row.fields[col]);
  if (sns.empty()) throw ParseError(where(table, row, column), "empty device list");
  return sns;
}

std::string read_optional(const fs::path& path) { return fs::exists(path) ? read_file(path) : std::string{}; }

std::string csv_text_or_header(const fs::path& path, const std::vector<std::string>& cols) {
  auto text = read_optional(path);
  if (!text.empty()) return text;
  std::ostringstream out;
  csv::write_row(out, cols);
  return out.str();
}

}  // namespace

OutageSnapshot load_snapshot(const fs::path& dir, const FailureTypeCatalog& catalog) {
  OutageSnapshot snap;
  const auto meta_path = dir / "meta.json";
  try {
    const auto meta = json::parse(read_file(meta_path));
    snap.outage_id = meta.value("outage_id", dir.filename().string());
    snap.outage_time = parse_iso8601(meta.at("outage_time").get<std::string>());
    snap.outage.type_failure = meta.value("outage_type", std::string(kDefaultOutageType));
    snap.outage.type_device = meta.value("outage_device_class", std::string("server"));
    for (const auto& sn : meta.at("outage_sns")) snap.outage.sns.insert(sn.get<std::string>());
    snap.outage.source = EventSource::incident;
    if (meta.contains("windows")) {
      const auto& w = meta["windows"];
      snap.windows.L = w.value("L", snap.windows.L);
      snap.windows.T = w.value("T", snap.windows.T);
      snap.windows.T_prime = w.value("T_prime", snap.windows.T_prime);
    }
  } catch (const json::exception& e) {
    throw ParseError(meta_path.string(), e.what());
  }
  snap.outage.start_time = TimeRef{0};
  snap.outage.end_time = TimeRef{0};

  {
    const auto path = dir / "alerts.csv";
    csv::Table table(csv_text_or_header(path, columns::kAlerts), "alerts.csv", columns::kAlerts);
    for (const auto& row : table.rows()) {
      Alert a;
      a.time = parse_time_field(table, row, 0, "time", snap.outage_time);
      a.device_sn = row.fields[1];
      if (a.device_sn.empty()) throw ParseError(where(table, row, "device_sn"), "empty device serial number");
      a.failure_type = row.fields[2];
      a.description = row.fields[3];
      snap.alerts.push_back(std::move(a));
    }
  }
  {
    const auto path = dir / "incidents.csv";
    csv::Table table(csv_text_or_header(path, columns::kIncidents), "incidents.csv", columns::kIncidents);
    for (const auto& row : table.rows()) {
      Incident inc;
      inc.start = parse_time_field(table, row, 0, "start_time", snap.outage_time);
      inc.end = parse_time_field(table, row, 1, "end_time", snap.outage_time);
      inc.device_sns = parse_sns_field(table, row, 2, "device_sns");
      inc.failure_type = row.fields[3];
      inc.description = row.fields[4];
      snap.incidents.push_back(std::move(inc));
    }
  }
  {
    const auto path = dir / "changes.csv";
    csv::Table table(csv_text_or_header(path, columns::kChanges), "changes.csv", columns::kChanges);
    for (const auto& row : table.rows()) {
      Change c;
      c.time = parse_time_field(table, row, 0, "time", snap.outage_time);
      c.device_sns = parse_sns_field(table, row, 1, "device_sns");
      c.change_type = row.fields[2];
      try {
        c.trigger = parse_change_trigger(row.fields[3]);
      } catch (const ParseError& e) {
        throw ParseError(where(table, row, "trigger"), e.what());
      }
      c.description = row.fields[4];
      snap.changes.push_back(std::move(c));
    }
  }

  // The outage incident, when present, extends the outage event's span.
  for (const auto& inc : snap.incidents) {
    if (inc.failure_type == snap.outage.type_failure && inc.end > snap.outage.end_time) {
      snap.outage.end_time = inc.end;
    }
  }

  validate_snapshot(snap, catalog);
  return snap;
}

void save_snapshot(const OutageSnapshot& snap, const fs::path& dir) {
  fs::create_directories(dir);
  json meta{{"outage_id", snap.outage_id},
            {"outage_time", format_iso8601(snap.outage_time)},
            {"outage_type", snap.outage.type_failure},
            {"outage_device_class", snap.outage.type_device},
            {"outage_sns", snap.outage.sns},
            {"windows", {{"L", snap.windows.L}, {"T", snap.windows.T}, {"T_prime", snap.windows.T_prime}}}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  const auto abs = [&](TimeRef t) { return format_iso8601(to_absolute(t, snap.outage_time)); };
  {
    std::ostringstream out;
    csv::write_row(out, columns::kAlerts);
    for (const auto& a : snap.alerts) csv::write_row(out, {abs(a.time), a.device_sn, a.failure_type, a.description});
    write_file(dir / "alerts.csv", out.str());
  }
  {
    std::ostringstream out;
    csv::write_row(out, columns::kIncidents);
    for (const auto& i : snap.incidents) {
      csv::write_row(out, {abs(i.start), abs(i.end), join_sns(i.device_sns), i.failure_type, i.description});
    }
    write_file(dir / "incidents.csv", out.str());
  }
  {
    std::ostringstream out;
    csv::write_row(out, columns::kChanges);
    for (const auto& c : snap.changes) {
      csv::write_row(out, {abs(c.time), join_sns(c.device_sns), c.change_type, std::string(to_string(c.trigger)),
                           c.description});
    }
    write_file(dir / "changes.csv", out.str());
  }
}

}  // namespace bsodiag
