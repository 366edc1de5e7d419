#include "mobiscope/labeling.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace mobiscope {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

LabelCatalog LabelCatalog::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<CatalogEntry> entries;
  std::vector<std::string> unknown;
  size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "lat,lon,category,name") {
        fail(errc::corrupt_input, "catalog: expected header lat,lon,category,name");
      }
      saw_header = true;
      continue;
    }
    // The name column may contain commas; only the first three split.
    std::vector<std::string> fields = split_csv(line);
    if (fields.size() < 4) {
      fail(errc::corrupt_input, "catalog line " + std::to_string(line_no) + ": too few fields");
    }
    CatalogEntry e;
    try {
      e.point.lat = std::stod(fields[0]);
      e.point.lon = std::stod(fields[1]);
    } catch (const std::exception&) {
      fail(errc::corrupt_input, "catalog line " + std::to_string(line_no) + ": bad coordinate");
    }
    if (!valid_point(e.point)) {
      fail(errc::corrupt_input,
           "catalog line " + std::to_string(line_no) + ": coordinate out of range");
    }
    auto cat = category_from_string(fields[2]);
    if (!cat) {
      unknown.push_back("line " + std::to_string(line_no) + ": " + fields[2]);
      continue;
    }
    e.category = *cat;
    e.name = fields[3];
    for (size_t i = 4; i < fields.size(); ++i) {
      e.name += ",";
      e.name += fields[i];
    }
    entries.push_back(std::move(e));
  }
  if (!unknown.empty()) {
    std::string msg = "catalog has unknown categories:";
    for (const std::string& u : unknown) {
      msg += " ";
      msg += u;
      msg += ";";
    }
    fail(errc::corrupt_input, msg);
  }
  return LabelCatalog(std::move(entries));
}

LabelCatalog LabelCatalog::load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::optional<PoiCategory> assign_category(const GeoPoint& centroid,
                                           const LabelCatalog& catalog, double max_m) {
  if (max_m <= 0) fail(errc::parameter, "assign_category: max_m must be positive");
  const double max_km = max_m / 1000.0;
  double best_d = std::numeric_limits<double>::infinity();
  int best_index = -1;
  const auto& entries = catalog.entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    const double d = haversine_km(centroid, entries[i].point);
    if (d > max_km) continue;
    bool better = d < best_d;
    if (d == best_d && best_index >= 0) {
      // Equal distance: lower category enum wins; same category keeps the
      // earlier catalog entry.
      better = static_cast<int>(entries[i].category) <
               static_cast<int>(entries[static_cast<size_t>(best_index)].category);
    }
    if (better) {
      best_d = d;
      best_index = static_cast<int>(i);
    }
  }
  if (best_index < 0) return std::nullopt;
  return entries[static_cast<size_t>(best_index)].category;
}

LabelStats label_all(std::vector<Poi>& pois, const LabelCatalog& catalog, double max_m) {
  LabelStats stats;
  for (Poi& poi : pois) {
    poi.category = assign_category(poi.centroid, catalog, max_m);
    if (poi.category) {
      ++stats.labeled;
    } else {
      ++stats.unlabeled;
    }
  }
  return stats;
}

}  // namespace mobiscope
