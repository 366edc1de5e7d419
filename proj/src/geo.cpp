#include "mobiscope/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mobiscope {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

bool valid_point(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  if (!valid_point(a) || !valid_point(b)) {
    fail(errc::invalid_input, "haversine_km: coordinate out of range");
  }
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double sdlat = std::sin(dlat / 2.0);
  const double sdlon = std::sin(dlon / 2.0);
  double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

GeoPoint mean_coordinate(const std::vector<GeoPoint>& points) {
  if (points.empty()) fail(errc::empty_input, "mean_coordinate: no points");
  double min_lat = points[0].lat, max_lat = points[0].lat;
  double min_lon = points[0].lon, max_lon = points[0].lon;
  double sum_lat = 0.0, sum_lon = 0.0;
  for (const GeoPoint& p : points) {
    if (!valid_point(p)) fail(errc::invalid_input, "mean_coordinate: coordinate out of range");
    min_lat = std::min(min_lat, p.lat);
    max_lat = std::max(max_lat, p.lat);
    min_lon = std::min(min_lon, p.lon);
    max_lon = std::max(max_lon, p.lon);
    sum_lat += p.lat;
    sum_lon += p.lon;
  }
  if (haversine_km({min_lat, min_lon}, {max_lat, max_lon}) >= 100.0) {
    fail(errc::out_of_region, "mean_coordinate: span of 100 km or more");
  }
  const double n = static_cast<double>(points.size());
  return {sum_lat / n, sum_lon / n};
}

namespace {

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  const double cross =
      (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  if (cross != 0.0) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
         p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

}  // namespace

bool point_in_rings(const GeoPoint& p, const std::vector<Ring>& rings) {
  // Boundary counts as inside regardless of crossing parity.
  for (const Ring& ring : rings) {
    const size_t n = ring.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      if (on_segment(p, ring.vertices[i], ring.vertices[(i + 1) % n])) return true;
    }
  }
  bool inside = false;
  for (const Ring& ring : rings) {
    const size_t n = ring.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      const GeoPoint& a = ring.vertices[i];
      const GeoPoint& b = ring.vertices[(i + 1) % n];
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double t = (p.lat - a.lat) / (b.lat - a.lat);
        const double x = a.lon + t * (b.lon - a.lon);
        if (x > p.lon) inside = !inside;
      }
    }
  }
  return inside;
}

SubzoneMap SubzoneMap::from_zones(std::vector<Subzone> zones) {
  std::set<std::string> seen;
  for (Subzone& z : zones) {
    if (z.zone_id.empty()) fail(errc::corrupt_input, "subzone with empty zone id");
    if (!seen.insert(z.zone_id).second) {
      fail(errc::corrupt_input, "duplicate zone id: " + z.zone_id);
    }
    if (z.rings.empty()) fail(errc::corrupt_input, "zone " + z.zone_id + " has no rings");
    bool first = true;
    for (Ring& ring : z.rings) {
      // Drop a closing vertex that repeats the first one.
      if (ring.vertices.size() >= 2 && ring.vertices.front() == ring.vertices.back()) {
        ring.vertices.pop_back();
      }
      if (ring.vertices.size() < 3) {
        fail(errc::corrupt_input, "zone " + z.zone_id + " has a ring with fewer than 3 vertices");
      }
      for (const GeoPoint& v : ring.vertices) {
        if (!valid_point(v)) {
          fail(errc::corrupt_input, "zone " + z.zone_id + " has an invalid vertex");
        }
        if (first) {
          z.min_lat = z.max_lat = v.lat;
          z.min_lon = z.max_lon = v.lon;
          first = false;
        } else {
          z.min_lat = std::min(z.min_lat, v.lat);
          z.max_lat = std::max(z.max_lat, v.lat);
          z.min_lon = std::min(z.min_lon, v.lon);
          z.max_lon = std::max(z.max_lon, v.lon);
        }
      }
    }
  }
  std::sort(zones.begin(), zones.end(),
            [](const Subzone& a, const Subzone& b) { return a.zone_id < b.zone_id; });
  SubzoneMap map;
  map.zones_ = std::move(zones);
  return map;
}

std::optional<std::string> SubzoneMap::locate(const GeoPoint& p) const {
  if (!valid_point(p)) fail(errc::invalid_input, "locate: coordinate out of range");
  for (const Subzone& z : zones_) {
    if (p.lat < z.min_lat || p.lat > z.max_lat || p.lon < z.min_lon || p.lon > z.max_lon) {
      continue;
    }
    if (point_in_rings(p, z.rings)) return z.zone_id;
  }
  return std::nullopt;
}

namespace {

Ring ring_from_json(const nlohmann::json& arr) {
  Ring ring;
  if (!arr.is_array()) fail(errc::corrupt_input, "geojson: ring is not an array");
  for (const auto& pos : arr) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      fail(errc::corrupt_input, "geojson: bad position");
    }
    // GeoJSON stores [lon, lat].
    ring.vertices.push_back({pos[1].get<double>(), pos[0].get<double>()});
  }
  return ring;
}

}  // namespace

SubzoneMap SubzoneMap::parse_geojson(const std::string& text, const std::string& id_property) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::corrupt_input, std::string("geojson: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    fail(errc::corrupt_input, "geojson: expected a FeatureCollection");
  }
  std::vector<Subzone> zones;
  for (const auto& feature : doc["features"]) {
    if (!feature.is_object() || !feature.contains("geometry")) {
      fail(errc::corrupt_input, "geojson: feature without geometry");
    }
    const auto& props = feature.value("properties", nlohmann::json::object());
    if (!props.contains(id_property) || !props[id_property].is_string()) {
      fail(errc::corrupt_input, "geojson: feature missing string property " + id_property);
    }
    Subzone zone;
    zone.zone_id = props[id_property].get<std::string>();
    const auto& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (!geom.contains("coordinates")) fail(errc::corrupt_input, "geojson: no coordinates");
    const auto& coords = geom["coordinates"];
    if (type == "Polygon") {
      for (const auto& ring : coords) zone.rings.push_back(ring_from_json(ring));
    } else if (type == "MultiPolygon") {
      for (const auto& poly : coords) {
        for (const auto& ring : poly) zone.rings.push_back(ring_from_json(ring));
      }
    } else {
      fail(errc::corrupt_input, "geojson: unsupported geometry type " +
                                    (type.empty() ? std::string("(none)") : type));
    }
    zones.push_back(std::move(zone));
  }
  return from_zones(std::move(zones));
}

SubzoneMap SubzoneMap::load_geojson(const std::string& path, const std::string& id_property) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_geojson(buf.str(), id_property);
}

}  // namespace mobiscope
