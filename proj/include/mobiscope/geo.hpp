#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mobiscope/error.hpp"

namespace mobiscope {

inline constexpr double kEarthRadiusKm = 6371.0088;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

bool valid_point(const GeoPoint& p);

// Great-circle distance in km (haversine on a sphere of radius kEarthRadiusKm).
double haversine_km(const GeoPoint& a, const GeoPoint& b);

// Arithmetic mean of lat and lon. Only meant for clusters of nearby points;
// refuses inputs whose bounding box spans 100 km or more.
GeoPoint mean_coordinate(const std::vector<GeoPoint>& points);

// One linear ring, stored without the closing duplicate vertex.
struct Ring {
  std::vector<GeoPoint> vertices;
};

struct Subzone {
  std::string zone_id;
  // Outer boundaries and holes together; even-odd counting makes the
  // distinction irrelevant for containment.
  std::vector<Ring> rings;
  double min_lat = 0.0, max_lat = 0.0, min_lon = 0.0, max_lon = 0.0;
};

class SubzoneMap {
 public:
  SubzoneMap() = default;

  static SubzoneMap from_zones(std::vector<Subzone> zones);
  static SubzoneMap load_geojson(const std::string& path,
                                 const std::string& id_property = "SUBZONE_N");
  static SubzoneMap parse_geojson(const std::string& text,
                                  const std::string& id_property = "SUBZONE_N");

  const std::vector<Subzone>& zones() const { return zones_; }
  bool empty() const { return zones_.empty(); }

  // Zone containing p (even-odd rule, boundary counts as inside). Ties across
  // overlapping zones resolve to the lexicographically smallest zone_id; a
  // point in no zone yields nullopt.
  std::optional<std::string> locate(const GeoPoint& p) const;

 private:
  std::vector<Subzone> zones_;  // sorted by zone_id
};

inline std::optional<std::string> locate_subzone(const GeoPoint& p, const SubzoneMap& map) {
  return map.locate(p);
}

// True when p lies inside or on the boundary of any ring (even-odd rule).
bool point_in_rings(const GeoPoint& p, const std::vector<Ring>& rings);

}  // namespace mobiscope
