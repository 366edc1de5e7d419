#pragma once

#include <string>
#include <vector>

#include "mobiscope/categories.hpp"
#include "mobiscope/poi.hpp"

namespace mobiscope {

struct CatalogEntry {
  GeoPoint point;
  PoiCategory category = PoiCategory::Attraction;
  std::string name;
};

class LabelCatalog {
 public:
  LabelCatalog() = default;
  explicit LabelCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {}

  // CSV columns: lat,lon,category,name. Unknown category names are collected
  // and reported in one error.
  static LabelCatalog load_csv(const std::string& path);
  static LabelCatalog parse_csv(const std::string& text);

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<CatalogEntry> entries_;
};

// Category of the nearest catalog entry within max_m of the POI centroid, or
// nullopt if none is close enough. Distance ties break by category order,
// then by catalog index.
std::optional<PoiCategory> assign_category(const GeoPoint& centroid,
                                           const LabelCatalog& catalog,
                                           double max_m = 400.0);

struct LabelStats {
  size_t labeled = 0;
  size_t unlabeled = 0;
};

// Fills Poi::category in place and never drops a POI.
LabelStats label_all(std::vector<Poi>& pois, const LabelCatalog& catalog,
                     double max_m = 400.0);

}  // namespace mobiscope
