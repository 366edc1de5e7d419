#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace mobiscope {

// Fixed taxonomy; enum order is the tie-break order everywhere and the column
// order of heatmaps, so it must not be reordered.
enum class PoiCategory : int {
  Attraction = 0,
  Healthcare,
  NeighborhoodCenter,
  Park,
  PlacesOfWorship,
  Playground,
  Recreational,
  ShoppingMall,
  Transportation,
  Residential,
};

inline constexpr int kCategoryCount = 10;

inline constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Attraction",       "Healthcare",     "NeighborhoodCenter", "Park",
    "PlacesOfWorship",  "Playground",     "Recreational",       "ShoppingMall",
    "Transportation",   "Residential",
};

inline std::string_view to_string(PoiCategory c) {
  return kCategoryNames[static_cast<int>(c)];
}

std::optional<PoiCategory> category_from_string(std::string_view name);

}  // namespace mobiscope
