#include "mobiscope/categories.hpp"

namespace mobiscope {

std::optional<PoiCategory> category_from_string(std::string_view name) {
  for (int i = 0; i < kCategoryCount; ++i) {
    if (kCategoryNames[i] == name) return static_cast<PoiCategory>(i);
  }
  return std::nullopt;
}

}  // namespace mobiscope
