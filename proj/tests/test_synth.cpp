#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mobiscope/synth.hpp"

using namespace mobiscope;
namespace fs = std::filesystem;

namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.seed = 5;
  spec.n_homebody = 4;
  spec.n_short = 4;
  spec.n_long = 4;
  spec.days = 14;
  return spec;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("fixes are per-user time-ordered and inside the region") {
    const SynthOutput out = generate_synthetic(small_spec());
    REQUIRE(!out.fixes.empty());
    std::map<std::string, int64_t> last_end;
    for (const GpsFix& f : out.fixes) {
      CHECK(f.start_epoch_s <= f.end_epoch_s);
      CHECK(f.point.lat >= out.spec.min_lat);
      CHECK(f.point.lat <= out.spec.max_lat);
      CHECK(f.point.lon >= out.spec.min_lon);
      CHECK(f.point.lon <= out.spec.max_lon);
      auto it = last_end.find(f.user_id);
      if (it != last_end.end()) CHECK(f.start_epoch_s >= it->second);
      last_end[f.user_id] = f.end_epoch_s;
    }
    CHECK(last_end.size() == 12);
  }

  TEST_CASE("truth holds the planned working split") {
    const SynthOutput out = generate_synthetic(small_spec());
    REQUIRE(out.truth.size() == 12);
    std::map<Archetype, int> working, total;
    std::set<std::string> ids;
    for (const TruthUser& u : out.truth) {
      CHECK(ids.insert(u.user_id).second);
      ++total[u.archetype];
      if (u.working) {
        ++working[u.archetype];
        REQUIRE(u.work.has_value());
        REQUIRE(u.home_work_km.has_value());
        CHECK(*u.home_work_km >= 2.0);
        CHECK(*u.home_work_km <= 18.0);
        CHECK(haversine_km(u.home, *u.work) == doctest::Approx(*u.home_work_km).epsilon(1e-6));
      } else {
        CHECK(!u.work);
        CHECK(!u.home_work_km);
        CHECK(!u.mean_excursion_km);
      }
    }
    // 0.7 of 4 rounds to 3 working users per archetype.
    for (auto a : {Archetype::HomeBody, Archetype::ShortTripper, Archetype::LongTripper}) {
      CHECK(total[a] == 4);
      CHECK(working[a] == 3);
    }
  }

  TEST_CASE("every home has a residential catalog entry") {
    const SynthOutput out = generate_synthetic(small_spec());
    for (const TruthUser& u : out.truth) {
      bool found = false;
      for (const CatalogEntry& e : out.catalog) {
        if (e.category == PoiCategory::Residential && e.point == u.home) {
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }

  TEST_CASE("the subzone grid covers every fix") {
    const SynthOutput out = generate_synthetic(small_spec());
    const SubzoneMap map = out.subzone_map();
    REQUIRE(!map.empty());
    // Sampling keeps this test quick; coverage failures would be systematic.
    for (size_t i = 0; i < out.fixes.size(); i += 37) {
      CHECK(map.locate(out.fixes[i].point).has_value());
    }
    for (const TruthUser& u : out.truth) {
      CHECK(map.locate(u.home).has_value());
    }
  }

  TEST_CASE("generation is deterministic in the seed") {
    const SynthOutput a = generate_synthetic(small_spec());
    const SynthOutput b = generate_synthetic(small_spec());
    CHECK(a.fixes == b.fixes);
    REQUIRE(a.truth.size() == b.truth.size());
    for (size_t i = 0; i < a.truth.size(); ++i) {
      CHECK(a.truth[i].home == b.truth[i].home);
      CHECK(a.truth[i].working == b.truth[i].working);
    }
    SynthSpec other = small_spec();
    other.seed = 6;
    const SynthOutput c = generate_synthetic(other);
    CHECK(a.fixes != c.fixes);
  }

  TEST_CASE("serialized fixes survive re-ingestion") {
    const SynthOutput out = generate_synthetic(small_spec());
    const std::string csv = serialize_fixes_csv(out.fixes);
    std::istringstream in(csv);
    const ParseResult parsed = parse_fixes(in, FixFormat::csv);
    CHECK(parsed.errors.empty());
    REQUIRE(parsed.fixes.size() == out.fixes.size());
    for (size_t i = 0; i < out.fixes.size(); ++i) {
      CHECK(parsed.fixes[i].user_id == out.fixes[i].user_id);
      CHECK(parsed.fixes[i].start_epoch_s == out.fixes[i].start_epoch_s);
      CHECK(parsed.fixes[i].end_epoch_s == out.fixes[i].end_epoch_s);
      // Coordinates are written with 7 decimals, about a centimeter.
      CHECK(std::abs(parsed.fixes[i].point.lat - out.fixes[i].point.lat) <= 1e-7);
      CHECK(std::abs(parsed.fixes[i].point.lon - out.fixes[i].point.lon) <= 1e-7);
    }
  }

  TEST_CASE("write_synth_dataset produces the four files") {
    const fs::path dir = fs::temp_directory_path() / "mobiscope_synth_io_test";
    fs::remove_all(dir);
    const SynthOutput out = generate_synthetic(small_spec());
    write_synth_dataset(out, dir.string());
    for (const char* name :
         {"fixes.csv", "catalog.csv", "subzones.geojson", "ground_truth.json"}) {
      CAPTURE(name);
      CHECK(fs::exists(dir / name));
      CHECK(fs::file_size(dir / name) > 0);
    }
    // The written catalog parses back with the same size.
    const LabelCatalog cat = LabelCatalog::load_csv((dir / "catalog.csv").string());
    CHECK(cat.entries().size() == out.catalog.size());
    const SubzoneMap map =
        SubzoneMap::load_geojson((dir / "subzones.geojson").string(), "SUBZONE_N");
    CHECK(map.zones().size() == static_cast<size_t>(out.grid_rows * out.grid_cols));
    fs::remove_all(dir);
  }

  TEST_CASE("spec validation refuses bad shapes") {
    SynthSpec spec = small_spec();
    spec.days = 0;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec = small_spec();
    spec.n_homebody = -1;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec = small_spec();
    spec.max_lat = spec.min_lat + 0.1;  // far below the 50 km minimum
    CHECK_THROWS_AS(spec.validate(), Error);
    spec = small_spec();
    spec.working_fraction = 1.5;
    CHECK_THROWS_AS(spec.validate(), Error);
  }
}
