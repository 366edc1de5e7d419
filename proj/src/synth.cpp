#include "mobiscope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "mobiscope/rng.hpp"
#include "mobiscope/timeutil.hpp"

namespace mobiscope {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMetersPerDegLat = kEarthRadiusKm * 1000.0 * kPi / 180.0;

GeoPoint offset_point(const GeoPoint& origin, double east_m, double north_m) {
  GeoPoint p;
  p.lat = origin.lat + north_m / kMetersPerDegLat;
  p.lon = origin.lon + east_m / (kMetersPerDegLat * std::cos(origin.lat * kPi / 180.0));
  return p;
}

GeoPoint polar_offset(const GeoPoint& origin, double dist_km, double angle_rad) {
  return offset_point(origin, dist_km * 1000.0 * std::cos(angle_rad),
                      dist_km * 1000.0 * std::sin(angle_rad));
}

GeoPoint jitter_point(const GeoPoint& p, Rng& rng, double jitter_m) {
  const double north = normal(rng, 0.0, jitter_m);
  const double east = normal(rng, 0.0, jitter_m);
  return offset_point(p, east, north);
}

GeoPoint lerp(const GeoPoint& a, const GeoPoint& b, double t) {
  return {a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t};
}

int64_t transit_seconds(double dist_km) {
  const double kSpeedKmh = 40.0;
  return std::clamp(static_cast<int64_t>(std::llround(dist_km / kSpeedKmh * 3600.0)),
                    static_cast<int64_t>(120), static_cast<int64_t>(1800));
}

struct ArchetypeParams {
  double offday_excursion_p;
  double offday_lo_km;
  double offday_hi_km;
};

ArchetypeParams params_for(Archetype a) {
  switch (a) {
    case Archetype::HomeBody:
      return {0.20, 2.0, 4.0};
    case Archetype::ShortTripper:
      return {0.90, 1.5, 4.5};
    case Archetype::LongTripper:
      return {0.90, 6.0, 14.0};
  }
  fail(errc::parameter, "unknown archetype");
}

struct UserPlan {
  std::string user_id;
  Archetype archetype = Archetype::HomeBody;
  bool working = false;
  GeoPoint home;
  GeoPoint work;
  double hw_km = 0.0;
  double mean_excursion_km = 0.0;  // workday evening excursions
  std::vector<char> excursion_day;  // one flag per day
};

class FixEmitter {
 public:
  FixEmitter(std::vector<GpsFix>& fixes, std::string user_id, Rng& rng, double jitter_m)
      : fixes_(fixes), user_id_(std::move(user_id)), rng_(rng), jitter_m_(jitter_m) {}

  void dwell(const GeoPoint& at, int64_t t0, int64_t t1) {
    for (int64_t t = t0; t < t1; t += 600) {
      push(jitter_point(at, rng_, jitter_m_), t, std::min(t + 600, t1));
    }
  }

  void transit(const GeoPoint& from, const GeoPoint& to, int64_t t0, int64_t t1) {
    if (t1 <= t0) return;
    const double span = static_cast<double>(t1 - t0);
    for (int64_t t = t0; t < t1; t += 60) {
      const double frac = static_cast<double>(t - t0) / span;
      push(jitter_point(lerp(from, to, frac), rng_, jitter_m_), t,
           std::min(t + 60, t1));
    }
  }

  // A short out-and-back on foot that interrupts the home stay without
  // creating one anywhere else: 400 m out over 6 minutes, then back.
  void walk(const GeoPoint& home, int64_t t0, double angle_rad) {
    for (int m = 1; m <= 12; ++m) {
      const double leg_m = m <= 6 ? m * 400.0 / 6.0 : (12 - m) * 400.0 / 6.0;
      const GeoPoint at = offset_point(home, leg_m * std::cos(angle_rad),
                                       leg_m * std::sin(angle_rad));
      push(jitter_point(at, rng_, jitter_m_), t0 + 60 * (m - 1), t0 + 60 * m);
    }
  }

 private:
  void push(const GeoPoint& p, int64_t t0, int64_t t1) {
    fixes_.push_back({user_id_, p, t0, t1});
  }

  std::vector<GpsFix>& fixes_;
  std::string user_id_;
  Rng& rng_;
  double jitter_m_;
};

// Mean workday excursion distances with an exact sample correlation of
// target_r against the commute distances: the noise component is
// orthogonalized against the standardized commute vector, so the mixing
// weights translate into the correlation directly.
std::vector<double> plan_excursion_means(const std::vector<double>& hw, double target_r,
                                         uint64_t seed) {
  const size_t n = hw.size();
  const double base_km = 6.0, scale_km = 2.0;
  std::vector<double> out(n, base_km);
  if (n < 3) return out;

  double mean = 0.0;
  for (double v : hw) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> h(n);
  double var = 0.0;
  for (size_t i = 0; i < n; ++i) {
    h[i] = hw[i] - mean;
    var += h[i] * h[i];
  }
  if (var == 0.0) fail(errc::degenerate, "plan_excursion_means: constant commutes");
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& v : h) v /= sd;

  Rng rng = make_rng(seed, 1);
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<double> z(n);
    for (double& v : z) v = normal(rng);
    double zm = 0.0;
    for (double v : z) zm += v;
    zm /= static_cast<double>(n);
    double hz = 0.0;
    for (size_t i = 0; i < n; ++i) {
      z[i] -= zm;
      hz += z[i] * h[i];
    }
    hz /= static_cast<double>(n);
    double zvar = 0.0;
    for (size_t i = 0; i < n; ++i) {
      z[i] -= hz * h[i];  // now orthogonal to h
      zvar += z[i] * z[i];
    }
    if (zvar == 0.0) continue;
    const double zsd = std::sqrt(zvar / static_cast<double>(n));
    const double mix = std::sqrt(1.0 - target_r * target_r);
    bool ok = true;
    for (size_t i = 0; i < n; ++i) {
      out[i] = base_km + scale_km * (target_r * h[i] + mix * z[i] / zsd);
      if (out[i] < 1.0 || out[i] > 13.0) ok = false;
    }
    if (ok) return out;
  }
  fail(errc::degenerate, "plan_excursion_means: could not draw distances in range");
}

}  // namespace

const char* to_string(Archetype a) {
  switch (a) {
    case Archetype::HomeBody:
      return "HomeBody";
    case Archetype::ShortTripper:
      return "ShortTripper";
    case Archetype::LongTripper:
      return "LongTripper";
  }
  return "?";
}

void SynthSpec::validate() const {
  if (n_homebody < 0 || n_short < 0 || n_long < 0 ||
      n_homebody + n_short + n_long == 0) {
    fail(errc::parameter, "synth: need at least one user");
  }
  if (days < 7) fail(errc::parameter, "synth: need at least 7 days");
  if (working_fraction < 0.0 || working_fraction > 1.0) {
    fail(errc::parameter, "synth: working fraction out of [0,1]");
  }
  if (target_r <= -1.0 || target_r >= 1.0) {
    fail(errc::parameter, "synth: target correlation must be in (-1,1)");
  }
  if (gps_jitter_m < 0 || schedule_jitter_min < 0) {
    fail(errc::parameter, "synth: jitters must be non-negative");
  }
  if (min_lat >= max_lat || min_lon >= max_lon) {
    fail(errc::parameter, "synth: empty region");
  }
  const double lat_span_km = (max_lat - min_lat) * 111.195;
  const double lon_span_km =
      (max_lon - min_lon) * 111.195 * std::cos((min_lat + max_lat) / 2.0 * kPi / 180.0);
  if (lat_span_km < 50.0 || lon_span_km < 50.0) {
    fail(errc::parameter, "synth: region must span at least 50 km on each axis");
  }
}

SynthOutput generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthOutput out;
  out.spec = spec;

  // Subzone grid over the region plus margin so jittered activity stays
  // covered.
  const double margin_deg = 0.225;
  out.grid_cell_deg = 0.01;
  out.grid_origin_lat = spec.min_lat - margin_deg;
  out.grid_origin_lon = spec.min_lon - margin_deg;
  out.grid_rows = static_cast<int>(
      std::ceil((spec.max_lat - spec.min_lat + 2 * margin_deg) / out.grid_cell_deg));
  out.grid_cols = static_cast<int>(
      std::ceil((spec.max_lon - spec.min_lon + 2 * margin_deg) / out.grid_cell_deg));

  struct Slot {
    Archetype archetype;
    const char* prefix;
    int count;
  };
  const Slot slots[3] = {{Archetype::HomeBody, "hb", spec.n_homebody},
                         {Archetype::ShortTripper, "st", spec.n_short},
                         {Archetype::LongTripper, "lt", spec.n_long}};

  std::vector<UserPlan> plans;
  Rng g = make_rng(spec.seed, 0);
  // Homes stay 20 km inside the region so every planned trip lands inside it.
  const double inner = 0.18;
  for (const Slot& slot : slots) {
    const int n_working = static_cast<int>(std::llround(spec.working_fraction * slot.count));
    for (int i = 0; i < slot.count; ++i) {
      UserPlan plan;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s%02d", slot.prefix, i);
      plan.user_id = buf;
      plan.archetype = slot.archetype;
      plan.working = i < n_working;
      plan.home.lat = uniform(g, spec.min_lat + inner, spec.max_lat - inner);
      plan.home.lon = uniform(g, spec.min_lon + inner, spec.max_lon - inner);
      plans.push_back(plan);
    }
  }

  // Commute distances stratified over [2,18] km across the working users,
  // then excursion means correlated against them.
  std::vector<size_t> working_idx;
  for (size_t u = 0; u < plans.size(); ++u) {
    if (plans[u].working) working_idx.push_back(u);
  }
  std::vector<double> hw(working_idx.size());
  for (size_t w = 0; w < working_idx.size(); ++w) {
    const double stratum =
        (static_cast<double>(w) + u01(g)) / static_cast<double>(working_idx.size());
    hw[w] = 2.0 + 16.0 * stratum;
    UserPlan& plan = plans[working_idx[w]];
    plan.hw_km = hw[w];
    plan.work = polar_offset(plan.home, hw[w], uniform(g, 0.0, 2.0 * kPi));
  }
  if (!working_idx.empty()) {
    const std::vector<double> means = plan_excursion_means(hw, spec.target_r, spec.seed);
    for (size_t w = 0; w < working_idx.size(); ++w) {
      plans[working_idx[w]].mean_excursion_km = means[w];
    }
  }

  // Per-day excursion flags, with at least one excursion guaranteed for every
  // day type a user has, so nobody ends up without trips.
  for (size_t u = 0; u < plans.size(); ++u) {
    UserPlan& plan = plans[u];
    Rng rng = make_rng(spec.seed, 1000 + u);
    const ArchetypeParams ap = params_for(plan.archetype);
    plan.excursion_day.assign(static_cast<size_t>(spec.days), 0);
    int64_t first_offday = -1, first_workday = -1;
    bool have_off = false, have_work = false;
    for (int d = 0; d < spec.days; ++d) {
      const int64_t date = spec.start_day + d;
      const bool workday = plan.working && weekday(date) < 5;
      const double p = workday ? 0.4 : ap.offday_excursion_p;
      plan.excursion_day[static_cast<size_t>(d)] = u01(rng) < p ? 1 : 0;
      if (workday) {
        if (first_workday < 0) first_workday = d;
        have_work = have_work || plan.excursion_day[static_cast<size_t>(d)];
      } else {
        if (first_offday < 0) first_offday = d;
        have_off = have_off || plan.excursion_day[static_cast<size_t>(d)];
      }
    }
    if (!have_off && first_offday >= 0) {
      plan.excursion_day[static_cast<size_t>(first_offday)] = 1;
    }
    if (plan.working && !have_work && first_workday >= 0) {
      plan.excursion_day[static_cast<size_t>(first_workday)] = 1;
    }
  }

  // Emit the GPS trace and collect excursion sites for the catalog.
  struct Site {
    GeoPoint at;
    size_t index;
  };
  std::vector<Site> sites;
  for (size_t u = 0; u < plans.size(); ++u) {
    const UserPlan& plan = plans[u];
    Rng rng = make_rng(spec.seed, 2000 + u);
    FixEmitter emit(out.fixes, plan.user_id, rng, spec.gps_jitter_m);
    const ArchetypeParams ap = params_for(plan.archetype);
    const double jitter_cap_s = 1200.0;
    auto jit = [&]() {
      return static_cast<int64_t>(std::llround(
          std::clamp(normal(rng, 0.0, spec.schedule_jitter_min * 60.0), -jitter_cap_s,
                     jitter_cap_s)));
    };

    for (int d = 0; d < spec.days; ++d) {
      const int64_t date = spec.start_day + d;
      const int64_t S = day_start_epoch(date, spec.tz_offset_minutes);
      const int64_t day_end = S + kSecondsPerDay;
      const bool workday = plan.working && weekday(date) < 5;
      const bool excursion = plan.excursion_day[static_cast<size_t>(d)] != 0;

      const int64_t walk_start = S + 27600 + jit();  // around 07:40
      emit.dwell(plan.home, S, walk_start);
      emit.walk(plan.home, walk_start, uniform(rng, 0.0, 2.0 * kPi));
      int64_t t = walk_start + 720;

      if (workday) {
        int64_t leave = S + 31800 + jit();  // around 08:50
        leave = std::max(leave, t + 60);
        emit.dwell(plan.home, t, leave);
        const int64_t to_work = transit_seconds(plan.hw_km);
        emit.transit(plan.home, plan.work, leave, leave + to_work);
        t = leave + to_work;
        int64_t work_end = S + 61200 + jit();  // around 17:00
        work_end = std::max(work_end, t + 1200);
        emit.dwell(plan.work, t, work_end);
        t = work_end;
        if (excursion) {
          const double dist =
              std::max(0.3, plan.mean_excursion_km + normal(rng, 0.0, 0.15));
          const GeoPoint site = polar_offset(plan.home, dist, uniform(rng, 0.0, 2.0 * kPi));
          sites.push_back({site, sites.size()});
          const int64_t leg1 = transit_seconds(haversine_km(plan.work, site));
          emit.transit(plan.work, site, t, t + leg1);
          t += leg1;
          const int64_t site_end = std::max(t + 1200, t + 5400 + jit());
          emit.dwell(site, t, site_end);
          const int64_t leg2 = transit_seconds(dist);
          emit.transit(site, plan.home, site_end, site_end + leg2);
          t = site_end + leg2;
        } else {
          const int64_t back = transit_seconds(plan.hw_km);
          emit.transit(plan.work, plan.home, t, t + back);
          t += back;
        }
      } else if (excursion) {
        int64_t leave = S + 46800 + jit();  // around 13:00
        leave = std::max(leave, t + 60);
        emit.dwell(plan.home, t, leave);
        const double dist = uniform(rng, ap.offday_lo_km, ap.offday_hi_km);
        const GeoPoint site = polar_offset(plan.home, dist, uniform(rng, 0.0, 2.0 * kPi));
        sites.push_back({site, sites.size()});
        const int64_t leg = transit_seconds(dist);
        emit.transit(plan.home, site, leave, leave + leg);
        t = leave + leg;
        const int64_t site_end = std::max(t + 1200, S + 55800 + jit());  // around 15:30
        emit.dwell(site, t, site_end);
        emit.transit(site, plan.home, site_end, site_end + leg);
        t = site_end + leg;
      }
      emit.dwell(plan.home, t, day_end);
    }
  }

  // Catalog: homes are residential, works and most excursion sites cycle
  // through the other categories, and one site in ten is left out so some
  // POIs stay unlabeled. A few entries sit nowhere near any activity.
  const PoiCategory cycle[] = {
      PoiCategory::Attraction,      PoiCategory::Healthcare,
      PoiCategory::NeighborhoodCenter, PoiCategory::Park,
      PoiCategory::PlacesOfWorship, PoiCategory::Playground,
      PoiCategory::Recreational,    PoiCategory::ShoppingMall,
      PoiCategory::Transportation,
  };
  for (size_t u = 0; u < plans.size(); ++u) {
    out.catalog.push_back(
        {plans[u].home, PoiCategory::Residential, "home_" + plans[u].user_id});
  }
  size_t work_no = 0;
  for (size_t u = 0; u < plans.size(); ++u) {
    if (!plans[u].working) continue;
    if (work_no % 2 == 0) {
      out.catalog.push_back(
          {plans[u].work, cycle[work_no % 9], "work_" + plans[u].user_id});
    }
    ++work_no;
  }
  for (const Site& site : sites) {
    if (site.index % 10 == 7) continue;
    char name[32];
    std::snprintf(name, sizeof(name), "site_%05zu", site.index);
    out.catalog.push_back({site.at, cycle[site.index % 9], name});
  }
  Rng extras_rng = make_rng(spec.seed, 3);
  for (int i = 0; i < 20; ++i) {
    GeoPoint p{uniform(extras_rng, spec.min_lat, spec.max_lat),
               uniform(extras_rng, spec.min_lon, spec.max_lon)};
    char name[32];
    std::snprintf(name, sizeof(name), "extra_%02d", i);
    out.catalog.push_back({p, cycle[static_cast<size_t>(i) % 9], name});
  }

  for (const UserPlan& plan : plans) {
    TruthUser t;
    t.user_id = plan.user_id;
    t.archetype = plan.archetype;
    t.working = plan.working;
    t.home = plan.home;
    if (plan.working) {
      t.work = plan.work;
      t.home_work_km = haversine_km(plan.home, plan.work);
      t.mean_excursion_km = plan.mean_excursion_km;
    }
    out.truth.push_back(std::move(t));
  }
  return out;
}

SubzoneMap SynthOutput::subzone_map() const {
  std::vector<Subzone> zones;
  zones.reserve(static_cast<size_t>(grid_rows) * static_cast<size_t>(grid_cols));
  for (int r = 0; r < grid_rows; ++r) {
    for (int c = 0; c < grid_cols; ++c) {
      const double lat0 = grid_origin_lat + r * grid_cell_deg;
      const double lon0 = grid_origin_lon + c * grid_cell_deg;
      Subzone z;
      char id[24];
      std::snprintf(id, sizeof(id), "z_%03d_%03d", r, c);
      z.zone_id = id;
      z.rings.push_back({{{lat0, lon0},
                          {lat0, lon0 + grid_cell_deg},
                          {lat0 + grid_cell_deg, lon0 + grid_cell_deg},
                          {lat0 + grid_cell_deg, lon0}}});
      zones.push_back(std::move(z));
    }
  }
  return SubzoneMap::from_zones(std::move(zones));
}

std::string SynthOutput::subzones_geojson() const {
  std::string s = "{\"type\":\"FeatureCollection\",\"features\":[\n";
  char buf[512];
  bool first = true;
  for (int r = 0; r < grid_rows; ++r) {
    for (int c = 0; c < grid_cols; ++c) {
      const double lat0 = grid_origin_lat + r * grid_cell_deg;
      const double lon0 = grid_origin_lon + c * grid_cell_deg;
      const double lat1 = lat0 + grid_cell_deg;
      const double lon1 = lon0 + grid_cell_deg;
      std::snprintf(
          buf, sizeof(buf),
          "%s{\"type\":\"Feature\",\"properties\":{\"SUBZONE_N\":\"z_%03d_%03d\"},"
          "\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[[%.6f,%.6f],[%.6f,%.6f],"
          "[%.6f,%.6f],[%.6f,%.6f],[%.6f,%.6f]]]}}",
          first ? "" : ",\n", r, c, lon0, lat0, lon1, lat0, lon1, lat1, lon0, lat1, lon0,
          lat0);
      s += buf;
      first = false;
    }
  }
  s += "\n]}\n";
  return s;
}

void write_synth_dataset(const SynthOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(errc::io_error, "cannot create directory " + dir);

  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = dir + "/" + name;
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(errc::io_error, "cannot write " + path);
    f << content;
  };

  write_file("fixes.csv", serialize_fixes_csv(out.fixes));

  std::string catalog = "lat,lon,category,name\n";
  char buf[256];
  for (const CatalogEntry& e : out.catalog) {
    std::snprintf(buf, sizeof(buf), "%.7f,%.7f,%s,%s\n", e.point.lat, e.point.lon,
                  std::string(to_string(e.category)).c_str(), e.name.c_str());
    catalog += buf;
  }
  write_file("catalog.csv", catalog);

  write_file("subzones.geojson", out.subzones_geojson());

  nlohmann::json truth;
  truth["seed"] = out.spec.seed;
  truth["days"] = out.spec.days;
  truth["start_date"] = format_date(out.spec.start_day);
  truth["target_r"] = out.spec.target_r;
  truth["users"] = nlohmann::json::array();
  for (const TruthUser& t : out.truth) {
    nlohmann::json u;
    u["user_id"] = t.user_id;
    u["archetype"] = to_string(t.archetype);
    u["working"] = t.working;
    u["home"] = {t.home.lat, t.home.lon};
    if (t.work) {
      u["work"] = {t.work->lat, t.work->lon};
      u["home_work_km"] = *t.home_work_km;
      u["mean_excursion_km"] = *t.mean_excursion_km;
    } else {
      u["work"] = nullptr;
    }
    truth["users"].push_back(std::move(u));
  }
  write_file("ground_truth.json", truth.dump(2) + "\n");
}

}  // namespace mobiscope
