#include "mincurvfg/run.hpp"

#include "parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace mincurvfg::run {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- parsing

// Reads keys of one object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& parent, const std::string& name) : name_(name) {
    if (!parent.contains(name)) return;
    node_ = &parent.at(name);
    if (!node_->is_object()) throw ConfigError("config section '" + name + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    const json& v = node_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else {
        if (!v.is_string()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  void get_pair(const char* key, Eigen::Vector2d& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    const json& v = node_->at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("config key '" + name_ + "." + key + "' must be [min, max]");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  void get_path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_relative() && !base.empty() ? base / p : p;
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [k, v] : node_->items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + name_ + "." + k + "'");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

void check_root(const json& root) {
  static const std::set<std::string> sections = {"track",   "sdf",    "vehicle", "weights",
                                                 "bounds",  "planner", "solver", "seed"};
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : root.items()) {
    if (!sections.count(k)) throw ConfigError("unknown config section '" + k + "'");
  }
}

// ---------------------------------------------------------------- formatting

std::string num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// JSON numbers must be finite; non-finite values become null.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json pair(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

json metrics_json(const metrics::LapMetrics& m) {
  return json{{"cumulative_curvature", jnum(m.cumulative_curvature)},
              {"distance", jnum(m.distance)},
              {"mean_speed", jnum(m.mean_speed)},
              {"max_speed", jnum(m.max_speed)},
              {"min_speed", jnum(m.min_speed)},
              {"mean_solve_ms", jnum(m.mean_solve_ms)},
              {"median_solve_ms", jnum(m.median_solve_ms)},
              {"max_solve_ms", jnum(m.max_solve_ms)},
              {"min_solve_ms", jnum(m.min_solve_ms)},
              {"skipped_points", m.skipped_points}};
}

json config_object(const RunConfig& c) {
  const auto& p = c.planner;
  const auto& v = p.vehicle;
  const auto& w = p.weights;
  const auto& b = p.bounds;
  const auto& s = p.solver;
  json track{{"generator", c.track.generator},
             {"file", c.track.file.string()},
             {"left", c.track.left.string()},
             {"right", c.track.right.string()},
             {"spacing", c.track.spacing}};
  json sdf{{"resolution", c.sdf.resolution}, {"cache", c.sdf.cache.string()}};
  json vehicle{{"m", v.m},     {"Iz", v.Iz},   {"lf", v.lf},           {"lb", v.lb},
               {"L", v.L},     {"W", v.W},     {"Cr0", v.Cr0},         {"Cm1", v.Cm1},
               {"Cm2", v.Cm2}, {"Cd", v.Cd},   {"Bf", v.Bf},           {"Cf", v.Cf},
               {"Df", v.Df},   {"Bb", v.Bb},   {"Cb", v.Cb_tire},      {"Db", v.Db}};
  json weights{{"sigma_start_goal", w.sigma_start_goal}, {"sigma_ref", w.sigma_ref},
               {"sigma_vel", w.sigma_vel},               {"sigma_rlim", w.sigma_rlim},
               {"sigma_ulim", w.sigma_ulim},             {"sigma_obs", w.sigma_obs},
               {"sigma_sys", w.sigma_sys},               {"sigma_curv", w.sigma_curv},
               {"sigma_measured", w.sigma_measured}};
  json bounds{{"phi", json::array({b.r_min.x(), b.r_max.x()})},
              {"omega", json::array({b.r_min.y(), b.r_max.y()})},
              {"delta", json::array({b.u_min.x(), b.u_max.x()})},
              {"d", json::array({b.u_min.y(), b.u_max.y()})},
              {"vx", pair(b.vx_range)},
              {"vy", pair(b.vy_range)}};
  json planner{{"horizon", p.horizon},
               {"Ts", p.Ts},
               {"v_des", p.v_des},
               {"decel_steps", p.decel_steps},
               {"epsilon", p.epsilon},
               {"curvature", p.curvature},
               {"constraint_buffer", p.constraint_buffer},
               {"plant_substeps", p.plant_substeps},
               {"dynamics_substeps", p.dynamics_substeps},
               {"linearization_passes", p.linearization_passes},
               {"pass_tolerance", p.pass_tolerance},
               {"max_backtracks", p.max_backtracks},
               {"polish", p.polish},
               {"max_steps", p.max_steps},
               {"record_timing", p.record_timing},
               {"speed_profile", p.speed_profile},
               {"guided_reference", p.guided_reference},
               {"grip_margin", p.grip_margin},
               {"curvature_window", p.curvature_window}};
  json solver{{"eta", s.eta},
              {"lambda_init", s.lambda_init},
              {"lambda_factor", s.lambda_factor},
              {"max_iterations", s.max_iterations},
              {"lambda_max", s.lambda_max},
              {"second_order_correction", s.second_order_correction},
              {"diagonal_damping", s.diagonal_damping}};
  return json{{"track", track},     {"sdf", sdf},       {"vehicle", vehicle},
              {"weights", weights}, {"bounds", bounds}, {"planner", planner},
              {"solver", solver},   {"seed", c.seed}};
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

json track_json(const planner::LapResult& lap, const RunConfig& config) {
  return json{{"hash", hex64(lap.track_hash)}, {"source", config.track.file.empty() &&
                                                              config.track.left.empty()
                                                          ? "generator:" + config.track.generator
                                                          : "file"}};
}

json sdf_json(const SdfOrigin& sdf, const RunConfig& config) {
  return json{{"source", sdf.source},
              {"path", sdf.path.string()},
              {"resolution", config.sdf.resolution}};
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (root.is_null()) root = json::object();
  check_root(root);

  RunConfig c;
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer()) {
      throw ConfigError("config key 'seed' must be a nonnegative integer");
    }
    if (root["seed"].is_number_integer() && root["seed"].get<std::int64_t>() < 0) {
      throw ConfigError("config key 'seed' must be a nonnegative integer");
    }
    c.seed = root["seed"].get<std::uint64_t>();
  }

  Section track(root, "track");
  track.get("generator", c.track.generator);
  track.get_path("file", c.track.file, base_dir);
  track.get_path("left", c.track.left, base_dir);
  track.get_path("right", c.track.right, base_dir);
  track.get("spacing", c.track.spacing);
  track.finish();
  if (c.track.left.empty() != c.track.right.empty()) {
    throw ConfigError("track.left and track.right must be given together");
  }
  if (!c.track.file.empty() && !c.track.left.empty()) {
    throw ConfigError("track.file and track.left/right are mutually exclusive");
  }
  if (!(c.track.spacing > 0.0)) throw ConfigError("track.spacing must be positive");

  Section sdf(root, "sdf");
  sdf.get("resolution", c.sdf.resolution);
  sdf.get_path("cache", c.sdf.cache, base_dir);
  sdf.finish();
  if (!(c.sdf.resolution > 0.0)) throw ConfigError("sdf.resolution must be positive");

  auto& p = c.planner;
  Section vehicle(root, "vehicle");
  auto& v = p.vehicle;
  vehicle.get("m", v.m);
  vehicle.get("Iz", v.Iz);
  vehicle.get("lf", v.lf);
  vehicle.get("lb", v.lb);
  vehicle.get("L", v.L);
  vehicle.get("W", v.W);
  vehicle.get("Cr0", v.Cr0);
  vehicle.get("Cm1", v.Cm1);
  vehicle.get("Cm2", v.Cm2);
  vehicle.get("Cd", v.Cd);
  vehicle.get("Bf", v.Bf);
  vehicle.get("Cf", v.Cf);
  vehicle.get("Df", v.Df);
  vehicle.get("Bb", v.Bb);
  vehicle.get("Cb", v.Cb_tire);
  vehicle.get("Db", v.Db);
  vehicle.finish();

  Section weights(root, "weights");
  auto& w = p.weights;
  weights.get("sigma_start_goal", w.sigma_start_goal);
  weights.get("sigma_ref", w.sigma_ref);
  weights.get("sigma_vel", w.sigma_vel);
  weights.get("sigma_rlim", w.sigma_rlim);
  weights.get("sigma_ulim", w.sigma_ulim);
  weights.get("sigma_obs", w.sigma_obs);
  weights.get("sigma_sys", w.sigma_sys);
  weights.get("sigma_curv", w.sigma_curv);
  weights.get("sigma_measured", w.sigma_measured);
  weights.finish();

  Section bounds(root, "bounds");
  auto& b = p.bounds;
  Eigen::Vector2d phi(b.r_min.x(), b.r_max.x()), omega(b.r_min.y(), b.r_max.y());
  Eigen::Vector2d delta(b.u_min.x(), b.u_max.x()), duty(b.u_min.y(), b.u_max.y());
  bounds.get_pair("phi", phi);
  bounds.get_pair("omega", omega);
  bounds.get_pair("delta", delta);
  bounds.get_pair("d", duty);
  bounds.get_pair("vx", b.vx_range);
  bounds.get_pair("vy", b.vy_range);
  bounds.finish();
  b.r_min = {phi.x(), omega.x()};
  b.r_max = {phi.y(), omega.y()};
  b.u_min = {delta.x(), duty.x()};
  b.u_max = {delta.y(), duty.y()};

  Section planner(root, "planner");
  planner.get("horizon", p.horizon);
  planner.get("Ts", p.Ts);
  planner.get("v_des", p.v_des);
  planner.get("decel_steps", p.decel_steps);
  planner.get("epsilon", p.epsilon);
  planner.get("curvature", p.curvature);
  planner.get("constraint_buffer", p.constraint_buffer);
  planner.get("plant_substeps", p.plant_substeps);
  planner.get("dynamics_substeps", p.dynamics_substeps);
  planner.get("linearization_passes", p.linearization_passes);
  planner.get("pass_tolerance", p.pass_tolerance);
  planner.get("max_backtracks", p.max_backtracks);
  planner.get("polish", p.polish);
  planner.get("max_steps", p.max_steps);
  planner.get("record_timing", p.record_timing);
  planner.get("speed_profile", p.speed_profile);
  planner.get("guided_reference", p.guided_reference);
  planner.get("grip_margin", p.grip_margin);
  planner.get("curvature_window", p.curvature_window);
  planner.finish();

  Section solver(root, "solver");
  auto& s = p.solver;
  solver.get("eta", s.eta);
  solver.get("lambda_init", s.lambda_init);
  solver.get("lambda_factor", s.lambda_factor);
  solver.get("max_iterations", s.max_iterations);
  solver.get("lambda_max", s.lambda_max);
  solver.get("second_order_correction", s.second_order_correction);
  solver.get("diagonal_damping", s.diagonal_damping);
  solver.finish();

  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid planner configuration: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_json(const RunConfig& config) { return config_object(config).dump(2) + "\n"; }

std::uint64_t config_hash(const RunConfig& config) { return fnv1a(config_json(config)); }

track::Track resolve_track(const TrackSource& source) {
  if (!source.file.empty()) return track::load_track(source.file, source.spacing);
  if (!source.left.empty()) return track::load_track(source.left, source.right, source.spacing);
  return track::generate_track(source.generator, source.spacing);
}

std::shared_ptr<const track::SdfGrid> resolve_sdf(const track::Track& track,
                                                  const SdfSettings& settings,
                                                  SdfOrigin* origin) {
  SdfOrigin o;
  o.path = settings.cache;
  if (!settings.cache.empty() && std::filesystem::exists(settings.cache)) {
    auto grid = track::load_sdf(settings.cache);
    if (grid.resolution == settings.resolution) {
      o.source = "loaded";
      if (origin) *origin = o;
      return std::make_shared<const track::SdfGrid>(std::move(grid));
    }
  }
  auto grid = std::make_shared<const track::SdfGrid>(track::build_sdf(track, settings.resolution));
  o.source = "built";
  if (!settings.cache.empty()) {
    track::save_sdf(*grid, settings.cache);
    o.source = "built+cached";
  }
  if (origin) *origin = o;
  return grid;
}

// ---------------------------------------------------------------- lap reports

std::string lap_csv(const planner::LapResult& lap, const planner::PlannerConfig& config) {
  std::string out = "step,t,x,y,vx,vy,phi,omega,delta,d,solve_ms\n";
  for (std::size_t k = 0; k < lap.states.size(); ++k) {
    const auto& s = lap.states[k];
    out += std::to_string(k) + "," + num(double(k) * config.Ts) + "," + num(s.x) + "," +
           num(s.y) + "," + num(s.vx) + "," + num(s.vy) + "," + num(s.phi) + "," +
           num(s.omega);
    if (k < lap.steps.size()) {
      const auto& r = lap.steps[k];
      out += "," + num(r.control.delta) + "," + num(r.control.d) + "," + num(r.solve_ms);
    } else {
      out += ",,,";
    }
    out += "\n";
  }
  return out;
}

std::string lap_report_json(const RunConfig& config, const planner::LapResult& lap,
                            const SdfOrigin& sdf) {
  json steps = json::array();
  for (const auto& r : lap.steps) {
    steps.push_back(json{{"j", r.step},
                         {"t", jnum(r.t)},
                         {"solve_ms", jnum(r.solve_ms)},
                         {"iterations", r.iterations},
                         {"passes", r.passes},
                         {"converged", r.converged},
                         {"delta", jnum(r.control.delta)},
                         {"d", jnum(r.control.d)},
                         {"speed", jnum(std::hypot(r.state.vx, r.state.vy))},
                         {"progress", jnum(r.progress)}});
  }
  json report{{"status", lap.status},
               {"completed", lap.completed},
               {"steps_count", lap.steps.size()},
               {"metrics", metrics_json(lap.metrics)},
               {"track", track_json(lap, config)},
               {"config_hash", hex64(config_hash(config))},
               {"sdf", sdf_json(sdf, config)},
               {"config", config_object(config)},
               {"steps", steps}};
  return report.dump(2) + "\n";
}

std::string lap_svg(const track::Track& track, const planner::LapResult& lap) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto grow = [&](const track::Point& p) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  };
  for (const auto& p : track.left) grow(p);
  for (const auto& p : track.right) grow(p);
  for (const auto& s : lap.states) grow({s.x, s.y});
  const double pad = 0.1;
  xmin -= pad;
  ymin -= pad;
  xmax += pad;
  ymax += pad;
  const double width_px = 900.0;
  const double scale = width_px / (xmax - xmin);
  const double height_px = (ymax - ymin) * scale;
  char buf[160];
  auto px = [&](double x, double y) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", (x - xmin) * scale, (ymax - y) * scale);
    return std::string(buf);
  };
  auto polyline = [&](const track::Polyline& pts, bool closed, const char* style) {
    std::string s = "<polyline fill=\"none\" " + std::string(style) + " points=\"";
    for (const auto& p : pts) s += px(p.x(), p.y()) + " ";
    if (closed && !pts.empty()) s += px(pts.front().x(), pts.front().y());
    return s + "\"/>\n";
  };

  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.2f %.2f\">\n",
                width_px, height_px + 40.0, width_px, height_px + 40.0);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += polyline(track.left, track.closed, "stroke=\"black\" stroke-width=\"2\"");
  svg += polyline(track.right, track.closed, "stroke=\"black\" stroke-width=\"2\"");
  svg += polyline(track.centerline, track.closed,
                  "stroke=\"gray\" stroke-width=\"1\" stroke-dasharray=\"6,4\"");

  double vmin = 1e300, vmax = -1e300;
  for (const auto& s : lap.states) {
    const double v = std::hypot(s.vx, s.vy);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (!(vmax > vmin)) vmax = vmin + 1.0;
  // Blue (slow) to red (fast).
  auto color = [&](double v) {
    const double t = std::clamp((v - vmin) / (vmax - vmin), 0.0, 1.0);
    const int r = int(std::lround(255.0 * t));
    const int g = int(std::lround(80.0 * (1.0 - std::abs(2.0 * t - 1.0))));
    const int b = int(std::lround(255.0 * (1.0 - t)));
    char c[8];
    std::snprintf(c, sizeof c, "#%02x%02x%02x", r, g, b);
    return std::string(c);
  };
  for (std::size_t k = 0; k + 1 < lap.states.size(); ++k) {
    const auto& a = lap.states[k];
    const auto& b = lap.states[k + 1];
    const double v = 0.5 * (std::hypot(a.vx, a.vy) + std::hypot(b.vx, b.vy));
    const std::string pa = px(a.x, a.y), pb = px(b.x, b.y);
    const auto ca = pa.find(','), cb = pb.find(',');
    svg += "<line x1=\"" + pa.substr(0, ca) + "\" y1=\"" + pa.substr(ca + 1) + "\" x2=\"" +
           pb.substr(0, cb) + "\" y2=\"" + pb.substr(cb + 1) + "\" stroke=\"" + color(v) +
           "\" stroke-width=\"3\" stroke-linecap=\"round\"/>\n";
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"10\" y=\"%.2f\" font-family=\"monospace\" font-size=\"14\">speed "
                "%.2f m/s (blue) to %.2f m/s (red), %s</text>\n",
                height_px + 28.0, vmin, vmax, lap.status.c_str());
  svg += buf;
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------- bench

BenchResult run_bench(const RunConfig& config, const track::Track& track,
                      std::shared_ptr<const track::SdfGrid> sdf) {
  planner::PlannerConfig on = config.planner;
  planner::PlannerConfig off = config.planner;
  on.curvature = true;
  off.curvature = false;
  BenchResult out;
  if (worker_count() >= 2) {
    std::thread t([&] { out.disabled = planner::run_lap(off, track, sdf); });
    out.enabled = planner::run_lap(on, track, sdf);
    t.join();
  } else {
    out.enabled = planner::run_lap(on, track, sdf);
    out.disabled = planner::run_lap(off, track, sdf);
  }
  return out;
}

namespace {

const char* const kMetricColumns[] = {"cumulative_curvature", "distance",      "mean_speed",
                                      "max_speed",            "min_speed",     "mean_solve_ms",
                                      "median_solve_ms",      "max_solve_ms",  "min_solve_ms"};

std::vector<double> metric_values(const metrics::LapMetrics& m) {
  return {m.cumulative_curvature, m.distance,        m.mean_speed,
          m.max_speed,            m.min_speed,       m.mean_solve_ms,
          m.median_solve_ms,      m.max_solve_ms,    m.min_solve_ms};
}

std::string row_status(const planner::LapResult& lap) {
  return lap.completed ? "ok" : "failed (" + lap.status + ")";
}

}  // namespace

std::string bench_csv(const RunConfig& config, const BenchResult& bench) {
  std::string out = "run,status,steps";
  for (const char* c : kMetricColumns) out += std::string(",") + c;
  out += ",track_hash,config_hash\n";
  const std::string tail =
      "," + hex64(bench.enabled.track_hash) + "," + hex64(config_hash(config)) + "\n";
  auto row = [&](const char* name, const planner::LapResult& lap) {
    std::string s = std::string(name) + "," + row_status(lap) + "," +
                    std::to_string(lap.steps.size());
    for (double v : metric_values(lap.metrics)) s += "," + num(v);
    return s + tail;
  };
  out += row("curvature_on", bench.enabled);
  out += row("curvature_off", bench.disabled);
  const bool both = bench.enabled.completed && bench.disabled.completed;
  out += std::string("delta,") + (both ? "ok" : "failed") + ",";
  out += both ? std::to_string(long(bench.enabled.steps.size()) -
                               long(bench.disabled.steps.size()))
              : "";
  const auto a = metric_values(bench.enabled.metrics);
  const auto b = metric_values(bench.disabled.metrics);
  for (std::size_t i = 0; i < a.size(); ++i) out += "," + (both ? num(a[i] - b[i]) : "");
  return out + tail;
}

std::string bench_json(const RunConfig& config, const BenchResult& bench, const SdfOrigin& sdf) {
  auto row = [&](const planner::LapResult& lap) {
    return json{{"status", row_status(lap)},
                {"completed", lap.completed},
                {"steps", lap.steps.size()},
                {"metrics", metrics_json(lap.metrics)},
                {"track_hash", hex64(lap.track_hash)},
                {"config_hash", hex64(config_hash(config))}};
  };
  json delta = nullptr;
  json relative = nullptr;
  if (bench.enabled.completed && bench.disabled.completed) {
    delta = json::object();
    relative = json::object();
    const auto a = metric_values(bench.enabled.metrics);
    const auto b = metric_values(bench.disabled.metrics);
    for (std::size_t i = 0; i < a.size(); ++i) {
      delta[kMetricColumns[i]] = jnum(a[i] - b[i]);
      relative[kMetricColumns[i]] = b[i] != 0.0 ? jnum((a[i] - b[i]) / b[i]) : json(nullptr);
    }
  }
  json report{{"curvature_on", row(bench.enabled)},
              {"curvature_off", row(bench.disabled)},
              {"delta", delta},
              {"relative_change", relative},
              {"sdf", sdf_json(sdf, config)},
              {"config", config_object(config)}};
  return report.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace mincurvfg::run
