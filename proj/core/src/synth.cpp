// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tricity {

using nlohmann::json;

bool Primitive::contains(const Vec3& x) const {
  switch (kind) {
    case PrimitiveKind::Slab: return x.z() <= z_top;
    case PrimitiveKind::Box: return ((x - center).cwiseAbs().array() <= 0.5 * size.array()).all();
    case PrimitiveKind::Cylinder: {
      const double dx = x.x() - center.x(), dy = x.y() - center.y();
      return dx * dx + dy * dy <= radius * radius && x.z() >= z0 && x.z() <= z1;
    }
    case PrimitiveKind::Sphere: return (x - center).squaredNorm() <= radius * radius;
  }
  return false;
}

double Primitive::top() const {
  switch (kind) {
    case PrimitiveKind::Slab: return z_top;
    case PrimitiveKind::Box: return center.z() + 0.5 * size.z();
    case PrimitiveKind::Cylinder: return z1;
    case PrimitiveKind::Sphere: return center.z() + radius;
  }
  return 0.0;
}

std::optional<std::pair<double, double>> Primitive::intersect(const Vec3& o, const Vec3& d,
                                                              const Vec3& world_lo) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto slab_axis = [&](double oa, double da, double lo, double hi, double& t0, double& t1) {
    if (da == 0.0) return oa >= lo && oa <= hi;
    double a = (lo - oa) / da, b = (hi - oa) / da;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    return t0 <= t1;
  };
  double t0 = -inf, t1 = inf;
  switch (kind) {
    case PrimitiveKind::Slab:
      if (!slab_axis(o.z(), d.z(), world_lo.z(), z_top, t0, t1)) return std::nullopt;
      break;
    case PrimitiveKind::Box: {
      const Vec3 lo = center - 0.5 * size, hi = center + 0.5 * size;
      for (int a = 0; a < 3; ++a)
        if (!slab_axis(o[a], d[a], lo[a], hi[a], t0, t1)) return std::nullopt;
      break;
    }
    case PrimitiveKind::Cylinder: {
      if (!slab_axis(o.z(), d.z(), z0, z1, t0, t1)) return std::nullopt;
      const double ox = o.x() - center.x(), oy = o.y() - center.y();
      const double a = d.x() * d.x() + d.y() * d.y();
      const double b = 2.0 * (ox * d.x() + oy * d.y());
      const double c = ox * ox + oy * oy - radius * radius;
      if (a == 0.0) {
        if (c > 0.0) return std::nullopt;
      } else {
        const double disc = b * b - 4 * a * c;
        if (disc < 0.0) return std::nullopt;
        const double s = std::sqrt(disc);
        t0 = std::max(t0, (-b - s) / (2 * a));
        t1 = std::min(t1, (-b + s) / (2 * a));
        if (t0 > t1) return std::nullopt;
      }
      break;
    }
    case PrimitiveKind::Sphere: {
      const Vec3 oc = o - center;
      const double b = oc.dot(d), c = oc.squaredNorm() - radius * radius, a = d.squaredNorm();
      const double disc = b * b - a * c;
      if (disc < 0.0) return std::nullopt;
      const double s = std::sqrt(disc);
      t0 = (-b - s) / a;
      t1 = (-b + s) / a;
      break;
    }
  }
  return std::make_pair(t0, t1);
}

std::array<double, 3> SkyModel::color(const Vec3& dir) const {
  const Vec3 d = dir.normalized();
  const double t = std::clamp(d.z(), 0.0, 1.0);
  const double tint = azimuth_tint * std::cos(std::atan2(d.y(), d.x()));
  std::array<double, 3> c;
  for (int i = 0; i < 3; ++i)
    c[i] = std::clamp(horizon[i] + (zenith[i] - horizon[i]) * std::sqrt(t) + tint, 0.0, 1.0);
  return c;
}

void SceneSpec::validate() const {
  world.validate();
  const Vec3 lo = world.lo(), hi = world.hi();
  for (const auto& p : primitives) {
    if (!(p.sigma > 0.0)) throw ConfigError("primitive '" + p.name + "': sigma must be > 0");
    for (double c : p.rgb)
      if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("primitive '" + p.name + "': rgb outside [0,1]");
    if (p.kind == PrimitiveKind::Box && (p.size.array() <= 0.0).any())
      throw ConfigError("primitive '" + p.name + "': box size must be positive");
    if ((p.kind == PrimitiveKind::Cylinder || p.kind == PrimitiveKind::Sphere) && !(p.radius > 0.0))
      throw ConfigError("primitive '" + p.name + "': radius must be positive");
    if (p.kind == PrimitiveKind::Cylinder && !(p.z1 > p.z0))
      throw ConfigError("primitive '" + p.name + "': cylinder z range is empty");
    if (p.top() > hi.z() || (p.kind != PrimitiveKind::Slab && p.top() < lo.z()))
      throw ConfigError("primitive '" + p.name + "' lies outside the world cube");
  }
}

double SceneSpec::density(const Vec3& x) const {
  if (!world.contains(x)) return 0.0;
  double s = 0.0;
  for (const auto& p : primitives)
    if (p.sigma > s && p.contains(x)) s = p.sigma;
  return s;
}

std::array<double, 3> SceneSpec::color(const Vec3& x) const {
  double s = 0.0;
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (const auto& p : primitives)
    if (p.sigma > s && p.contains(x)) {
      s = p.sigma;
      c = p.rgb;
    }
  return c;
}

double SceneSpec::tallest(double sigma_min) const {
  double t = world.z_min;
  for (const auto& p : primitives)
    if (p.sigma >= sigma_min) t = std::max(t, p.top());
  return t;
}

std::optional<double> analytic_depth(const SceneSpec& spec, const Ray& ray) {
  const Vec3 lo = spec.world.lo(), hi = spec.world.hi();
  const auto seg = clip_to_box(ray.origin, ray.direction, lo, hi);
  if (!seg) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : spec.primitives) {
    const auto iv = p.intersect(ray.origin, ray.direction, lo);
    if (!iv) continue;
    const double a = std::max(iv->first, seg->first);
    const double b = std::min(iv->second, seg->second);
    if (a <= b && a < best) best = a;
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

namespace {

std::string kind_name(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Slab: return "slab";
    case PrimitiveKind::Box: return "box";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Sphere: return "sphere";
  }
  return "?";
}

PrimitiveKind parse_kind(const std::string& s) {
  if (s == "slab") return PrimitiveKind::Slab;
  if (s == "box") return PrimitiveKind::Box;
  if (s == "cylinder") return PrimitiveKind::Cylinder;
  if (s == "sphere") return PrimitiveKind::Sphere;
  throw ConfigError("unknown primitive type '" + s + "'");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok |= it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <std::size_t N>
std::array<double, N> arr(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N)
    throw ConfigError(what + " must be an array of " + std::to_string(N) + " numbers");
  std::array<double, N> a;
  for (std::size_t i = 0; i < N; ++i) a[i] = j[i].get<double>();
  return a;
}

Vec3 vec3(const json& j, const std::string& what) {
  const auto a = arr<3>(j, what);
  return Vec3(a[0], a[1], a[2]);
}

json to_j(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

SceneSpec SceneSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene spec: ") + e.what());
  }
  try {
    check_keys(j, {"world", "primitives", "sky"}, "scene spec");
    SceneSpec s;
    if (j.contains("world")) {
      const json& w = j["world"];
      check_keys(w, {"base_side", "token_grid", "pad_tokens", "z_min"}, "world");
      s.world.base_side = w.value("base_side", s.world.base_side);
      s.world.token_grid = w.value("token_grid", s.world.token_grid);
      s.world.pad_tokens = w.value("pad_tokens", s.world.pad_tokens);
      s.world.z_min = w.value("z_min", s.world.z_min);
    }
    if (j.contains("sky")) {
      const json& k = j["sky"];
      check_keys(k, {"zenith", "horizon", "azimuth_tint"}, "sky");
      if (k.contains("zenith")) s.sky.zenith = arr<3>(k["zenith"], "sky.zenith");
      if (k.contains("horizon")) s.sky.horizon = arr<3>(k["horizon"], "sky.horizon");
      s.sky.azimuth_tint = k.value("azimuth_tint", s.sky.azimuth_tint);
    }
    for (const json& pj : j.value("primitives", json::array())) {
      check_keys(pj, {"type", "name", "center", "size", "radius", "z_range", "z_top", "sigma", "rgb"},
                 "primitive");
      Primitive p;
      p.kind = parse_kind(pj.at("type").get<std::string>());
      p.name = pj.value("name", kind_name(p.kind));
      p.sigma = pj.value("sigma", p.sigma);
      if (pj.contains("rgb")) p.rgb = arr<3>(pj["rgb"], "rgb");
      switch (p.kind) {
        case PrimitiveKind::Slab: p.z_top = pj.at("z_top").get<double>(); break;
        case PrimitiveKind::Box:
          p.center = vec3(pj.at("center"), "center");
          p.size = vec3(pj.at("size"), "size");
          break;
        case PrimitiveKind::Cylinder: {
          const auto c = arr<2>(pj.at("center"), "cylinder center");
          p.center = Vec3(c[0], c[1], 0.0);
          p.radius = pj.at("radius").get<double>();
          const auto z = arr<2>(pj.at("z_range"), "z_range");
          p.z0 = z[0];
          p.z1 = z[1];
          break;
        }
        case PrimitiveKind::Sphere:
          p.center = vec3(pj.at("center"), "center");
          p.radius = pj.at("radius").get<double>();
          break;
      }
      s.primitives.push_back(p);
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene spec: ") + e.what());
  }
}

std::string SceneSpec::to_json() const {
  json j;
  j["world"] = {{"base_side", world.base_side},
                {"token_grid", world.token_grid},
                {"pad_tokens", world.pad_tokens},
                {"z_min", world.z_min}};
  j["sky"] = {{"zenith", sky.zenith}, {"horizon", sky.horizon}, {"azimuth_tint", sky.azimuth_tint}};
  json prims = json::array();
  for (const auto& p : primitives) {
    json pj;
    pj["type"] = kind_name(p.kind);
    pj["name"] = p.name;
    pj["sigma"] = p.sigma;
    pj["rgb"] = p.rgb;
    switch (p.kind) {
      case PrimitiveKind::Slab: pj["z_top"] = p.z_top; break;
      case PrimitiveKind::Box: pj["center"] = to_j(p.center); pj["size"] = to_j(p.size); break;
      case PrimitiveKind::Cylinder:
        pj["center"] = {p.center.x(), p.center.y()};
        pj["radius"] = p.radius;
        pj["z_range"] = {p.z0, p.z1};
        break;
      case PrimitiveKind::Sphere: pj["center"] = to_j(p.center); pj["radius"] = p.radius; break;
    }
    prims.push_back(pj);
  }
  j["primitives"] = prims;
  return j.dump(2);
}

SceneSpec SceneSpec::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

void SceneSpec::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot create " + path.string());
  os << to_json() << '\n';
}

SceneSpec default_city_block() {
  SceneSpec s;
  auto box = [](std::string name, Vec3 c, Vec3 size, std::array<double, 3> rgb) {
    Primitive p;
    p.kind = PrimitiveKind::Box;
    p.name = std::move(name);
    p.center = c;
    p.size = size;
    p.rgb = rgb;
    return p;
  };
  Primitive ground;
  ground.kind = PrimitiveKind::Slab;
  ground.name = "ground";
  ground.z_top = 0.0;
  ground.rgb = {0.42, 0.45, 0.40};
  s.primitives.push_back(ground);
  // Flush ground patches so the overhead view is textured. Density sits a
  // little above the slab's so their color wins, but the step stays below 1.
  auto patch = [&](std::string name, Vec3 c, Vec3 size, std::array<double, 3> rgb) {
    Primitive p = box(std::move(name), c, size, rgb);
    p.sigma = 45.5;
    return p;
  };
  s.primitives.push_back(patch("road_ew", {0, -1, -0.5}, {62.5, 6, 1}, {0.30, 0.30, 0.33}));
  s.primitives.push_back(patch("road_ns", {0.5, 0, -0.5}, {5, 62.5, 1}, {0.32, 0.31, 0.33}));
  s.primitives.push_back(patch("park", {19, 20, -0.5}, {16, 14, 1}, {0.33, 0.52, 0.28}));
  s.primitives.push_back(patch("lawn", {-22, 22, -0.5}, {12, 14, 1}, {0.38, 0.55, 0.33}));
  s.primitives.push_back(patch("plaza", {20, -25, -0.5}, {18, 10, 1}, {0.62, 0.58, 0.52}));
  s.primitives.push_back(patch("yard", {-24, -24, -0.5}, {10, 12, 1}, {0.52, 0.46, 0.38}));
  s.primitives.push_back(box("hall", {-12, -10, 6}, {12, 10, 12}, {0.75, 0.62, 0.50}));
  s.primitives.push_back(box("shop", {10, -12, 4}, {14, 8, 8}, {0.55, 0.60, 0.72}));
  s.primitives.push_back(box("flats", {-10, 12, 5}, {8, 12, 10}, {0.70, 0.70, 0.66}));
  Primitive tower;
  tower.kind = PrimitiveKind::Cylinder;
  tower.name = "tower";
  tower.center = {14, 10, 0};
  tower.radius = 3.0;
  tower.z0 = 0.0;
  tower.z1 = 14.0;
  tower.rgb = {0.62, 0.50, 0.58};
  s.primitives.push_back(tower);
  Primitive trunk;
  trunk.kind = PrimitiveKind::Cylinder;
  trunk.name = "trunk";
  trunk.center = {5.8, 4.0, 0};
  trunk.radius = 0.5;
  trunk.z0 = 0.0;
  trunk.z1 = 4.5;
  trunk.rgb = {0.40, 0.30, 0.22};
  s.primitives.push_back(trunk);
  Primitive canopy;
  canopy.kind = PrimitiveKind::Sphere;
  canopy.name = "canopy";
  canopy.center = {4.0, 4.0, 6.5};
  canopy.radius = 2.5;
  canopy.sigma = 0.9;
  canopy.rgb = {0.30, 0.52, 0.28};
  s.primitives.push_back(canopy);
  s.validate();
  return s;
}

HeightGrid analytic_height(const SceneSpec& spec, const OrthographicCamera& cam) {
  HeightGrid g(cam.width, cam.height);
  g.crs = Crs::Local;
  g.geotransform = {cam.center.x() - 0.5 * cam.extent, cam.extent / cam.width, 0.0,
                    cam.center.y() + 0.5 * cam.extent, 0.0, -cam.extent / cam.height};
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const Ray r = ray_at(cam, x + 0.5, y + 0.5);
      const auto t = analytic_depth(spec, r);
      g.at(x, y) = t ? static_cast<float>(cam.altitude - *t) : g.nodata;
    }
  return g;
}

namespace {

PanoramaView render_pano(const SceneSpec& spec, const PanoramaCamera& cam, const MarchConfig& m) {
  PanoramaView v;
  v.camera = cam;
  const AnalyticMedium med{&spec};
  v.rgb = render_medium(med, cam, spec.world.lo(), spec.world.hi(), m).rgb;
  Image sky(cam.width, cam.height, 1);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      sky.at(x, y) = analytic_depth(spec, ray_at(cam, x + 0.5, y + 0.5)) ? 0.0 : 1.0;
  v.sky_mask = std::move(sky);
  return v;
}

}  // namespace

SyntheticDataset generate_supervision(const SceneSpec& spec, const SupervisionConfig& cfg) {
  spec.validate();
  SyntheticDataset ds;
  ds.spec = spec;
  MarchConfig m;
  m.n_samples = cfg.gt_samples;
  const AnalyticMedium med{&spec};

  SatelliteView sat;
  sat.camera = cfg.satellite;
  sat.rgb = render_medium(med, sat.camera, spec.world.lo(), spec.world.hi(), m).rgb;
  Image label(sat.camera.width, sat.camera.height, 1);
  for (int y = 0; y < sat.camera.height; ++y)
    for (int x = 0; x < sat.camera.width; ++x) {
      const auto t = analytic_depth(spec, ray_at(sat.camera, x + 0.5, y + 0.5));
      label.at(x, y) = t ? 2.0 * *t + 5.0 : std::numeric_limits<double>::quiet_NaN();
    }
  sat.depth_label = std::move(label);
  ds.train.satellites.push_back(std::move(sat));
  ds.train_height = analytic_height(spec, cfg.satellite);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> heading(-kPi, kPi);
  auto pano_cam = [&](const Vec3& pos) {
    PanoramaCamera c;
    c.pose.position = pos;
    c.pose.yaw = heading(rng);
    c.width = cfg.pano_width;
    c.height = cfg.pano_height;
    c.pitch_span = cfg.pitch_span;
    return c;
  };
  for (const Vec3& p : cfg.panorama_positions)
    ds.train.panoramas.push_back(render_pano(spec, pano_cam(p), m));
  ds.heldout_pano = render_pano(spec, pano_cam(cfg.heldout_position), m);

  ds.heldout_sat = cfg.satellite;
  ds.heldout_sat.width = ds.heldout_sat.height = cfg.heldout_sat_size;
  ds.heldout_height = analytic_height(spec, ds.heldout_sat);
  return ds;
}

namespace {

json ortho_json(const OrthographicCamera& c) {
  return {{"center", {c.center.x(), c.center.y()}}, {"extent", c.extent}, {"altitude", c.altitude},
          {"width", c.width}, {"height", c.height}};
}

OrthographicCamera ortho_from(const json& j) {
  OrthographicCamera c;
  c.center = Vec2(j.at("center")[0].get<double>(), j.at("center")[1].get<double>());
  c.extent = j.at("extent");
  c.altitude = j.at("altitude");
  c.width = j.at("width");
  c.height = j.at("height");
  return c;
}

json pano_json(const PanoramaCamera& c) {
  return {{"position", to_j(c.pose.position)}, {"yaw", c.pose.yaw}, {"pitch", c.pose.pitch},
          {"roll", c.pose.roll}, {"yaw_span", c.yaw_span}, {"pitch_span", c.pitch_span},
          {"width", c.width}, {"height", c.height}};
}

PanoramaCamera pano_from(const json& j) {
  PanoramaCamera c;
  c.pose.position = vec3(j.at("position"), "position");
  c.pose.yaw = j.at("yaw");
  c.pose.pitch = j.at("pitch");
  c.pose.roll = j.at("roll");
  c.yaw_span = j.at("yaw_span");
  c.pitch_span = j.at("pitch_span");
  c.width = j.at("width");
  c.height = j.at("height");
  return c;
}

HeightGrid image_to_grid(const Image& im) {
  HeightGrid g(im.width, im.height);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = static_cast<float>(im.data[i]);
  return g;
}

Image grid_to_image(const HeightGrid& g) {
  Image im(g.width, g.height, 1);
  for (std::size_t i = 0; i < g.values.size(); ++i)
    im.data[i] = g.is_nodata(g.values[i]) ? std::numeric_limits<double>::quiet_NaN() : g.values[i];
  return im;
}

}  // namespace

void write_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json man;
  man["format"] = "tricity-dataset-1";
  ds.spec.save(dir / "scene.json");
  json sats = json::array();
  for (std::size_t i = 0; i < ds.train.satellites.size(); ++i) {
    const auto& s = ds.train.satellites[i];
    const std::string stem = "sat_" + std::to_string(i);
    write_png(s.rgb, dir / (stem + ".png"));
    json e = {{"camera", ortho_json(s.camera)}, {"rgb", stem + ".png"}};
    if (s.depth_label) {
      save_grid(image_to_grid(*s.depth_label), dir / (stem + ".depth.fgrid"));
      e["depth"] = stem + ".depth.fgrid";
    }
    sats.push_back(e);
  }
  man["satellites"] = sats;
  auto pano_entry = [&](const PanoramaView& p, const std::string& stem) {
    write_png(p.rgb, dir / (stem + ".png"));
    json e = {{"camera", pano_json(p.camera)}, {"rgb", stem + ".png"}};
    if (p.sky_mask) {
      write_png(*p.sky_mask, dir / (stem + ".sky.png"));
      e["sky"] = stem + ".sky.png";
    }
    return e;
  };
  json panos = json::array();
  for (std::size_t i = 0; i < ds.train.panoramas.size(); ++i)
    panos.push_back(pano_entry(ds.train.panoramas[i], "pano_" + std::to_string(i)));
  man["panoramas"] = panos;
  man["heldout_panorama"] = pano_entry(ds.heldout_pano, "heldout_pano");
  save_grid(ds.heldout_height, dir / "heldout_height.fgrid");
  save_grid(ds.train_height, dir / "sat_0.height.fgrid");
  man["heldout_satellite"] = {{"camera", ortho_json(ds.heldout_sat)}, {"height", "heldout_height.fgrid"}};
  man["train_height"] = "sat_0.height.fgrid";
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot create manifest in " + dir.string());
  os << man.dump(2) << '\n';
}

SyntheticDataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("no manifest.json in " + dir.string());
  json man;
  try {
    man = json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  try {
    SyntheticDataset ds;
    ds.spec = SceneSpec::load(dir / "scene.json");
    for (const json& e : man.at("satellites")) {
      SatelliteView s;
      s.camera = ortho_from(e.at("camera"));
      s.rgb = read_png(dir / e.at("rgb").get<std::string>());
      if (e.contains("depth")) s.depth_label = grid_to_image(load_grid(dir / e["depth"].get<std::string>()));
      ds.train.satellites.push_back(std::move(s));
    }
    auto pano = [&](const json& e) {
      PanoramaView p;
      p.camera = pano_from(e.at("camera"));
      p.rgb = read_png(dir / e.at("rgb").get<std::string>());
      if (e.contains("sky")) p.sky_mask = read_png(dir / e["sky"].get<std::string>());
      return p;
    };
    for (const json& e : man.at("panoramas")) ds.train.panoramas.push_back(pano(e));
    if (man.contains("heldout_panorama")) ds.heldout_pano = pano(man["heldout_panorama"]);
    if (man.contains("heldout_satellite")) {
      ds.heldout_sat = ortho_from(man["heldout_satellite"].at("camera"));
      ds.heldout_height = load_grid(dir / man["heldout_satellite"].at("height").get<std::string>());
    }
    if (man.contains("train_height")) ds.train_height = load_grid(dir / man["train_height"].get<std::string>());
    return ds;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

}  // namespace tricity
