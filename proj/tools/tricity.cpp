// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

// tricity: synthetic data, fitting, rendering, meshing and DSM evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tricity/autodiff.hpp"
#include "tricity/config.hpp"
#include "tricity/geodata.hpp"
#include "tricity/image.hpp"
#include "tricity/meshing.hpp"
#include "tricity/metrics.hpp"
#include "tricity/parallel.hpp"
#include "tricity/renderer.hpp"
#include "tricity/synth.hpp"

namespace fs = std::filesystem;
using namespace tricity;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

Config load_config(const Globals& g) {
  Config c = g.config.empty() ? Config::defaults() : Config::load(g.config);
  if (g.seed) c.fit.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  c.validate();
  set_num_threads(c.threads);
  return c;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

HeightGrid image_channel_to_grid(const Image& img, const Image* valid) {
  HeightGrid g(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g.at(x, y) = valid && valid->at(x, y) < 0.5 ? g.nodata : float(img.at(x, y));
  return g;
}

// --- make-synthetic --------------------------------------------------------

struct SynthArgs {
  std::string scene, out;
  int pano_width = 512, pano_height = 128, sat_size = 256, gt_samples = 2048;
  double pitch_span_deg = 90.0;
};

void cmd_make_synthetic(const Globals& g, const SynthArgs& a) {
  const Config cfg = load_config(g);
  const SceneSpec spec = a.scene.empty() ? default_city_block() : SceneSpec::load(a.scene);
  SupervisionConfig sc;
  sc.pano_width = a.pano_width;
  sc.pano_height = a.pano_height;
  sc.pitch_span = deg2rad(a.pitch_span_deg);
  sc.satellite.width = sc.satellite.height = a.sat_size;
  sc.gt_samples = a.gt_samples;
  sc.seed = cfg.fit.seed;
  const SyntheticDataset ds = generate_supervision(spec, sc);
  write_dataset(ds, a.out);
  std::cout << "wrote " << ds.train.satellites.size() << " satellite and "
            << ds.train.panoramas.size() << " panorama views to " << a.out << "\n";
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
  std::string data, out, log;
  std::optional<int> iterations;
  std::optional<double> lr;
};

void cmd_fit(const Globals& g, const FitArgs& a) {
  Config cfg = load_config(g);
  if (a.iterations) cfg.fit.iterations = *a.iterations;
  if (a.lr) cfg.fit.adam.lr = *a.lr;
  const std::string data = a.data.empty() ? cfg.paths.data_dir : a.data;
  const std::string out = a.out.empty() ? cfg.paths.checkpoint : a.out;
  if (data.empty()) throw ConfigError("fit: no data directory (--data or paths.data_dir)");
  if (out.empty()) throw ConfigError("fit: no output checkpoint (--out or paths.checkpoint)");
  cfg.validate();
  const SyntheticDataset ds = read_dataset(data);

  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw IoError("cannot create " + a.log);
  }
  std::ostream& log = a.log.empty() ? std::cerr : log_file;
  FitCallbacks cb;
  cb.on_log = [&](const FitLogRecord& r) { log << to_ndjson(r) << "\n" << std::flush; };
  cb.divergence_checkpoint = fs::path(out).replace_extension(".diverged.tpf");
  const TriPlaneField field = fit_scene(ds.train, cfg.shape, cfg.extent, cfg.fit, cb, cfg.init);
  field.save(out);
  std::cout << "saved " << out << "\n";
}

// --- render ----------------------------------------------------------------

struct RenderArgs {
  std::string checkpoint, camera, trajectory, out;
  int code = -1;  // -1: mean of all codes
  std::optional<int> samples;
};

void cmd_render(const Globals& g, const RenderArgs& a) {
  const Config cfg = load_config(g);
  const TriPlaneField field = TriPlaneField::load(a.checkpoint);
  std::vector<CameraSpec> cams;
  if (!a.trajectory.empty()) {
    cams = load_trajectory(a.trajectory);
  } else if (!a.camera.empty()) {
    std::ifstream is(a.camera);
    if (!is) throw IoError("cannot open " + a.camera);
    std::stringstream ss;
    ss << is.rdbuf();
    cams.push_back(camera_from_json(ss.str()));
  } else {
    cams = cfg.cameras;
  }
  if (cams.empty()) throw ConfigError("render: no camera (--camera, --trajectory or config cameras)");
  std::vector<double> code;
  if (a.code < 0) {
    code = mean_code(field);
  } else {
    if (a.code >= field.shape().n_codes) throw DomainError("render: code index out of range");
    const auto c = field.code(a.code);
    code.assign(c.begin(), c.end());
  }
  MarchConfig mc = cfg.fit.march;
  mc.jitter = false;
  if (a.samples) mc.n_samples = *a.samples;
  ensure_dir(a.out);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    std::ostringstream stem;
    stem << "frame_" << std::setw(4) << std::setfill('0') << i;
    const fs::path base = fs::path(a.out) / stem.str();
    const RenderOutput r = render_view(field, cams[i], code, mc);
    write_png(r.rgb, base.string() + ".png");
    save_grid(image_channel_to_grid(r.depth, &r.valid), base.string() + ".depth.fgrid");
    if (const auto* o = std::get_if<OrthographicCamera>(&cams[i]))
      save_grid(depth_to_height(r, *o), base.string() + ".height.fgrid");
  }
  std::cout << "rendered " << cams.size() << " frame(s) to " << a.out << "\n";
}

// --- mesh ------------------------------------------------------------------

struct MeshArgs {
  std::vector<std::string> checkpoints;
  std::vector<std::string> offsets;
  std::string out;
  int res = 128;
  double tau = 2.0;
  bool color = true;
};

Vec3 parse_offset(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad offset '" + s + "' (expected x,y[,z])");
    }
  }
  if (v.size() != 2 && v.size() != 3) throw ConfigError("bad offset '" + s + "' (expected x,y[,z])");
  return Vec3(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
}

void cmd_mesh(const Globals& g, const MeshArgs& a) {
  load_config(g);
  if (!a.offsets.empty() && a.offsets.size() != a.checkpoints.size())
    throw ConfigError("mesh: give one --offset per --checkpoint");
  std::vector<TriPlaneField> fields;
  std::vector<Vec3> offsets;
  std::vector<DensityGrid> grids;
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    fields.push_back(TriPlaneField::load(a.checkpoints[i]));
    offsets.push_back(a.offsets.empty() ? Vec3::Zero() : parse_offset(a.offsets[i]));
    grids.push_back(eval_density_grid(fields.back(), a.res, offsets.back()));
  }
  const DensityGrid grid = grids.size() == 1 ? grids[0] : stitch_tiles(grids);
  Mesh mesh = marching_cubes(grid, a.tau);
  if (a.color && !mesh.empty()) {
    // Each vertex takes its color from the tile whose cube center is nearest.
    std::vector<Mesh> parts(fields.size());
    std::vector<std::size_t> owner(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      double best = 1e300;
      for (std::size_t t = 0; t < fields.size(); ++t) {
        const Vec3 c = 0.5 * (fields[t].extent().lo() + fields[t].extent().hi()) + offsets[t];
        const double d = (mesh.vertices[v] - c).squaredNorm();
        if (d < best) best = d, owner[v] = t;
      }
      parts[owner[v]].vertices.push_back(mesh.vertices[v]);
    }
    std::vector<std::size_t> cursor(fields.size(), 0);
    for (std::size_t t = 0; t < fields.size(); ++t)
      colorize(parts[t], fields[t], mean_code(fields[t]), offsets[t]);
    mesh.colors.resize(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
      mesh.colors[v] = parts[owner[v]].colors[cursor[owner[v]]++];
  }
  export_mesh(mesh, a.out);
  std::cout << "wrote " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
            << " triangles to " << a.out << "\n";
}

// --- eval-depth ------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt, out, align = "none";
};

void cmd_eval_depth(const Globals& g, const EvalArgs& a) {
  load_config(g);
  const DepthMetrics m = depth_metrics(load_grid(a.pred), load_grid(a.gt), parse_align(a.align));
  const std::string line = metrics_json(m);
  std::cout << line << "\n";
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!(os << line << "\n")) throw IoError("cannot write " + a.out);
  }
}

// --- prep-dsm --------------------------------------------------------------

struct PrepArgs {
  std::string images, tiles, out;
  double threshold = 5.0;
  bool mosaic = false;
};

std::vector<fs::path> sorted_files(const fs::path& dir, std::initializer_list<const char*> exts) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
    for (const char* x : exts)
      if (ext == x) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void cmd_prep_dsm(const Globals& g, const PrepArgs& a) {
  load_config(g);
  std::vector<ImageFootprintMeta> images;
  for (const fs::path& p : sorted_files(a.images, {".png"})) {
    auto meta = parse_image_name(p.filename().string());
    if (!meta) {
      std::cerr << "skipping " << p.filename().string() << ": name is not <lat>_<lon>_z<zoom>\n";
      continue;
    }
    const Image img = read_png(p);
    meta->width = img.width;
    meta->height = img.height;
    images.push_back(*meta);
  }
  PrepareOptions opts;
  opts.nan_threshold_pct = a.threshold;
  opts.mosaic = a.mosaic;
  const auto results = prepare_dsm(images, sorted_files(a.tiles, {".tif", ".tiff", ".asc", ".fgrid"}), opts);
  ensure_dir(a.out);
  std::ofstream manifest(fs::path(a.out) / "manifest.txt");
  if (!manifest) throw IoError("cannot create manifest in " + a.out);
  int accepted = 0;
  for (const PrepareResult& r : results) {
    if (r.dsm) {
      write_geotiff(*r.dsm, fs::path(a.out) / (r.name + ".dsm.tif"));
      ++accepted;
    }
    manifest << r.name << '\t' << status_name(r.status) << '\t' << std::fixed << std::setprecision(3)
             << r.nan_percent << '\t' << (r.tile.empty() ? "-" : fs::path(r.tile).filename().string())
             << '\t' << (r.message.empty() ? "-" : r.message) << '\n';
  }
  std::cout << accepted << " of " << results.size() << " images accepted; manifest in " << a.out
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tricity: tri-plane city fields from satellite and street views"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed (overrides config)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = logical cores")->check(CLI::NonNegativeNumber);

  SynthArgs sa;
  auto* synth = app.add_subcommand("make-synthetic", "Render a supervision set from an analytic scene");
  synth->add_option("--scene", sa.scene, "Scene spec JSON (default: built-in city block)");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--pano-width", sa.pano_width, "Panorama width")->capture_default_str();
  synth->add_option("--pano-height", sa.pano_height, "Panorama height")->capture_default_str();
  synth->add_option("--pano-pitch-span", sa.pitch_span_deg, "Panorama vertical span in degrees")
      ->capture_default_str();
  synth->add_option("--sat-size", sa.sat_size, "Satellite image size")->capture_default_str();
  synth->add_option("--gt-samples", sa.gt_samples, "Samples per ray for ground truth")
      ->capture_default_str();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a tri-plane field to a supervision set");
  fit->add_option("--data", fa.data, "Supervision directory");
  fit->add_option("--out", fa.out, "Output checkpoint (.tpf)");
  fit->add_option("--log", fa.log, "NDJSON training log (default: stderr)");
  fit->add_option("--iterations", fa.iterations, "Adam iterations");
  fit->add_option("--lr", fa.lr, "Learning rate");

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render images and depth from a checkpoint");
  render->add_option("--checkpoint", ra.checkpoint, "Field checkpoint")->required();
  auto* cam_opt = render->add_option("--camera", ra.camera, "Camera JSON file");
  render->add_option("--trajectory", ra.trajectory, "Trajectory JSON file")->excludes(cam_opt);
  render->add_option("--out", ra.out, "Output directory")->required();
  render->add_option("--code", ra.code, "Illumination code index (-1 = mean)")->capture_default_str();
  render->add_option("--samples", ra.samples, "Samples per ray");

  MeshArgs ma;
  auto* mesh = app.add_subcommand("mesh", "Extract a marching-cubes mesh");
  mesh->add_option("--checkpoint", ma.checkpoints, "Field checkpoint(s); several are stitched")
      ->required();
  mesh->add_option("--offset", ma.offsets, "World offset x,y[,z] per checkpoint");
  mesh->add_option("--res", ma.res, "Grid resolution per tile")->capture_default_str();
  mesh->add_option("--tau", ma.tau, "Density isovalue")->capture_default_str();
  mesh->add_flag("!--no-color", ma.color, "Skip vertex colors");
  mesh->add_option("--out", ma.out, "Output .obj or .ply")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval-depth", "Compare a predicted height grid with a DSM");
  eval->add_option("--pred", ea.pred, "Predicted height grid")->required();
  eval->add_option("--gt", ea.gt, "Reference DSM")->required();
  eval->add_option("--align", ea.align, "none or median")->capture_default_str();
  eval->add_option("--out", ea.out, "Also write the JSON record here");

  PrepArgs pa;
  auto* prep = app.add_subcommand("prep-dsm", "Align DSM tiles to satellite images");
  prep->add_option("--images", pa.images, "Directory of <lat>_<lon>_z<zoom>.png images")->required();
  prep->add_option("--tiles", pa.tiles, "Directory of DSM tiles")->required();
  prep->add_option("--out", pa.out, "Output directory")->required();
  prep->add_option("--nan-threshold", pa.threshold, "Max nodata percent")->capture_default_str();
  prep->add_flag("--mosaic", pa.mosaic, "Fill gaps from other overlapping tiles");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) cmd_make_synthetic(g, sa);
    else if (*fit) cmd_fit(g, fa);
    else if (*render) cmd_render(g, ra);
    else if (*mesh) cmd_mesh(g, ma);
    else if (*eval) cmd_eval_depth(g, ea);
    else if (*prep) cmd_prep_dsm(g, pa);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
