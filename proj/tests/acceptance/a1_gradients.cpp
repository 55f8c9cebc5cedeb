// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include "acceptance.hpp"
#include "test_util.hpp"
#include "tricity/losses.hpp"

namespace tricity::acceptance {
namespace {

// Enough views that the code group exposes more than 200 entries.
constexpr int kCodes = 28;

struct Setup {
  TriPlaneField field;
  std::vector<Batch> batches;
  MarchConfig march;
  GravityConfig gravity;
};

Setup make_setup(std::uint64_t seed) {
  Setup s;
  s.field = testing::random_field(seed, 16, 4, kCodes);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  s.march.n_samples = 24;
  s.march.depth_valid_threshold = 0.0;
  s.gravity.samples = 64;
  s.gravity.delta_max = 0.8;
  s.gravity.epsilon = 0.05;

  Batch sat;
  sat.kind = ViewKind::Satellite;
  sat.code = 0;
  sat.width = 4;
  sat.height = 4;
  sat.rays = testing::random_rays(s.field, 16, rng);
  sat.rgb = Image(4, 4, 3);
  for (double& v : sat.rgb.data) v = u(rng);
  sat.mask = Image(4, 4, 1, 1.0);
  Image label(4, 4, 1);
  for (double& v : label.data) v = 10.0 * u(rng);
  sat.depth_label = label;
  sat.gravity = sample_gravity_pairs(s.field.extent(), s.gravity, rng);
  s.batches.push_back(sat);

  Batch pano;
  pano.kind = ViewKind::Panorama;
  pano.code = 1;
  pano.width = 16;
  pano.height = 1;
  pano.rays = testing::random_rays(s.field, 16, rng);
  pano.rgb = Image(16, 1, 3);
  for (double& v : pano.rgb.data) v = u(rng);
  pano.mask = Image(16, 1, 1, 1.0);
  Image sky(16, 1, 1);
  for (double& v : sky.data) v = u(rng) < 0.5 ? 1.0 : 0.0;
  pano.sky_mask = sky;
  s.batches.push_back(pano);

  Batch persp = pano;
  persp.kind = ViewKind::Perspective;
  persp.rgb_scale = 0.5;
  persp.sky_mask.reset();
  persp.rays = testing::random_rays(s.field, 16, rng);
  s.batches.push_back(persp);

  for (int code = 3; code < kCodes; ++code) {
    Batch b;
    b.kind = ViewKind::Panorama;
    b.code = code;
    b.width = 2;
    b.height = 1;
    b.rays = testing::random_rays(s.field, 2, rng);
    b.rgb = Image(2, 1, 3);
    for (double& v : b.rgb.data) v = u(rng);
    b.mask = Image(2, 1, 1, 1.0);
    b.sky_mask = Image(2, 1, 1, 1.0);
    s.batches.push_back(b);
  }
  return s;
}

double eval_total(const Setup& s, const LossWeights& w, ParamSet* grads) {
  double total = 0.0;
  for (const Batch& b : s.batches) {
    const LossReport r = evaluate_batch(s.field, b, w, s.gravity, s.march, 0, grads != nullptr);
    total += r.total;
    if (grads) grads->axpy(1.0, r.grads);
  }
  return total;
}

struct GroupResult {
  double max_rel = 0.0;
  int checked = 0;
};

GroupResult check_group(Setup& s, const LossWeights& w, const ParamSet& analytic, ParamGroup g,
                        std::mt19937_64& rng) {
  constexpr double h = 1e-4;
  std::vector<double>& p = s.field.params().group(g);
  const std::vector<double>& a = analytic.group(g);
  std::vector<std::size_t> nonzero, zero;
  for (std::size_t i = 0; i < a.size(); ++i) (std::abs(a[i]) > 1e-10 ? nonzero : zero).push_back(i);
  std::shuffle(nonzero.begin(), nonzero.end(), rng);
  std::shuffle(zero.begin(), zero.end(), rng);
  std::vector<std::size_t> pick(nonzero.begin(), nonzero.begin() + std::min<std::size_t>(200, nonzero.size()));
  for (std::size_t i = 0; pick.size() < std::min<std::size_t>(200, a.size()) && i < zero.size(); ++i)
    pick.push_back(zero[i]);
  GroupResult r;
  for (std::size_t i : pick) {
    const double keep = p[i];
    p[i] = keep + h;
    const double fp = eval_total(s, w, nullptr);
    p[i] = keep - h;
    const double fm = eval_total(s, w, nullptr);
    p[i] = keep;
    const double fd = (fp - fm) / (2 * h);
    const double rel = std::abs(fd - a[i]) / std::max({std::abs(fd), std::abs(a[i]), 1e-6});
    r.max_rel = std::max(r.max_rel, rel);
    ++r.checked;
  }
  return r;
}

}  // namespace

Outcome run_a1(const Options&) {
  struct Case {
    const char* name;
    LossWeights w;
  };
  auto only = [](double rgb, double grav, double sky_op, double sky_l1, double depth) {
    LossWeights w;
    w.rgb = rgb;
    w.grav = grav;
    w.sky_op = sky_op;
    w.sky_l1 = sky_l1;
    w.depth = depth;
    w.grad = 0.5;
    return w;
  };
  const Case cases[] = {{"rgb", only(1, 0, 0, 0, 0)},    {"grav", only(0, 1, 0, 0, 0)},
                        {"sky_op", only(0, 0, 1, 0, 0)}, {"sky_l1", only(0, 0, 0, 1, 0)},
                        {"depth", only(0, 0, 0, 0, 1)},  {"total", LossWeights{}}};
  Setup s = make_setup(11);
  std::mt19937_64 rng(5);
  Outcome out;
  out.pass = true;
  double worst = 0.0;
  int min_checked = 1 << 30;
  std::ostringstream detail;
  for (const Case& c : cases) {
    ParamSet g = s.field.params().zeros_like();
    eval_total(s, c.w, &g);
    for (ParamGroup grp : kAllGroups) {
      const GroupResult r = check_group(s, c.w, g, grp, rng);
      worst = std::max(worst, r.max_rel);
      min_checked = std::min(min_checked, r.checked);
      if (r.max_rel > 1e-3) {
        out.pass = false;
        detail << " " << c.name << "/" << group_name(grp) << "=" << r.max_rel;
      }
    }
  }
  std::ostringstream msg;
  msg << "max_rel_err=" << worst << " (tol 1e-3), min_params_per_group=" << min_checked;
  if (!out.pass) msg << " failing:" << detail.str();
  out.message = msg.str();
  if (min_checked < 200) {
    out.pass = false;
    out.message += " (fewer than 200 parameters checked)";
  }
  return out;
}

}  // namespace tricity::acceptance
