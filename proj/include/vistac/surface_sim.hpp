#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vistac/common.hpp"
#include "vistac/image.hpp"
#include "vistac/rng.hpp"

namespace vistac::sim {

enum class FeatureKind : int {
  CableSpline = 0,
  Seam,
  Knot,
  Button,
  Zipper,
  TowelEdge,
  TowelCorner,
  EmbeddedLump,
  Ruffle,
  Wrinkle,
};

inline constexpr int kNumFeatureKinds = 10;

inline const char* feature_kind_name(FeatureKind k) {
  static const char* names[kNumFeatureKinds] = {
      "cable_spline", "seam",        "knot",          "button", "zipper",
      "towel_edge",   "towel_corner", "embedded_lump", "ruffle", "wrinkle"};
  return names[int(k)];
}

inline FeatureKind feature_kind_from_name(const std::string& name) {
  for (int i = 0; i < kNumFeatureKinds; ++i)
    if (name == feature_kind_name(FeatureKind(i))) return FeatureKind(i);
  throw std::invalid_argument("unknown feature kind: " + name);
}

struct FeatureSpec {
  FeatureKind kind = FeatureKind::CableSpline;
  std::vector<Vec2> points;     // control points / spine / center (meters)
  double width = 0.004;         // cross-section width (m)
  double amplitude = 0.002;     // relief height (m)
  double burial_depth = 0.0;    // embedded_lump only (m), must be > 0 there
  double stiffness_scale = 1.0; // dimensionless
  double albedo_delta = -0.1;   // signed albedo mark strength
  double pitch = 0.004;         // tooth/dash/ridge pitch (m) for periodic kinds
  double region_depth = 0.05;   // towel extent behind the hem (m)
};

struct SceneConfig {
  double extent_x = 0.3;   // meters
  double extent_y = 0.3;   // meters
  double resolution = 0.0005; // meters per cell
  double tactile_fov = 0.025; // sensor image side length (m)

  // base cloth texture (octave value noise)
  double base_relief_amp = 0.0006;   // meters
  double texture_scale_min = 0.004;  // dominant wavelength range (m)
  double texture_scale_max = 0.009;
  double albedo_contrast_min = 0.18;
  double albedo_contrast_max = 0.42;

  // visual shading: fixed world-frame light, Lambertian on height slope
  double visual_light_angle = 2.2;  // radians
  double visual_shade_gain = 0.9;

  // tactile shading: three world-frame lights 120 deg apart, one per channel
  double tactile_light_angle0 = 0.5;
  double tactile_shade_gain = 1.1;
  double tactile_depth_gain = 0.25;
  double indentation_cap = 0.003;  // meters, saturates the depth term
  double gel_sigma = 0.0008;       // membrane low-pass on the felt relief (m)
  std::array<double, 3> tactile_background = {0.35, 0.45, 0.55};

  // contact model: force = force_gain * displaced effective volume
  double force_gain = 3.4e6;   // N / m^3
  double max_press_travel = 0.015;  // meters
  double target_force = 20.0;  // newtons

  // requested random features per kind (indexed by FeatureKind)
  std::array<int, kNumFeatureKinds> feature_counts = {};
  // explicitly placed features (rasterized before the random ones)
  std::vector<FeatureSpec> explicit_features;

  double area() const { return extent_x * extent_y; }
};

// Dense 2.5-D scene: visible surface relief + albedo drive the visual
// render; the stiffness-weighted effective relief drives the tactile
// render and the contact force. Buried lumps enter only the latter.
struct SurfaceScene {
  std::uint64_t seed = 0;
  SceneConfig config;
  int nx = 0;  // cells along x
  int ny = 0;  // cells along y

  std::vector<float> height;          // visible relief (m), in [0, 0.01]
  std::vector<float> albedo;          // grayscale reflectance in [0, 1]
  std::vector<float> tactile_relief;  // stiffness-weighted relief (m)
  std::vector<float> shaded;          // precomputed shaded visual field
  std::vector<float> grad_x, grad_y;  // slope of tactile_relief (dimensionless)
  std::vector<std::uint16_t> feature_id;  // 0 = none, else feature index + 1
  std::vector<FeatureSpec> features;
  std::vector<std::vector<Vec2>> feature_spines;  // dense polylines, arclength order
  double footprint_fraction = 0.0;

  std::size_t idx(int ix, int iy) const {
    return std::size_t(iy) * std::size_t(nx) + std::size_t(ix);
  }
  bool in_extent(Vec2 p) const {
    return p.x >= 0.0 && p.x <= config.extent_x && p.y >= 0.0 &&
           p.y <= config.extent_y;
  }
  Vec2 cell_center(int ix, int iy) const {
    return {(ix + 0.5) * config.resolution, (iy + 0.5) * config.resolution};
  }

  // bilinear sample over cell centers; `border` outside the extent
  float sample(const std::vector<float>& field, Vec2 p, float border) const {
    const double gx = p.x / config.resolution - 0.5;
    const double gy = p.y / config.resolution - 0.5;
    const int x0 = int(std::floor(gx)), y0 = int(std::floor(gy));
    const double fx = gx - x0, fy = gy - y0;
    auto fetch = [&](int ix, int iy) -> float {
      if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return border;
      return field[idx(ix, iy)];
    };
    const double v00 = fetch(x0, y0), v10 = fetch(x0 + 1, y0);
    const double v01 = fetch(x0, y0 + 1), v11 = fetch(x0 + 1, y0 + 1);
    const double bottom = v00 * (1 - fx) + v10 * fx;
    const double top = v01 * (1 - fx) + v11 * fx;
    return float(bottom * (1 - fy) + top * fy);
  }
};

struct VisualPatch {
  Image pixels;  // H x W x 1
  double fov = 0.0;
  Pose2D pose;
  bool padded = false;
};

struct TactilePatch {
  Image pixels;  // H x W x 3
  double fov = 0.0;
  Pose2D pose;
  double contact_force = 0.0;
  double press_depth = 0.0;
  bool padded = false;
};

namespace detail {

inline double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

inline double lattice_hash01(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t s = seed ^ (std::uint64_t(ix) * 0x9e3779b97f4a7c15ull) ^
                    (std::uint64_t(iy) * 0xc2b2ae3d27d4eb4full);
  return double(splitmix64(s) >> 11) * 0x1.0p-53;
}

inline double value_noise(std::uint64_t seed, double x, double y,
                          double wavelength) {
  const double gx = x / wavelength, gy = y / wavelength;
  const std::int64_t x0 = std::int64_t(std::floor(gx));
  const std::int64_t y0 = std::int64_t(std::floor(gy));
  const double fx = smoothstep(gx - double(x0));
  const double fy = smoothstep(gy - double(y0));
  const double v00 = lattice_hash01(seed, x0, y0);
  const double v10 = lattice_hash01(seed, x0 + 1, y0);
  const double v01 = lattice_hash01(seed, x0, y0 + 1);
  const double v11 = lattice_hash01(seed, x0 + 1, y0 + 1);
  return (v00 * (1 - fx) + v10 * fx) * (1 - fy) +
         (v01 * (1 - fx) + v11 * fx) * fy;
}

// three octaves, band-limited so the finest wavelength stays resolvable
inline double octave_noise(std::uint64_t seed, double x, double y, double scale,
                           double min_wavelength) {
  double sum = 0.0, norm = 0.0, amp = 1.0, wl = scale;
  for (int k = 0; k < 3; ++k) {
    if (wl < min_wavelength) break;
    sum += amp * value_noise(seed + std::uint64_t(k) * 0x51ull, x, y, wl);
    norm += amp;
    amp *= 0.5;
    wl *= 0.5;
  }
  return norm > 0.0 ? sum / norm : 0.5;
}

inline double dist_point_segment(Vec2 p, Vec2 a, Vec2 b, double& t_out) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  t_out = t;
  return (p - (a + ab * t)).norm();
}

// Catmull-Rom through the control points, densified to ~half-cell steps.
inline std::vector<Vec2> densify_spline(const std::vector<Vec2>& ctrl,
                                        double step) {
  if (ctrl.size() <= 1) return ctrl;
  if (ctrl.size() == 2) {
    const double len = (ctrl[1] - ctrl[0]).norm();
    const int n = std::max(2, int(std::ceil(len / step)) + 1);
    std::vector<Vec2> out;
    out.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
      const double t = double(i) / (n - 1);
      out.push_back(ctrl[0] + (ctrl[1] - ctrl[0]) * t);
    }
    return out;
  }
  std::vector<Vec2> pts = ctrl;
  pts.insert(pts.begin(), ctrl[0] + (ctrl[0] - ctrl[1]));
  pts.push_back(ctrl.back() + (ctrl.back() - ctrl[ctrl.size() - 2]));
  std::vector<Vec2> out;
  for (std::size_t i = 1; i + 2 < pts.size(); ++i) {
    const Vec2 p0 = pts[i - 1], p1 = pts[i], p2 = pts[i + 1], p3 = pts[i + 2];
    const double seg_len = (p2 - p1).norm();
    const int n = std::max(2, int(std::ceil(seg_len / step)));
    for (int j = 0; j < n; ++j) {
      const double t = double(j) / n;
      const double t2 = t * t, t3 = t2 * t;
      const Vec2 v =
          (p1 * 2.0 + (p2 - p0) * t +
           (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2 +
           ((p1 - p2) * 3.0 + p3 - p0) * t3) *
          0.5;
      out.push_back(v);
    }
  }
  out.push_back(ctrl.back());
  return out;
}

// separable Gaussian over a row-major grid, reflecting at the borders
inline void gaussian_blur(std::vector<float>& field, int nx, int ny, double sigma_cells) {
  if (sigma_cells <= 0.0) return;
  const int radius = std::min(6, std::max(1, int(std::ceil(3.0 * sigma_cells))));
  std::vector<double> kernel(std::size_t(radius) + 1, 0.0);
  for (int k = 0; k <= radius; ++k)
    kernel[std::size_t(k)] = std::exp(-0.5 * (k / sigma_cells) * (k / sigma_cells));
  double norm = kernel[0];
  for (int k = 1; k <= radius; ++k) norm += 2.0 * kernel[std::size_t(k)];
  for (auto& w : kernel) w /= norm;
  auto reflect = [](int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  };
  std::vector<float> tmp(field.size());
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      double acc = kernel[0] * field[std::size_t(y) * nx + x];
      for (int k = 1; k <= radius; ++k)
        acc += kernel[std::size_t(k)] *
               (field[std::size_t(y) * nx + reflect(x - k, nx)] +
                field[std::size_t(y) * nx + reflect(x + k, nx)]);
      tmp[std::size_t(y) * nx + x] = float(acc);
    }
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      double acc = kernel[0] * tmp[std::size_t(y) * nx + x];
      for (int k = 1; k <= radius; ++k)
        acc += kernel[std::size_t(k)] *
               (tmp[std::size_t(reflect(y - k, ny)) * nx + x] +
                tmp[std::size_t(reflect(y + k, ny)) * nx + x]);
      field[std::size_t(y) * nx + x] = float(acc);
    }
}

inline double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

// nearest point on polyline: returns distance, writes arclength of the foot
inline double polyline_distance(const std::vector<Vec2>& pts, Vec2 p,
                                double* arclength = nullptr) {
  if (pts.empty()) return std::numeric_limits<double>::infinity();
  if (pts.size() == 1) {
    if (arclength) *arclength = 0.0;
    return (p - pts[0]).norm();
  }
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0, s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double t = 0.0;
    const double d = dist_point_segment(p, pts[i - 1], pts[i], t);
    const double seg = (pts[i] - pts[i - 1]).norm();
    if (d < best) {
      best = d;
      best_s = s + t * seg;
    }
    s += seg;
  }
  if (arclength) *arclength = best_s;
  return best;
}

}  // namespace detail

namespace detail {

// Accumulators threaded through the per-kind rasterizers.
struct RasterTarget {
  std::vector<float>* relief_vis;   // adds to visible surface
  std::vector<float>* relief_tac;   // adds to effective relief (pre-weighted)
  std::vector<float>* albedo;
  std::vector<std::uint16_t>* feature_id;
  const SceneConfig* cfg;
  int nx, ny;
  std::uint16_t id;

  std::size_t idx(int ix, int iy) const {
    return std::size_t(iy) * std::size_t(nx) + std::size_t(ix);
  }
};

// Visits every cell within `margin` of the spine; callback gets the cell,
// the unsigned distance, the signed distance (left of travel positive),
// the arclength of the nearest spine point and the local direction.
template <typename Fn>
void for_cells_near_polyline(const RasterTarget& t, const std::vector<Vec2>& pts,
                             double margin, Fn&& fn) {
  if (pts.empty()) return;
  const double res = t.cfg->resolution;
  double min_x = pts[0].x, max_x = pts[0].x, min_y = pts[0].y, max_y = pts[0].y;
  for (const auto& p : pts) {
    min_x = std::min(min_x, p.x); max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y); max_y = std::max(max_y, p.y);
  }
  const int ix0 = std::max(0, int((min_x - margin) / res));
  const int ix1 = std::min(t.nx - 1, int((max_x + margin) / res) + 1);
  const int iy0 = std::max(0, int((min_y - margin) / res));
  const int iy1 = std::min(t.ny - 1, int((max_y + margin) / res) + 1);
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 c{(ix + 0.5) * res, (iy + 0.5) * res};
      double best = std::numeric_limits<double>::infinity();
      double best_s = 0.0;
      Vec2 best_dir{1.0, 0.0};
      Vec2 best_foot = pts[0];
      double acc = 0.0;
      for (std::size_t i = 1; i < pts.size(); ++i) {
        double tt = 0.0;
        const double d = dist_point_segment(c, pts[i - 1], pts[i], tt);
        const double seg = (pts[i] - pts[i - 1]).norm();
        if (d < best) {
          best = d;
          best_s = acc + tt * seg;
          best_foot = pts[i - 1] + (pts[i] - pts[i - 1]) * tt;
          if (seg > 0.0) best_dir = (pts[i] - pts[i - 1]) * (1.0 / seg);
        }
        acc += seg;
      }
      if (pts.size() == 1) best = (c - pts[0]).norm();
      if (best > margin) continue;
      const Vec2 off = c - best_foot;
      const double side = best_dir.x * off.y - best_dir.y * off.x;
      fn(ix, iy, best, side >= 0.0 ? best : -best, best_s, best_dir);
    }
  }
}

}  // namespace detail

// --- rasterizers (one per feature kind) are defined in the .ipp-style
//     block below; generate_scene wires them together. ---

namespace detail {

struct SceneBuilder {
  SurfaceScene& scene;
  std::vector<float> relief_vis;   // feature relief on the visible surface
  std::vector<float> relief_tac;   // stiffness-weighted feature relief
  std::vector<float> albedo_mark;  // additive albedo marks

  explicit SceneBuilder(SurfaceScene& s)
      : scene(s),
        relief_vis(std::size_t(s.nx) * s.ny, 0.0f),
        relief_tac(std::size_t(s.nx) * s.ny, 0.0f),
        albedo_mark(std::size_t(s.nx) * s.ny, 0.0f) {}

  RasterTarget target(std::uint16_t id) {
    return RasterTarget{&relief_vis, &relief_tac, &albedo_mark,
                        &scene.feature_id, &scene.config, scene.nx, scene.ny,
                        id};
  }
};

inline void mark(RasterTarget& t, int ix, int iy) {
  (*t.feature_id)[t.idx(ix, iy)] = t.id;
}

inline void add_relief(RasterTarget& t, int ix, int iy, double h,
                       double stiffness, bool visible, double mark_eps) {
  const std::size_t i = t.idx(ix, iy);
  if (visible) (*t.relief_vis)[i] += float(h);
  (*t.relief_tac)[i] += float(h * stiffness);
  if (h > mark_eps) mark(t, ix, iy);
}

inline void add_albedo(RasterTarget& t, int ix, int iy, double delta) {
  (*t.albedo)[t.idx(ix, iy)] += float(delta);
}

inline void raster_cable(RasterTarget t, const FeatureSpec& f,
                         const std::vector<Vec2>& spine) {
  const double r = f.width / 2.0;
  const double mark_eps = std::max(1e-4, 0.15 * f.amplitude);
  for_cells_near_polyline(t, spine, r * 1.5,
      [&](int ix, int iy, double d, double, double, Vec2) {
        const double u = d / r;
        if (u >= 1.0) return;
        const double h = f.amplitude * std::pow(std::max(0.0, 1.0 - u * u), 1.2);
        add_relief(t, ix, iy, h, f.stiffness_scale, true, mark_eps);
        add_albedo(t, ix, iy, f.albedo_delta * (1.0 - u));
      });
}

inline void raster_seam(RasterTarget t, const FeatureSpec& f,
                        const std::vector<Vec2>& spine) {
  const double sigma = f.width / 2.0;
  const double mark_eps = std::max(1e-4, 0.15 * f.amplitude);
  for_cells_near_polyline(t, spine, sigma * 3.0,
      [&](int ix, int iy, double d, double sd, double s, Vec2) {
        const double g = std::exp(-(d * d) / (2.0 * sigma * sigma));
        // asymmetric fold: one side of the seam sits slightly higher
        const double h = f.amplitude * g * (1.0 + 0.22 * std::tanh(sd / sigma));
        add_relief(t, ix, iy, h, f.stiffness_scale, true, mark_eps);
        // dashed stitch marks along the centerline
        const double phase = std::fmod(s, f.pitch) / f.pitch;
        if (d < sigma * 0.35 && phase < 0.55)
          add_albedo(t, ix, iy, f.albedo_delta);
        else
          add_albedo(t, ix, iy, 0.3 * f.albedo_delta * g);
      });
}

inline void raster_bump(RasterTarget t, const FeatureSpec& f, Vec2 center,
                        double radius, double amp, bool visible,
                        double widen = 1.0) {
  const double res = t.cfg->resolution;
  const double reach = radius * 2.6 * widen;
  const int ix0 = std::max(0, int((center.x - reach) / res));
  const int ix1 = std::min(t.nx - 1, int((center.x + reach) / res) + 1);
  const int iy0 = std::max(0, int((center.y - reach) / res));
  const int iy1 = std::min(t.ny - 1, int((center.y + reach) / res) + 1);
  const double sigma = radius * widen * 0.65;
  const double mark_eps = std::max(1e-4, 0.15 * amp);
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 c{(ix + 0.5) * res, (iy + 0.5) * res};
      const double d = (c - center).norm();
      const double h = amp * std::exp(-(d * d) / (2.0 * sigma * sigma));
      if (h < mark_eps * 0.2) continue;
      add_relief(t, ix, iy, h, f.stiffness_scale, visible, mark_eps);
      if (visible) add_albedo(t, ix, iy, f.albedo_delta * h / std::max(amp, 1e-9));
    }
}

inline void raster_button(RasterTarget t, const FeatureSpec& f) {
  const Vec2 center = f.points.at(0);
  const double r = f.width / 2.0;
  const double res = t.cfg->resolution;
  const int ix0 = std::max(0, int((center.x - r * 1.4) / res));
  const int ix1 = std::min(t.nx - 1, int((center.x + r * 1.4) / res) + 1);
  const int iy0 = std::max(0, int((center.y - r * 1.4) / res));
  const int iy1 = std::min(t.ny - 1, int((center.y + r * 1.4) / res) + 1);
  const double mark_eps = std::max(1e-4, 0.15 * f.amplitude);
  // hole layout rotated by a per-feature angle derived from the center
  const double hole_phase = f.pitch;  // reused as a phase for the holes
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 c{(ix + 0.5) * res, (iy + 0.5) * res};
      const double d = (c - center).norm();
      if (d > r * 1.3) continue;
      const double rim = detail::smoothstep((r - d) / (0.25 * r));
      double h = f.amplitude * rim;
      // rim ridge
      h += 0.35 * f.amplitude *
           std::exp(-std::pow((d - 0.85 * r) / (0.12 * r), 2.0));
      double alb = (d < r ? 0.16 : 0.0);
      // four thread holes
      for (int k = 0; k < 4; ++k) {
        const double a = hole_phase + k * kPi / 2.0;
        const Vec2 hole = center + Vec2{std::cos(a), std::sin(a)} * (0.38 * r);
        const double hd = (c - hole).norm();
        if (hd < 0.14 * r + res) {
          h -= 0.4 * f.amplitude;
          alb -= 0.3;
        }
      }
      if (h <= 0.0 && alb == 0.0) continue;
      add_relief(t, ix, iy, std::max(0.0, h), f.stiffness_scale, true, mark_eps);
      add_albedo(t, ix, iy, alb);
    }
}

inline void raster_zipper(RasterTarget t, const FeatureSpec& f,
                          const std::vector<Vec2>& spine) {
  const double half_band = f.width / 2.0;  // teeth band half-width
  const double mark_eps = std::max(1e-4, 0.12 * f.amplitude);
  for_cells_near_polyline(t, spine, half_band + 0.006,
      [&](int ix, int iy, double d, double sd, double s, Vec2) {
        // cloth tape on both sides of the teeth
        if (d >= half_band) {
          if (d < half_band + 0.005) {
            add_relief(t, ix, iy, 0.25 * f.amplitude *
                       detail::smoothstep((half_band + 0.005 - d) / 0.002),
                       f.stiffness_scale * 0.4, true, 1e9 /* no mark */);
            add_albedo(t, ix, iy, 0.5 * f.albedo_delta);
          }
          return;
        }
        // two interleaved tooth rows; phase alternates across the centerline
        const long tooth = long(std::floor(s / f.pitch));
        const bool left = sd >= 0.0;
        const bool active = left ? (tooth % 2 == 0) : (tooth % 2 != 0);
        const double along_phase = s - double(tooth) * f.pitch;
        const double tooth_gap = 0.18 * f.pitch;
        const double in_tooth =
            detail::smoothstep((along_phase - tooth_gap * 0.5) / (0.2 * f.pitch)) *
            detail::smoothstep((f.pitch - tooth_gap * 0.5 - along_phase) /
                               (0.2 * f.pitch));
        const double across = detail::smoothstep((half_band - d) / 0.0015) *
                              detail::smoothstep(d / 0.0006 + 0.25);
        double h = 0.0;
        if (active) h = f.amplitude * in_tooth * across;
        add_relief(t, ix, iy, h, f.stiffness_scale, true, mark_eps);
        add_albedo(t, ix, iy,
                   active ? (0.22 * in_tooth * across - 0.06) : -0.06);
      });
}

inline void raster_towel_edge(RasterTarget t, const FeatureSpec& f,
                              const std::vector<Vec2>& spine) {
  // double-fold hem: a flat-top band on the raised side of the segment
  const double w = f.width;              // hem ramp width
  const double band = 3.0 * w;           // hem band total width
  const double mark_eps = std::max(1e-4, 0.15 * f.amplitude);
  for_cells_near_polyline(t, spine, band + f.region_depth,
      [&](int ix, int iy, double, double sd, double, Vec2) {
        if (sd < -w) return;  // table side
        double h = 0.0;
        if (sd < 0.0) {
          h = f.amplitude * detail::smoothstep((sd + w) / w);
        } else if (sd < band) {
          h = f.amplitude;
        } else if (sd < band + 2.0 * w) {
          // settle down to the towel body thickness
          h = f.amplitude * (1.0 - 0.45 * detail::smoothstep((sd - band) / (2.0 * w)));
        } else if (sd < f.region_depth) {
          h = 0.55 * f.amplitude;  // towel body behind the hem
        } else if (sd < f.region_depth + 2.0 * w) {
          h = 0.55 * f.amplitude *
              (1.0 - detail::smoothstep((sd - f.region_depth) / (2.0 * w)));
        } else {
          return;
        }
        const bool in_band = sd >= -w && sd <= band + 2.0 * w;
        add_relief(t, ix, iy, h, f.stiffness_scale, true,
                   in_band ? mark_eps : 1e9);
        add_albedo(t, ix, iy, f.albedo_delta * (h / std::max(f.amplitude, 1e-9)));
      });
}

inline void raster_towel_corner(RasterTarget t, const FeatureSpec& f) {
  // quarter-plane hem: two perpendicular hem bands meeting at points[0],
  // arms along points[1]-points[0] and its left normal
  const Vec2 corner = f.points.at(0);
  Vec2 dir_a = f.points.size() > 1 ? f.points[1] - corner : Vec2{1.0, 0.0};
  const double la = dir_a.norm();
  if (la > 0.0) dir_a = dir_a * (1.0 / la);
  const Vec2 dir_b{-dir_a.y, dir_a.x};
  const double w = f.width, band = 3.0 * f.width;
  const double reach = f.region_depth + 2.0 * w;
  const double res = t.cfg->resolution;
  const double mark_eps = std::max(1e-4, 0.15 * f.amplitude);
  const int ix0 = std::max(0, int((corner.x - reach) / res));
  const int ix1 = std::min(t.nx - 1, int((corner.x + reach) / res) + 1);
  const int iy0 = std::max(0, int((corner.y - reach) / res));
  const int iy1 = std::min(t.ny - 1, int((corner.y + reach) / res) + 1);
  auto hem_profile = [&](double sd) -> double {
    if (sd < -w) return -1.0;  // outside the towel
    if (sd < 0.0) return detail::smoothstep((sd + w) / w);
    if (sd < band) return 1.0;
    if (sd < band + 2.0 * w)
      return 1.0 - 0.45 * detail::smoothstep((sd - band) / (2.0 * w));
    if (sd < f.region_depth) return 0.55;
    if (sd < f.region_depth + 2.0 * w)
      return 0.55 * (1.0 - detail::smoothstep((sd - f.region_depth) / (2.0 * w)));
    return 0.0;
  };
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 c{(ix + 0.5) * res, (iy + 0.5) * res};
      const Vec2 rel = c - corner;
      const double da = rel.dot(dir_b);  // distance into the towel across arm A
      const double db = rel.dot(dir_a);  // across arm B
      const double pa = hem_profile(da), pb = hem_profile(db);
      if (pa < 0.0 || pb < 0.0) continue;
      const double h = f.amplitude * std::min(pa, pb);
      if (h <= 0.0) continue;
      const bool near_hem = (da <= band + 2.0 * w) || (db <= band + 2.0 * w);
      add_relief(t, ix, iy, h, f.stiffness_scale, true,
                 near_hem ? mark_eps : 1e9);
      add_albedo(t, ix, iy, f.albedo_delta * (h / std::max(f.amplitude, 1e-9)));
    }
}

inline void raster_lump(RasterTarget t, const FeatureSpec& f) {
  // buried stiff inclusion: visible surface untouched, tactile relief
  // widened and attenuated with burial depth (low-pass of the true shape)
  const double atten = std::exp(-f.burial_depth / (f.width * 1.2));
  const double widen = 1.0 + f.burial_depth / std::max(f.width, 1e-6);
  raster_bump(t, f, f.points.at(0), f.width / 2.0, f.amplitude * atten,
              /*visible=*/false, widen);
  // faint visual smudge well below base texture contrast
  if (std::abs(f.albedo_delta) > 0.0) {
    RasterTarget t2 = t;
    const double res = t.cfg->resolution;
    const Vec2 c = f.points.at(0);
    const int ix = std::clamp(int(c.x / res), 0, t.nx - 1);
    const int iy = std::clamp(int(c.y / res), 0, t.ny - 1);
    add_albedo(t2, ix, iy, f.albedo_delta);
  }
}

inline void raster_ruffle(RasterTarget t, const FeatureSpec& f,
                          const std::vector<Vec2>& spine) {
  // parallel soft ridges crossing the spine at the given pitch
  const double half_band = f.width / 2.0;
  const double mark_eps = std::max(1e-4, 0.2 * f.amplitude);
  for_cells_near_polyline(t, spine, half_band,
      [&](int ix, int iy, double d, double, double s, Vec2) {
        const double envelope = detail::smoothstep((half_band - d) / (0.3 * half_band));
        const double wave = std::max(0.0, std::sin(kTau * s / f.pitch));
        const double h = f.amplitude * envelope * std::pow(wave, 1.6);
        add_relief(t, ix, iy, h, f.stiffness_scale, true, mark_eps);
        add_albedo(t, ix, iy, f.albedo_delta * envelope * wave);
      });
}

inline void raster_wrinkle(RasterTarget t, const FeatureSpec& f,
                           const std::vector<Vec2>& spine) {
  const double sigma = f.width / 2.2;
  const double mark_eps = std::max(1e-4, 0.3 * f.amplitude);
  for_cells_near_polyline(t, spine, sigma * 2.2,
      [&](int ix, int iy, double d, double, double, Vec2) {
        const double h = f.amplitude * std::exp(-(d * d) / (2.0 * sigma * sigma));
        add_relief(t, ix, iy, h, f.stiffness_scale, true, mark_eps);
      });
}

}  // namespace detail

// Random geometry for one requested feature of the given kind.
inline FeatureSpec sample_feature(FeatureKind kind, const SceneConfig& cfg,
                                  Rng& rng) {
  FeatureSpec f;
  f.kind = kind;
  const double margin = 0.02;
  auto rand_point = [&]() -> Vec2 {
    return {rng.uniform(margin, cfg.extent_x - margin),
            rng.uniform(margin, cfg.extent_y - margin)};
  };
  auto walk = [&](int n, double step) {
    std::vector<Vec2> pts{rand_point()};
    double heading = rng.uniform(0.0, kTau);
    for (int i = 1; i < n; ++i) {
      heading += rng.uniform(-0.6, 0.6);
      Vec2 next = pts.back() + Vec2{std::cos(heading), std::sin(heading)} * step;
      next.x = std::clamp(next.x, margin, cfg.extent_x - margin);
      next.y = std::clamp(next.y, margin, cfg.extent_y - margin);
      pts.push_back(next);
    }
    return pts;
  };
  switch (kind) {
    case FeatureKind::CableSpline:
      f.points = walk(4, 0.05);
      f.width = rng.uniform(0.002, 0.005);
      f.amplitude = f.width * rng.uniform(0.7, 0.95);
      f.stiffness_scale = rng.uniform(2.0, 3.0);
      f.albedo_delta = rng.uniform(-0.3, -0.15);
      break;
    case FeatureKind::Seam:
      f.points = walk(3, 0.05);
      f.width = rng.uniform(0.005, 0.007);
      f.amplitude = rng.uniform(0.0012, 0.0018);
      f.stiffness_scale = rng.uniform(1.4, 1.8);
      f.albedo_delta = rng.uniform(-0.25, -0.12);
      f.pitch = rng.uniform(0.004, 0.006);
      break;
    case FeatureKind::Knot:
      f.points = {rand_point()};
      f.width = rng.uniform(0.002, 0.006);  // knot diameter
      f.amplitude = f.width * rng.uniform(0.8, 1.1);
      f.stiffness_scale = rng.uniform(2.5, 3.5);
      f.albedo_delta = rng.uniform(-0.12, -0.04);
      break;
    case FeatureKind::Button:
      f.points = {rand_point()};
      f.width = rng.uniform(0.010, 0.014);
      f.amplitude = rng.uniform(0.0015, 0.0022);
      f.stiffness_scale = rng.uniform(2.5, 3.5);
      f.pitch = rng.uniform(0.0, kTau);  // hole layout phase
      break;
    case FeatureKind::Zipper: {
      const Vec2 a = rand_point();
      const double ang = rng.uniform(0.0, kTau);
      const double len = rng.uniform(0.09, 0.13);
      Vec2 b = a + Vec2{std::cos(ang), std::sin(ang)} * len;
      b.x = std::clamp(b.x, margin, cfg.extent_x - margin);
      b.y = std::clamp(b.y, margin, cfg.extent_y - margin);
      f.points = {a, b};
      f.width = rng.uniform(0.007, 0.009);
      f.amplitude = rng.uniform(0.0015, 0.002);
      f.stiffness_scale = rng.uniform(2.8, 3.5);
      f.pitch = rng.uniform(0.0035, 0.005);
      f.albedo_delta = rng.uniform(-0.15, -0.08);
      break;
    }
    case FeatureKind::TowelEdge: {
      const Vec2 a = rand_point();
      const double ang = rng.uniform(0.0, kTau);
      const double len = rng.uniform(0.06, 0.10);
      Vec2 b = a + Vec2{std::cos(ang), std::sin(ang)} * len;
      b.x = std::clamp(b.x, margin, cfg.extent_x - margin);
      b.y = std::clamp(b.y, margin, cfg.extent_y - margin);
      f.points = {a, b};
      f.width = rng.uniform(0.0025, 0.0035);
      f.amplitude = rng.uniform(0.0018, 0.0026);
      f.stiffness_scale = rng.uniform(1.2, 1.6);
      f.albedo_delta = rng.uniform(-0.18, 0.18);
      f.region_depth = rng.uniform(0.025, 0.04);
      break;
    }
    case FeatureKind::TowelCorner: {
      const Vec2 a = rand_point();
      const double ang = rng.uniform(0.0, kTau);
      Vec2 arm = a + Vec2{std::cos(ang), std::sin(ang)} * 0.05;
      arm.x = std::clamp(arm.x, margin, cfg.extent_x - margin);
      arm.y = std::clamp(arm.y, margin, cfg.extent_y - margin);
      f.points = {a, arm};
      f.width = rng.uniform(0.0025, 0.0035);
      f.amplitude = rng.uniform(0.0018, 0.0026);
      f.stiffness_scale = rng.uniform(1.2, 1.6);
      f.albedo_delta = rng.uniform(-0.18, 0.18);
      f.region_depth = rng.uniform(0.025, 0.035);
      break;
    }
    case FeatureKind::EmbeddedLump:
      f.points = {rand_point()};
      f.width = rng.uniform(0.006, 0.010);
      f.amplitude = rng.uniform(0.002, 0.003);
      f.burial_depth = rng.uniform(0.002, 0.006);
      f.stiffness_scale = rng.uniform(2.5, 3.5);
      f.albedo_delta = -0.02;  // reduced contrast: visually hidden
      break;
    case FeatureKind::Ruffle:
      f.points = walk(3, 0.04);
      f.width = rng.uniform(0.016, 0.024);
      f.amplitude = rng.uniform(0.0012, 0.0018);
      f.stiffness_scale = rng.uniform(0.7, 1.0);
      f.pitch = rng.uniform(0.006, 0.01);
      f.albedo_delta = rng.uniform(-0.1, -0.04);
      break;
    case FeatureKind::Wrinkle:
      f.points = walk(3, 0.045);
      f.width = rng.uniform(0.008, 0.012);
      f.amplitude = rng.uniform(0.0008, 0.0014);
      f.stiffness_scale = rng.uniform(0.6, 0.9);
      f.albedo_delta = 0.0;  // same material: only the relief shows
      break;
  }
  return f;
}

inline SurfaceScene generate_scene(std::uint64_t seed, const SceneConfig& config) {
  if (config.area() > 0.5 + 1e-12)
    throw std::invalid_argument("generate_scene: extent area exceeds 0.5 m^2");
  if (config.resolution <= 0.0 || config.extent_x <= 0.0 || config.extent_y <= 0.0)
    throw std::invalid_argument("generate_scene: non-positive geometry");

  SurfaceScene scene;
  scene.seed = seed;
  scene.config = config;
  scene.nx = std::max(2, int(std::lround(config.extent_x / config.resolution)));
  scene.ny = std::max(2, int(std::lround(config.extent_y / config.resolution)));
  const std::size_t n = std::size_t(scene.nx) * scene.ny;
  scene.height.assign(n, 0.0f);
  scene.albedo.assign(n, 0.5f);
  scene.tactile_relief.assign(n, 0.0f);
  scene.feature_id.assign(n, 0);

  Rng scene_rng(derive_seed(seed, 0x5ce11e));

  // ---- base cloth texture ----
  const double tex_scale =
      scene_rng.uniform(config.texture_scale_min, config.texture_scale_max);
  const double contrast =
      scene_rng.uniform(config.albedo_contrast_min, config.albedo_contrast_max);
  const double relief_amp = config.base_relief_amp * scene_rng.uniform(0.7, 1.3);
  const double mean_albedo = scene_rng.uniform(0.42, 0.58);
  const std::uint64_t noise_seed_h = derive_seed(seed, 1);
  const std::uint64_t noise_seed_a = derive_seed(seed, 2);
  const double min_wl = 3.0 * config.resolution;
  for (int iy = 0; iy < scene.ny; ++iy) {
    for (int ix = 0; ix < scene.nx; ++ix) {
      const Vec2 c = scene.cell_center(ix, iy);
      const double nh = detail::octave_noise(noise_seed_h, c.x, c.y, tex_scale, min_wl);
      const double na = detail::octave_noise(noise_seed_a, c.x, c.y, tex_scale * 1.4, min_wl);
      const std::size_t i = scene.idx(ix, iy);
      scene.height[i] = float(relief_amp * 2.0 * nh);
      // albedo partially tracks the relief so both modalities share texture
      const double mix = 0.6 * nh + 0.4 * na;
      scene.albedo[i] = float(std::clamp(mean_albedo + contrast * (mix - 0.5), 0.05, 0.95));
    }
  }
  // base cloth contributes to the tactile relief at unit stiffness
  for (std::size_t i = 0; i < n; ++i) scene.tactile_relief[i] = scene.height[i];

  // ---- features ----
  std::vector<FeatureSpec> specs = config.explicit_features;
  for (int k = 0; k < kNumFeatureKinds; ++k) {
    for (int c = 0; c < config.feature_counts[std::size_t(k)]; ++c) {
      Rng frng(derive_seed(seed, 0xfea7, std::uint64_t(k), std::uint64_t(c)));
      specs.push_back(sample_feature(FeatureKind(k), config, frng));
    }
  }

  detail::SceneBuilder builder(scene);
  scene.features = specs;
  scene.feature_spines.resize(specs.size());
  for (std::size_t fi = 0; fi < specs.size(); ++fi) {
    const FeatureSpec& f = specs[fi];
    for (const auto& p : f.points)
      if (p.x < 0 || p.x > config.extent_x || p.y < 0 || p.y > config.extent_y)
        throw std::invalid_argument("generate_scene: feature geometry outside extent");
    if (f.kind == FeatureKind::EmbeddedLump && f.burial_depth <= 0.0)
      throw std::invalid_argument("generate_scene: embedded_lump needs burial_depth > 0");
    auto t = builder.target(std::uint16_t(fi + 1));
    const double step = config.resolution * 0.5;
    std::vector<Vec2> spine =
        f.points.size() >= 2 ? detail::densify_spline(f.points, step) : f.points;
    scene.feature_spines[fi] = spine;
    switch (f.kind) {
      case FeatureKind::CableSpline: detail::raster_cable(t, f, spine); break;
      case FeatureKind::Seam: detail::raster_seam(t, f, spine); break;
      case FeatureKind::Knot:
        detail::raster_bump(t, f, f.points.at(0), f.width / 2.0, f.amplitude, true);
        break;
      case FeatureKind::Button: detail::raster_button(t, f); break;
      case FeatureKind::Zipper: detail::raster_zipper(t, f, spine); break;
      case FeatureKind::TowelEdge: detail::raster_towel_edge(t, f, spine); break;
      case FeatureKind::TowelCorner: detail::raster_towel_corner(t, f); break;
      case FeatureKind::EmbeddedLump: detail::raster_lump(t, f); break;
      case FeatureKind::Ruffle: detail::raster_ruffle(t, f, spine); break;
      case FeatureKind::Wrinkle: detail::raster_wrinkle(t, f, spine); break;
    }
  }

  // ---- compose fields ----
  std::size_t marked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    scene.height[i] = std::clamp(scene.height[i] + builder.relief_vis[i], 0.0f, 0.01f);
    scene.tactile_relief[i] =
        std::clamp(scene.tactile_relief[i] + builder.relief_tac[i], 0.0f, 0.012f);
    scene.albedo[i] = std::clamp(scene.albedo[i] + builder.albedo_mark[i], 0.02f, 0.98f);
    if (scene.feature_id[i] != 0) ++marked;
  }
  scene.footprint_fraction = double(marked) / double(n);
  if (scene.footprint_fraction >= 0.10)
    throw std::invalid_argument(
        "generate_scene: feature footprint " +
        std::to_string(scene.footprint_fraction) + " exceeds the 10% budget");

  // membrane low-pass: the gel cannot conform to sub-millimeter detail
  detail::gaussian_blur(scene.tactile_relief, scene.nx, scene.ny,
                        config.gel_sigma / config.resolution);

  // ---- precomputed shading ----
  scene.shaded.assign(n, 0.5f);
  scene.grad_x.assign(n, 0.0f);
  scene.grad_y.assign(n, 0.0f);
  const double lx = std::cos(config.visual_light_angle);
  const double ly = std::sin(config.visual_light_angle);
  const double inv2res = 1.0 / (2.0 * config.resolution);
  for (int iy = 0; iy < scene.ny; ++iy) {
    for (int ix = 0; ix < scene.nx; ++ix) {
      const std::size_t i = scene.idx(ix, iy);
      auto h_at = [&](const std::vector<float>& f, int x, int y) {
        x = std::clamp(x, 0, scene.nx - 1);
        y = std::clamp(y, 0, scene.ny - 1);
        return double(f[scene.idx(x, y)]);
      };
      const double gvx = (h_at(scene.height, ix + 1, iy) - h_at(scene.height, ix - 1, iy)) * inv2res;
      const double gvy = (h_at(scene.height, ix, iy + 1) - h_at(scene.height, ix, iy - 1)) * inv2res;
      scene.shaded[i] = float(std::clamp(
          double(scene.albedo[i]) + config.visual_shade_gain * (lx * gvx + ly * gvy),
          0.0, 1.0));
      scene.grad_x[i] = float((h_at(scene.tactile_relief, ix + 1, iy) -
                               h_at(scene.tactile_relief, ix - 1, iy)) * inv2res);
      scene.grad_y[i] = float((h_at(scene.tactile_relief, ix, iy + 1) -
                               h_at(scene.tactile_relief, ix, iy - 1)) * inv2res);
    }
  }
  return scene;
}

// ---- rendering ----

inline bool patch_fully_inside(const SurfaceScene& scene, const Pose2D& pose,
                               double fov) {
  const double half = fov / 2.0;
  for (int cx = -1; cx <= 1; cx += 2)
    for (int cy = -1; cy <= 1; cy += 2) {
      const Vec2 corner =
          pose.position() + rotate({half * cx, half * cy}, pose.theta);
      if (!scene.in_extent(corner)) return false;
    }
  return true;
}

inline VisualPatch render_visual(const SurfaceScene& scene, const Pose2D& pose,
                                 double fov, int image_size = 64) {
  if (!scene.in_extent(pose.position()))
    throw std::out_of_range("render_visual: pose outside scene extent");
  if (fov <= 0.0) throw std::invalid_argument("render_visual: fov must be > 0");
  VisualPatch patch;
  patch.fov = fov;
  patch.pose = pose;
  patch.padded = !patch_fully_inside(scene, pose, fov);
  patch.pixels = Image(image_size, image_size, 1);
  for (int r = 0; r < image_size; ++r)
    for (int c = 0; c < image_size; ++c) {
      const Vec2 u = pixel_to_patch(r, c, image_size, image_size, fov);
      const Vec2 w = pose.position() + rotate(u, pose.theta);
      patch.pixels.at(r, c) = scene.sample(scene.shaded, w, 0.5f);
    }
  quantize8(patch.pixels);
  return patch;
}

// contact reference plane uses the disk circumscribing the square sensor
// footprint, so the plane (and the force) is invariant to sensor rotation
inline double contact_disk_radius(double fov) { return fov / std::sqrt(2.0); }

namespace detail {

inline double disk_max_relief(const SurfaceScene& scene, Vec2 center, double radius) {
  const double res = scene.config.resolution;
  const int ix0 = std::max(0, int((center.x - radius) / res));
  const int ix1 = std::min(scene.nx - 1, int((center.x + radius) / res) + 1);
  const int iy0 = std::max(0, int((center.y - radius) / res));
  const int iy1 = std::min(scene.ny - 1, int((center.y + radius) / res) + 1);
  double best = 0.0;
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 c = scene.cell_center(ix, iy);
      if ((c - center).norm() > radius) continue;
      best = std::max(best, double(scene.tactile_relief[scene.idx(ix, iy)]));
    }
  return best;
}

inline double disk_displaced_volume(const SurfaceScene& scene, Vec2 center,
                                    double radius, double plane) {
  const double res = scene.config.resolution;
  const double cell_area = res * res;
  const int ix0 = std::max(0, int((center.x - radius) / res));
  const int ix1 = std::min(scene.nx - 1, int((center.x + radius) / res) + 1);
  const int iy0 = std::max(0, int((center.y - radius) / res));
  const int iy1 = std::min(scene.ny - 1, int((center.y + radius) / res) + 1);
  double vol = 0.0;
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      const Vec2 c = scene.cell_center(ix, iy);
      if ((c - center).norm() > radius) continue;
      const double pen = double(scene.tactile_relief[scene.idx(ix, iy)]) - plane;
      if (pen > 0.0) vol += pen * cell_area;
    }
  // the gel face itself descends below the nominal surface plane
  if (plane < 0.0) vol += -plane * kPi * radius * radius;
  return vol;
}

}  // namespace detail

inline double contact_force(const SurfaceScene& scene, const Pose2D& pose,
                            double press_depth) {
  if (press_depth < 0.0)
    throw std::invalid_argument("contact_force: press_depth must be >= 0");
  if (press_depth == 0.0) return 0.0;
  const double radius = contact_disk_radius(scene.config.tactile_fov);
  const double top = detail::disk_max_relief(scene, pose.position(), radius);
  const double plane = top - press_depth;
  return scene.config.force_gain *
         detail::disk_displaced_volume(scene, pose.position(), radius, plane);
}

// smallest press depth reaching the target force, or nullopt when the
// travel limit cannot produce it (bisection; force is monotone in depth)
inline std::optional<double> solve_press_depth(const SurfaceScene& scene,
                                               const Pose2D& pose,
                                               double target_force) {
  const double max_travel = scene.config.max_press_travel;
  if (contact_force(scene, pose, max_travel) < target_force) return std::nullopt;
  double lo = 0.0, hi = max_travel;
  for (int it = 0; it < 42; ++it) {
    const double mid = 0.5 * (lo + hi);
    (contact_force(scene, pose, mid) < target_force ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline TactilePatch render_tactile(const SurfaceScene& scene, const Pose2D& pose,
                                   double press_depth, int image_size = 64) {
  if (!scene.in_extent(pose.position()))
    throw std::out_of_range("render_tactile: pose outside scene extent");
  if (press_depth < 0.0)
    throw std::invalid_argument("render_tactile: press_depth must be >= 0");
  const SceneConfig& cfg = scene.config;
  const double fov = cfg.tactile_fov;

  TactilePatch patch;
  patch.fov = fov;
  patch.pose = pose;
  patch.press_depth = press_depth;
  patch.padded = !patch_fully_inside(scene, pose, fov);
  patch.pixels = Image(image_size, image_size, 3);
  const auto& bg = cfg.tactile_background;
  for (int r = 0; r < image_size; ++r)
    for (int c = 0; c < image_size; ++c)
      for (int ch = 0; ch < 3; ++ch)
        patch.pixels.at(r, c, ch) = float(bg[std::size_t(ch)]);
  if (press_depth == 0.0) {
    quantize8(patch.pixels);
    patch.contact_force = 0.0;
    return patch;
  }

  const double radius = contact_disk_radius(fov);
  const double top = detail::disk_max_relief(scene, pose.position(), radius);
  const double plane = top - press_depth;
  patch.contact_force =
      cfg.force_gain *
      detail::disk_displaced_volume(scene, pose.position(), radius, plane);

  // three fixed world-frame lights, one per channel
  std::array<Vec2, 3> lights;
  for (int k = 0; k < 3; ++k) {
    const double a = cfg.tactile_light_angle0 + k * kTau / 3.0;
    lights[std::size_t(k)] = {std::cos(a), std::sin(a)};
  }
  for (int r = 0; r < image_size; ++r)
    for (int c = 0; c < image_size; ++c) {
      const Vec2 u = pixel_to_patch(r, c, image_size, image_size, fov);
      const Vec2 w = pose.position() + rotate(u, pose.theta);
      const double relief = scene.sample(scene.tactile_relief, w, 0.0f);
      const double pen = relief - plane;
      if (pen <= 0.0) continue;
      const double gx = scene.sample(scene.grad_x, w, 0.0f);
      const double gy = scene.sample(scene.grad_y, w, 0.0f);
      const double lift =
          cfg.tactile_depth_gain * std::min(pen / cfg.indentation_cap, 1.0);
      for (int ch = 0; ch < 3; ++ch) {
        const double shade =
            cfg.tactile_shade_gain *
            (lights[std::size_t(ch)].x * gx + lights[std::size_t(ch)].y * gy);
        patch.pixels.at(r, c, ch) = float(
            std::clamp(bg[std::size_t(ch)] + shade + lift, 0.0, 1.0));
      }
    }
  quantize8(patch.pixels);
  return patch;
}

// ---- ground-truth queries ----

// true when any cell under the square sensor footprint belongs to the feature
inline bool footprint_touches_feature(const SurfaceScene& scene, const Pose2D& pose,
                                      double fov, std::size_t feature_index) {
  const double half = fov / 2.0;
  const double reach = half * std::sqrt(2.0);
  const double res = scene.config.resolution;
  const int ix0 = std::max(0, int((pose.x - reach) / res));
  const int ix1 = std::min(scene.nx - 1, int((pose.x + reach) / res) + 1);
  const int iy0 = std::max(0, int((pose.y - reach) / res));
  const int iy1 = std::min(scene.ny - 1, int((pose.y + reach) / res) + 1);
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      if (scene.feature_id[scene.idx(ix, iy)] != feature_index + 1) continue;
      const Vec2 local = rotate(scene.cell_center(ix, iy) - pose.position(), -pose.theta);
      if (std::abs(local.x) <= half && std::abs(local.y) <= half) return true;
    }
  return false;
}

inline double footprint_fraction_of_feature(const SurfaceScene& scene,
                                            std::size_t feature_index) {
  std::size_t count = 0;
  for (const auto id : scene.feature_id)
    if (id == feature_index + 1) ++count;
  return double(count) / double(scene.feature_id.size());
}

}  // namespace vistac::sim
