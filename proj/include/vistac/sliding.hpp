#pragma once

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vistac/encoders.hpp"
#include "vistac/rotation_net.hpp"
#include "vistac/surface_sim.hpp"

namespace vistac::sliding {

using json = nlohmann::json;
using enc::EmbeddingVector;

enum class Decision { Cruise, SlowConfirm, AnomalyStop, FoundStop, Resume };

inline const char* decision_name(Decision d) {
  switch (d) {
    case Decision::Cruise: return "cruise";
    case Decision::SlowConfirm: return "slow_confirm";
    case Decision::AnomalyStop: return "anomaly_stop";
    case Decision::FoundStop: return "found_stop";
    case Decision::Resume: return "resume";
  }
  return "?";
}

// lower median: the (n-1)/2-th order statistic, no midpoint averaging
inline double lower_median(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("lower_median: empty input");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + std::ptrdiff_t(k), values.end());
  return values[k];
}

// Shared cruise / slow-confirm / stop state machine. A candidate reading
// whose score crosses the threshold starts a confirm phase of
// `confirm_count` further readings at 20% speed; the decision falls to
// the literal median of those readings. Comparisons are strict; ties
// resume cruising. The window only ever holds cruise readings and is
// refilled from scratch after a false alarm.
template <typename Item>
class ConfirmingDetector {
public:
  using ScoreFn = std::function<double(const Item&, const std::deque<Item>&)>;

  ConfirmingDetector(double threshold, int confirm_count,
                     std::size_t window_capacity, bool trigger_above,
                     Decision stop_decision, ScoreFn score)
      : threshold_(threshold), confirm_count_(confirm_count),
        window_capacity_(window_capacity), trigger_above_(trigger_above),
        stop_decision_(stop_decision), score_(std::move(score)) {}

  Decision step(const Item& item) {
    if (stopped_) return stop_decision_;
    if (!confirming_) {
      if (window_capacity_ > 0 && window_.size() < window_capacity_) {
        window_.push_back(item);  // warm-up: no triggering yet
        last_score_ = 0.0;
        return Decision::Cruise;
      }
      const double s = score_(item, window_);
      last_score_ = s;
      if (triggers(s)) {
        confirming_ = true;
        confirm_scores_.clear();
        return Decision::SlowConfirm;
      }
      if (window_capacity_ > 0) {
        window_.pop_front();
        window_.push_back(item);
      }
      return Decision::Cruise;
    }
    const double s = score_(item, window_);
    last_score_ = s;
    confirm_scores_.push_back(s);
    if (int(confirm_scores_.size()) < confirm_count_) return Decision::SlowConfirm;
    const double med = lower_median(confirm_scores_);
    confirming_ = false;
    confirm_scores_.clear();
    if (triggers(med)) {
      stopped_ = true;
      return stop_decision_;
    }
    window_.clear();  // refill before the detector may trigger again
    return Decision::Resume;
  }

  double speed_scale() const { return confirming_ ? 0.2 : 1.0; }
  bool stopped() const { return stopped_; }
  double last_score() const { return last_score_; }
  std::size_t window_size() const { return window_.size(); }

private:
  bool triggers(double s) const {
    return trigger_above_ ? s > threshold_ : s < threshold_;
  }

  double threshold_;
  int confirm_count_;
  std::size_t window_capacity_;
  bool trigger_above_;
  Decision stop_decision_;
  ScoreFn score_;
  std::deque<Item> window_;
  std::vector<double> confirm_scores_;
  bool confirming_ = false;
  bool stopped_ = false;
  double last_score_ = 0.0;
};

namespace detail {

inline void check_unit(const EmbeddingVector& z, const char* who) {
  if (std::abs(z.norm() - 1.0) > 1e-3)
    throw std::invalid_argument(std::string(who) + ": embedding must be unit-norm");
}

}  // namespace detail

// Anomaly detection: median cosine similarity between the current
// embedding and the window falls below m1.
class AnomalyDetector {
public:
  explicit AnomalyDetector(double m1 = 0.3, int n1 = 20, std::size_t window = 40)
      : impl_(m1, n1, window, /*trigger_above=*/false, Decision::AnomalyStop,
              [](const EmbeddingVector& z, const std::deque<EmbeddingVector>& w) {
                std::vector<double> sims;
                sims.reserve(w.size());
                for (const auto& e : w) sims.push_back(z.dot(e));
                return lower_median(std::move(sims));
              }) {}

  Decision step(const EmbeddingVector& z) {
    detail::check_unit(z, "AnomalyDetector");
    return impl_.step(z);
  }
  double speed_scale() const { return impl_.speed_scale(); }
  bool stopped() const { return impl_.stopped(); }
  double last_score() const { return impl_.last_score(); }

private:
  ConfirmingDetector<EmbeddingVector> impl_;
};

// Vision-guided search: cosine similarity to the fixed query embedding
// rises above m2.
class SearchDetector {
public:
  explicit SearchDetector(EmbeddingVector query, double m2 = 0.6, int n2 = 60)
      : query_(std::move(query)),
        impl_(m2, n2, /*window=*/0, /*trigger_above=*/true, Decision::FoundStop,
              [this](const EmbeddingVector& z, const std::deque<EmbeddingVector>&) {
                return query_.dot(z);
              }) {
    if (std::abs(query_.norm() - 1.0) > 1e-3)
      throw std::invalid_argument("SearchDetector: query must be unit-norm");
  }

  Decision step(const EmbeddingVector& z) {
    detail::check_unit(z, "SearchDetector");
    return impl_.step(z);
  }
  double speed_scale() const { return impl_.speed_scale(); }
  bool stopped() const { return impl_.stopped(); }
  double last_score() const { return impl_.last_score(); }

private:
  EmbeddingVector query_;
  ConfirmingDetector<EmbeddingVector> impl_;
};

// Published baseline: the same buffer-and-confirm machine on raw L2 pixel
// distance (inverted sense: large distance triggers).
class L2AnomalyDetector {
public:
  explicit L2AnomalyDetector(double threshold, int n1 = 20, std::size_t window = 40)
      : impl_(threshold, n1, window, /*trigger_above=*/true, Decision::AnomalyStop,
              [](const Image& img, const std::deque<Image>& w) {
                std::vector<double> dists;
                dists.reserve(w.size());
                for (const auto& f : w) dists.push_back(l2_pixel_distance(img, f));
                return lower_median(std::move(dists));
              }) {}

  Decision step(const Image& frame) { return impl_.step(frame); }
  double speed_scale() const { return impl_.speed_scale(); }
  bool stopped() const { return impl_.stopped(); }
  double last_score() const { return impl_.last_score(); }

private:
  ConfirmingDetector<Image> impl_;
};

// nearest-rank upper quantile, for calibrating the L2 baseline threshold
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double rank = q * double(values.size());
  std::size_t idx = std::size_t(std::ceil(rank));
  idx = std::min(values.size(), std::max<std::size_t>(1, idx)) - 1;
  return values[idx];
}

// spec wrappers matching the operation names
inline Decision step_anomaly(AnomalyDetector& state, const EmbeddingVector& z) {
  return state.step(z);
}
inline Decision step_search(SearchDetector& state, const EmbeddingVector& z) {
  return state.step(z);
}

// ---- tactile servoing ----

struct ServoConfig {
  double lambda = 0.8;  // smoothing weight on the newest rotation
  std::vector<int> lateral_offsets_px = {-6, -4, -2, 0, 2, 4, 6};
  double lateral_gain = 0.1;       // rad of heading bias per px of offset
  double confidence_floor = 1e-4;  // below this at every offset: hold
  rot::ConfidenceMode confidence_mode = rot::ConfidenceMode::ProbVariance;
};

struct ServoState {
  Image reference_visual;  // horizontal segment of the feature to follow
  double r_hat = 0.0;      // smoothed rotation estimate
};

struct ServoStep {
  double turn = 0.0;  // heading command relative to the current heading
  double r_t = 0.0;   // decoded rotation prediction
  double r_hat = 0.0;
  int chosen_offset_px = 0;
  double best_confidence = 0.0;
  bool low_confidence = false;
};

// vertical content shift: out(r) = in(r - k); k > 0 moves content down,
// i.e. the reference window slides up across the feature
inline Image shift_image_rows(const Image& img, int k, float pad = 0.5f) {
  Image out(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) {
        const int src = r - k;
        out.at(r, c, ch) = (src < 0 || src >= img.height) ? pad : img.at(src, c, ch);
      }
  return out;
}

// the decoded angle of a bucket: k * width (one-hot at bucket 0 reads as
// "aligned", matching the training-label floor discretization)
inline double bucket_angle(int idx, int n_buckets) {
  return wrap_signed(idx * (kTau / n_buckets));
}

using RotationPredictor =
    std::function<rot::RotationDistribution(const Image& reference,
                                            const Image& tactile)>;

// One servo tick. R_t comes from the unshifted reference; T_t from the
// confidence grid search over orthogonal shifts of the reference window.
// The commanded turn steers against the predicted rotation and biases
// toward the confidence-maximizing lateral offset.
inline ServoStep servo_step(ServoState& state, const Image& tactile,
                            const RotationPredictor& predict,
                            const ServoConfig& cfg) {
  ServoStep out;
  double best_conf = -1.0;
  int best_offset = 0;
  std::optional<rot::RotationDistribution> dist0;
  for (const int k : cfg.lateral_offsets_px) {
    const Image ref = k == 0 ? state.reference_visual
                             : shift_image_rows(state.reference_visual, k);
    const auto dist = predict(ref, tactile);
    const double conf = rot::confidence(dist, cfg.confidence_mode);
    if (k == 0) dist0 = dist;
    if (conf > best_conf) {
      best_conf = conf;
      best_offset = k;
    }
  }
  out.best_confidence = best_conf;
  if (best_conf < cfg.confidence_floor || !dist0) {
    out.low_confidence = true;
    out.r_hat = state.r_hat;
    out.turn = 0.0;  // hold the previous heading
    return out;
  }
  out.r_t = bucket_angle(dist0->argmax(), dist0->n_buckets());
  state.r_hat = wrap_signed(state.r_hat + cfg.lambda * angle_diff(out.r_t, state.r_hat));
  out.r_hat = state.r_hat;
  out.chosen_offset_px = best_offset;
  // predicted rotation = how far the tactile frame has turned away from
  // the reference; steering back means turning by its negative. A positive
  // best offset put the reference content lower, i.e. the feature sits
  // below the sensor center, so bias the heading downward as well.
  out.turn = wrap_signed(-state.r_hat - cfg.lateral_gain * best_offset);
  return out;
}

// ---- contact ellipse baseline ----

struct EllipseServoState {
  double prev_turn = 0.0;
};

// Second-moment ellipse of the thresholded contact blob; the heading
// follows the major axis. Degenerate (round or empty) blobs hold the
// previous heading.
inline double ellipse_servo_step(EllipseServoState& state, const Image& tactile,
                                 const std::array<double, 3>& background,
                                 double dev_threshold = 0.08,
                                 double eccentricity_floor = 0.15) {
  double m00 = 0.0, mu = 0.0, mv = 0.0;
  for (int r = 0; r < tactile.height; ++r)
    for (int c = 0; c < tactile.width; ++c) {
      double dev = 0.0;
      for (int ch = 0; ch < 3; ++ch)
        dev += std::abs(double(tactile.at(r, c, ch)) - background[std::size_t(ch)]);
      dev /= 3.0;
      if (dev <= dev_threshold) continue;
      const double u = c, v = -r;  // patch frame, v up
      m00 += dev;
      mu += dev * u;
      mv += dev * v;
    }
  if (m00 <= 0.0) return state.prev_turn;
  const double cu = mu / m00, cv = mv / m00;
  double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
  for (int r = 0; r < tactile.height; ++r)
    for (int c = 0; c < tactile.width; ++c) {
      double dev = 0.0;
      for (int ch = 0; ch < 3; ++ch)
        dev += std::abs(double(tactile.at(r, c, ch)) - background[std::size_t(ch)]);
      dev /= 3.0;
      if (dev <= dev_threshold) continue;
      const double du = c - cu, dv = -r - cv;
      mu20 += dev * du * du;
      mu02 += dev * dv * dv;
      mu11 += dev * du * dv;
    }
  const double spread = mu20 + mu02;
  const double aniso = std::sqrt((mu20 - mu02) * (mu20 - mu02) + 4.0 * mu11 * mu11);
  if (spread <= 0.0 || aniso / spread < eccentricity_floor)
    return state.prev_turn;  // round blob: orientation undefined
  double angle = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
  // major axis is direction-less: take the representative nearest zero
  if (angle > kPi / 2.0) angle -= kPi;
  if (angle < -kPi / 2.0) angle += kPi;
  state.prev_turn = angle;
  return angle;
}

// spec wrappers matching the operation names
inline Decision baseline_l2_anomaly(L2AnomalyDetector& state, const Image& frame) {
  return state.step(frame);
}
inline double baseline_ellipse_servo(EllipseServoState& state, const Image& tactile,
                                     const std::array<double, 3>& background) {
  return ellipse_servo_step(state, tactile, background);
}

// ---- the sliding executor ----

struct SlideParams {
  double speed = 0.01;      // m/s (nominal)
  double tick_rate = 10.0;  // Hz
  double target_force = 20.0;
  int max_ticks = 2000;
  int image_size = 64;
};

struct TickRecord {
  int tick = 0;
  double t = 0.0;
  Pose2D pose;
  double speed_scale = 1.0;
  double score = 0.0;
  Decision decision = Decision::Cruise;
  double turn = 0.0;
  double press_depth = 0.0;
  double force = 0.0;
  std::vector<float> embedding;  // empty for non-embedding policies
};

struct SlideTrace {
  std::vector<TickRecord> ticks;
  std::string terminal_reason;  // stopped | max_ticks | path_end | boundary | force_unreachable
  int stop_tick = -1;
  Pose2D final_pose;
};

struct PolicyTick {
  Decision decision = Decision::Cruise;
  double speed_scale = 1.0;
  double turn = 0.0;  // servo policies steer; detector policies keep 0
  double score = 0.0;
  bool stop = false;
  std::vector<float> embedding;
};

// per-tick behavior; implementations wrap the detectors and servos above
struct SlidePolicy {
  virtual ~SlidePolicy() = default;
  virtual PolicyTick on_tick(const sim::TactilePatch& tactile) = 0;
};

class AnomalyPolicy final : public SlidePolicy {
public:
  AnomalyPolicy(enc::EncoderParams& enc, double m1 = 0.3, int n1 = 20,
                std::size_t window = 40)
      : encoders_(enc), detector_(m1, n1, window) {}
  PolicyTick on_tick(const sim::TactilePatch& tactile) override {
    PolicyTick out;
    const auto z = enc::encode_tactile(encoders_, tactile.pixels);
    out.decision = detector_.step(z);
    out.speed_scale = detector_.speed_scale();
    out.score = detector_.last_score();
    out.stop = detector_.stopped();
    out.embedding = z.values;
    return out;
  }

private:
  enc::EncoderParams& encoders_;
  AnomalyDetector detector_;
};

class SearchPolicy final : public SlidePolicy {
public:
  SearchPolicy(enc::EncoderParams& enc, EmbeddingVector query, double m2 = 0.6,
               int n2 = 60)
      : encoders_(enc), detector_(std::move(query), m2, n2) {}
  PolicyTick on_tick(const sim::TactilePatch& tactile) override {
    PolicyTick out;
    const auto z = enc::encode_tactile(encoders_, tactile.pixels);
    out.decision = detector_.step(z);
    out.speed_scale = detector_.speed_scale();
    out.score = detector_.last_score();
    out.stop = detector_.stopped();
    out.embedding = z.values;
    return out;
  }

private:
  enc::EncoderParams& encoders_;
  SearchDetector detector_;
};

class L2AnomalyPolicy final : public SlidePolicy {
public:
  explicit L2AnomalyPolicy(double threshold, int n1 = 20, std::size_t window = 40)
      : detector_(threshold, n1, window) {}
  PolicyTick on_tick(const sim::TactilePatch& tactile) override {
    PolicyTick out;
    out.decision = detector_.step(tactile.pixels);
    out.speed_scale = detector_.speed_scale();
    out.score = detector_.last_score();
    out.stop = detector_.stopped();
    return out;
  }

private:
  L2AnomalyDetector detector_;
};

inline RotationPredictor net_predictor(rot::RotationNetParams& rotnet) {
  return [&rotnet](const Image& ref, const Image& tac) {
    return rot::predict_rotation(rotnet, ref, tac);
  };
}

class ServoPolicy final : public SlidePolicy {
public:
  ServoPolicy(rot::RotationNetParams& rotnet, Image reference,
              ServoConfig cfg = {})
      : predict_(net_predictor(rotnet)), cfg_(std::move(cfg)) {
    state_.reference_visual = std::move(reference);
  }
  PolicyTick on_tick(const sim::TactilePatch& tactile) override {
    PolicyTick out;
    const auto step = servo_step(state_, tactile.pixels, predict_, cfg_);
    out.turn = step.turn;
    out.score = step.r_hat;
    return out;
  }

private:
  RotationPredictor predict_;
  ServoConfig cfg_;
  ServoState state_;
};

class EllipseServoPolicy final : public SlidePolicy {
public:
  explicit EllipseServoPolicy(std::array<double, 3> background)
      : background_(background) {}
  PolicyTick on_tick(const sim::TactilePatch& tactile) override {
    PolicyTick out;
    out.turn = ellipse_servo_step(state_, tactile.pixels, background_);
    out.score = out.turn;
    return out;
  }

private:
  std::array<double, 3> background_;
  EllipseServoState state_;
};

namespace detail {

struct PathWalker {
  std::vector<Vec2> pts;
  std::vector<double> cumulative;

  explicit PathWalker(std::vector<Vec2> path) : pts(std::move(path)) {
    cumulative.assign(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
      cumulative[i] = cumulative[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }

  Pose2D pose_at(double s) const {
    if (pts.size() < 2) return {pts.at(0).x, pts.at(0).y, 0.0};
    s = std::clamp(s, 0.0, length());
    std::size_t i = 1;
    while (i + 1 < pts.size() && cumulative[i] < s) ++i;
    const double seg = cumulative[i] - cumulative[i - 1];
    const double t = seg > 0.0 ? (s - cumulative[i - 1]) / seg : 0.0;
    const Vec2 p = pts[i - 1] + (pts[i] - pts[i - 1]) * t;
    const Vec2 d = pts[i] - pts[i - 1];
    return {p.x, p.y, wrap_angle(std::atan2(d.y, d.x))};
  }
};

}  // namespace detail

// Runs one sliding episode at 10 Hz logical ticks. With a path the pose
// follows it (heading = local tangent) and policy turns are ignored;
// without one the policy steers freely from the start pose.
inline SlideTrace run_slide(const sim::SurfaceScene& scene, SlidePolicy& policy,
                            const Pose2D& start,
                            const std::optional<std::vector<Vec2>>& path,
                            const SlideParams& params) {
  if (!scene.in_extent(start.position()))
    throw std::invalid_argument("run_slide: start outside scene extent");
  SlideTrace trace;
  const double dt = 1.0 / params.tick_rate;
  std::optional<detail::PathWalker> walker;
  double s = 0.0;
  Pose2D pose = start;
  if (path) {
    walker.emplace(*path);
    pose = walker->pose_at(0.0);
  }
  for (int tick = 0; tick < params.max_ticks; ++tick) {
    const auto depth = sim::solve_press_depth(scene, pose, params.target_force);
    if (!depth) {
      trace.terminal_reason = "force_unreachable";
      trace.final_pose = pose;
      return trace;
    }
    const auto tactile = sim::render_tactile(scene, pose, *depth, params.image_size);
    PolicyTick pt = policy.on_tick(tactile);

    TickRecord rec;
    rec.tick = tick;
    rec.t = tick * dt;
    rec.pose = pose;
    rec.speed_scale = pt.speed_scale;
    rec.score = pt.score;
    rec.decision = pt.decision;
    rec.turn = pt.turn;
    rec.press_depth = *depth;
    rec.force = tactile.contact_force;
    rec.embedding = std::move(pt.embedding);
    trace.ticks.push_back(std::move(rec));

    if (pt.stop) {
      trace.terminal_reason = "stopped";
      trace.stop_tick = tick;
      trace.final_pose = pose;
      return trace;
    }
    const double step_len = params.speed * pt.speed_scale * dt;
    if (walker) {
      s += step_len;
      if (s >= walker->length()) {
        trace.terminal_reason = "path_end";
        trace.final_pose = pose;
        return trace;
      }
      pose = walker->pose_at(s);
    } else {
      pose.theta = wrap_angle(pose.theta + pt.turn);
      pose.x += step_len * std::cos(pose.theta);
      pose.y += step_len * std::sin(pose.theta);
      if (!scene.in_extent(pose.position())) {
        trace.terminal_reason = "boundary";
        trace.final_pose = pose;
        return trace;
      }
    }
  }
  trace.terminal_reason = "max_ticks";
  trace.final_pose = pose;
  return trace;
}

// ---- trace persistence ----

inline void save_trace(const SlideTrace& trace, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_trace: cannot open " + path);
  f << json{{"type", "trace_header"},
            {"terminal_reason", trace.terminal_reason},
            {"stop_tick", trace.stop_tick},
            {"final_pose", {trace.final_pose.x, trace.final_pose.y, trace.final_pose.theta}}}
           .dump()
    << "\n";
  for (const auto& r : trace.ticks) {
    f << json{{"tick", r.tick},
              {"t", r.t},
              {"x", r.pose.x},
              {"y", r.pose.y},
              {"theta", r.pose.theta},
              {"speed_scale", r.speed_scale},
              {"score", r.score},
              {"decision", decision_name(r.decision)},
              {"turn", r.turn},
              {"press_depth", r.press_depth},
              {"force", r.force},
              {"embedding", r.embedding}}
             .dump()
      << "\n";
  }
}

inline SlideTrace load_trace(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_trace: cannot open " + path);
  SlideTrace trace;
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("load_trace: empty trace " + path);
  json header = json::parse(line);
  trace.terminal_reason = header.value("terminal_reason", "");
  trace.stop_tick = header.value("stop_tick", -1);
  if (header.contains("final_pose")) {
    trace.final_pose.x = header["final_pose"][0];
    trace.final_pose.y = header["final_pose"][1];
    trace.final_pose.theta = header["final_pose"][2];
  }
  auto decision_from = [](const std::string& s) {
    for (const Decision d : {Decision::Cruise, Decision::SlowConfirm,
                             Decision::AnomalyStop, Decision::FoundStop,
                             Decision::Resume})
      if (s == decision_name(d)) return d;
    throw std::runtime_error("load_trace: unknown decision " + s);
  };
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TickRecord r;
    r.tick = j.at("tick");
    r.t = j.at("t");
    r.pose = {j.at("x"), j.at("y"), j.at("theta")};
    r.speed_scale = j.at("speed_scale");
    r.score = j.at("score");
    r.decision = decision_from(j.at("decision"));
    r.turn = j.at("turn");
    r.press_depth = j.at("press_depth");
    r.force = j.at("force");
    r.embedding = j.at("embedding").get<std::vector<float>>();
    trace.ticks.push_back(std::move(r));
  }
  return trace;
}

// re-render the tactile stream of a recorded trace into image files
inline std::vector<std::string> replay_trace_frames(const sim::SurfaceScene& scene,
                                                    const SlideTrace& trace,
                                                    const std::string& out_dir,
                                                    int image_size = 64) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& r : trace.ticks) {
    const auto tactile = sim::render_tactile(scene, r.pose, r.press_depth, image_size);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.ppm", r.tick);
    const std::string p = out_dir + "/" + name;
    write_pnm(tactile.pixels, p);
    written.push_back(p);
  }
  return written;
}

}  // namespace vistac::sliding
