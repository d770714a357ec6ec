#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "vistac/sliding.hpp"

using namespace vistac;
using namespace vistac::sliding;

namespace {

EmbeddingVector basis(int i, int d = 8) {
  EmbeddingVector e;
  e.values.assign(std::size_t(d), 0.0f);
  e.values[std::size_t(i)] = 1.0f;
  return e;
}

EmbeddingVector unit(std::vector<float> v) {
  double n = 0.0;
  for (float x : v) n += double(x) * x;
  n = std::sqrt(n);
  for (auto& x : v) x = float(x / n);
  return EmbeddingVector{std::move(v)};
}

// Independent brute-force reimplementation of the confirm state machine:
// explicit lists, literal medians, no shared code with the library path.
struct NaiveMachine {
  double threshold;
  int confirm_n;
  std::size_t window_cap;  // 0 = no window (search)
  bool above;
  std::vector<std::vector<float>> window;
  std::vector<double> confirm;
  bool confirming = false;
  bool stopped = false;
  std::vector<float> query;

  static double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
  }
  static double dot(const std::vector<float>& a, const std::vector<float>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * b[i];
    return acc;
  }
  double score(const std::vector<float>& z) const {
    if (window_cap == 0) return dot(query, z);
    std::vector<double> sims;
    for (const auto& w : window) sims.push_back(dot(z, w));
    return median_of(sims);
  }
  bool trig(double s) const { return above ? s > threshold : s < threshold; }

  // returns the decision name
  std::string step(const std::vector<float>& z) {
    if (stopped) return above ? "found_stop" : "anomaly_stop";
    if (!confirming) {
      if (window_cap > 0 && window.size() < window_cap) {
        window.push_back(z);
        return "cruise";
      }
      const double s = score(z);
      if (trig(s)) {
        confirming = true;
        confirm.clear();
        return "slow_confirm";
      }
      if (window_cap > 0) {
        window.erase(window.begin());
        window.push_back(z);
      }
      return "cruise";
    }
    confirm.push_back(score(z));
    if (int(confirm.size()) < confirm_n) return "slow_confirm";
    const double med = median_of(confirm);
    confirming = false;
    confirm.clear();
    if (trig(med)) {
      stopped = true;
      return above ? "found_stop" : "anomaly_stop";
    }
    window.clear();
    return "resume";
  }
};

}  // namespace

TEST_CASE("lower median is the order statistic, not a midpoint", "[sliding]") {
  REQUIRE(lower_median({3.0, 1.0}) == 1.0);
  REQUIRE(lower_median({4.0, 1.0, 3.0, 2.0}) == 2.0);
  REQUIRE(lower_median({5.0}) == 5.0);
  REQUIRE(lower_median({2.0, 9.0, 4.0}) == 4.0);
  REQUIRE_THROWS_AS(lower_median({}), std::invalid_argument);
}

TEST_CASE("constant stream never leaves cruise", "[sliding]") {
  AnomalyDetector det(0.3, 20, 40);
  const auto z = basis(0);
  for (int i = 0; i < 300; ++i) {
    REQUIRE(det.step(z) == Decision::Cruise);
    REQUIRE(det.speed_scale() == 1.0);
  }
}

TEST_CASE("orthogonal embedding triggers the confirm phase", "[sliding]") {
  AnomalyDetector det(0.3, 20, 40);
  for (int i = 0; i < 40; ++i) REQUIRE(det.step(basis(0)) == Decision::Cruise);
  // median similarity of e2 against a window of e1 is 0 < 0.3
  REQUIRE(det.step(basis(1)) == Decision::SlowConfirm);
  REQUIRE(det.speed_scale() == 0.2);
}

TEST_CASE("confirm phase resolves by the literal median rule", "[sliding]") {
  // readings alternate similarity 0.0 / 0.6 against the window; over
  // n1 = 20 readings the lower median is 0.0 < 0.3, so it must stop
  AnomalyDetector det(0.3, 20, 40);
  const auto e0 = basis(0);
  for (int i = 0; i < 40; ++i) det.step(e0);
  REQUIRE(det.step(basis(1)) == Decision::SlowConfirm);
  const auto mixed = unit({0.6f, 0.8f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f});
  Decision last = Decision::SlowConfirm;
  for (int i = 0; i < 20; ++i) {
    last = det.step(i % 2 == 0 ? basis(1) : mixed);  // sims 0.0 / 0.6
    if (i < 19) REQUIRE(last == Decision::SlowConfirm);
  }
  REQUIRE(last == Decision::AnomalyStop);

  // flipping the ratio (11 high, 9 low) moves the lower median to 0.6
  AnomalyDetector det2(0.3, 20, 40);
  for (int i = 0; i < 40; ++i) det2.step(e0);
  REQUIRE(det2.step(basis(1)) == Decision::SlowConfirm);
  Decision last2 = Decision::SlowConfirm;
  for (int i = 0; i < 20; ++i) last2 = det2.step(i < 11 ? mixed : basis(1));
  REQUIRE(last2 == Decision::Resume);
  REQUIRE(det2.speed_scale() == 1.0);
}

TEST_CASE("window refills after a false alarm", "[sliding]") {
  AnomalyDetector det(0.3, 2, 4);
  for (int i = 0; i < 4; ++i) det.step(basis(0));
  REQUIRE(det.step(basis(1)) == Decision::SlowConfirm);
  const auto near = unit({1.0f, 0.25f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f});
  det.step(near);
  REQUIRE(det.step(near) == Decision::Resume);
  // window was cleared: the next 4 ticks are warm-up cruises even for an
  // orthogonal stream, which would otherwise trigger immediately
  for (int i = 0; i < 4; ++i) REQUIRE(det.step(basis(2)) == Decision::Cruise);
  REQUIRE(det.step(basis(3)) == Decision::SlowConfirm);
}

TEST_CASE("search mirrors anomaly with an inverted threshold", "[sliding]") {
  const auto query = basis(0);
  SearchDetector det(query, 0.6, 60);
  // orthogonal forever: cruise forever
  for (int i = 0; i < 100; ++i) REQUIRE(det.step(basis(1)) == Decision::Cruise);
  // matching stream: slow_confirm then found_stop after n2 readings
  REQUIRE(det.step(query) == Decision::SlowConfirm);
  Decision last = Decision::SlowConfirm;
  for (int i = 0; i < 60; ++i) last = det.step(query);
  REQUIRE(last == Decision::FoundStop);
  REQUIRE(det.stopped());
}

TEST_CASE("exact threshold ties resume cruising", "[sliding]") {
  // median exactly equal to m2: strict inequality fails, so resume.
  // 0.5 is exactly representable, so the tie is bit-exact.
  const auto query = basis(0);
  SearchDetector det(query, 0.5, 4);
  EmbeddingVector at_threshold{{0.5f, 0.8660254f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f}};
  EmbeddingVector above{{0.7f, 0.71414284f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f}};
  REQUIRE(det.step(above) == Decision::SlowConfirm);
  Decision last = Decision::SlowConfirm;
  for (int i = 0; i < 4; ++i) last = det.step(at_threshold);
  REQUIRE(last == Decision::Resume);
}

TEST_CASE("search rejects non-unit queries", "[sliding]") {
  EmbeddingVector bad{{2.0f, 0.0f}};
  REQUIRE_THROWS_AS(SearchDetector(bad, 0.6, 60), std::invalid_argument);
}

TEST_CASE("detectors match a brute-force oracle on random streams", "[sliding]") {
  Rng rng(2024);
  const int sequences = 200;
  for (int seq = 0; seq < sequences; ++seq) {
    const bool search_mode = rng.bernoulli(0.5);
    const double thr = search_mode ? 0.6 : 0.3;
    const int confirm_n = 3 + int(rng.uniform_index(6));
    const std::size_t window = search_mode ? 0 : 4 + rng.uniform_index(5);

    NaiveMachine naive{thr, confirm_n, window, search_mode, {}, {}, false, false,
                       basis(0).values};
    std::optional<AnomalyDetector> anom;
    std::optional<SearchDetector> srch;
    if (search_mode)
      srch.emplace(basis(0), thr, confirm_n);
    else
      anom.emplace(thr, confirm_n, window);

    for (int t = 0; t < 120; ++t) {
      // random walks biased to hover near the threshold
      std::vector<float> v(8, 0.0f);
      const double target = thr + rng.uniform(-0.35, 0.35);
      v[0] = float(std::clamp(target, -0.99, 0.99));
      v[1] = float(std::sqrt(std::max(0.0, 1.0 - double(v[0]) * v[0])));
      const auto z = unit(std::move(v));
      const std::string expected = naive.step(z.values);
      const Decision got = search_mode ? srch->step(z) : anom->step(z);
      REQUIRE(decision_name(got) == expected);
    }
  }
}

TEST_CASE("l2 baseline distance matches hand arithmetic and triggers",
          "[sliding]") {
  // frame vs inverted frame of constant 0.2 / 0.8: distance 0.6*sqrt(64*64*3)
  const double expected = 0.6 * std::sqrt(64.0 * 64.0 * 3.0);
  L2AnomalyDetector det(expected - 1.0, 2, 3);
  Image a(64, 64, 3, 0.2f), b(64, 64, 3, 0.8f);
  for (int i = 0; i < 3; ++i) REQUIRE(det.step(a) == Decision::Cruise);
  REQUIRE(det.step(a) == Decision::Cruise);  // distance 0: below threshold
  REQUIRE(det.step(b) == Decision::SlowConfirm);
  det.step(b);
  REQUIRE(det.step(b) == Decision::AnomalyStop);
}

TEST_CASE("quantile calibration picks the nearest rank", "[sliding]") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(double(i));
  REQUIRE(quantile(v, 0.99) == 99.0);
  REQUIRE(quantile(v, 1.0) == 100.0);
  REQUIRE(quantile({5.0}, 0.99) == 5.0);
}

TEST_CASE("exponential smoothing follows the geometric approach", "[sliding]") {
  // fixed predictor: one-hot at 40 degrees (bucket 2 of 18)
  auto predictor = [](const Image&, const Image&) {
    rot::RotationDistribution d;
    d.probs.assign(18, 0.0f);
    d.probs[2] = 1.0f;
    return d;
  };
  ServoState state;
  state.reference_visual = Image(16, 16, 1, 0.5f);
  ServoConfig cfg;
  cfg.lateral_offsets_px = {0};
  const Image tac(16, 16, 3, 0.5f);
  const double deg = kPi / 180.0;
  auto s1 = servo_step(state, tac, predictor, cfg);
  REQUIRE(s1.r_hat == Catch::Approx(32.0 * deg).margin(1e-9));
  auto s2 = servo_step(state, tac, predictor, cfg);
  REQUIRE(s2.r_hat == Catch::Approx(38.4 * deg).margin(1e-9));
  auto s3 = servo_step(state, tac, predictor, cfg);
  REQUIRE(s3.r_hat == Catch::Approx(39.68 * deg).margin(1e-9));
}

TEST_CASE("one-hot at bucket zero commands a straight heading", "[sliding]") {
  auto predictor = [](const Image&, const Image&) {
    rot::RotationDistribution d;
    d.probs.assign(18, 0.0f);
    d.probs[0] = 1.0f;
    return d;
  };
  ServoState state;
  state.reference_visual = Image(16, 16, 1, 0.5f);
  ServoConfig cfg;
  cfg.lateral_offsets_px = {0};
  const Image tac(16, 16, 3, 0.5f);
  for (int i = 0; i < 5; ++i) {
    const auto s = servo_step(state, tac, predictor, cfg);
    REQUIRE(s.turn == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("low confidence holds the previous heading and flags", "[sliding]") {
  auto predictor = [](const Image&, const Image&) {
    rot::RotationDistribution d;
    d.probs.assign(18, 1.0f / 18.0f);  // uniform: zero confidence
    return d;
  };
  ServoState state;
  state.reference_visual = Image(16, 16, 1, 0.5f);
  state.r_hat = 0.5;
  ServoConfig cfg;
  const Image tac(16, 16, 3, 0.5f);
  const auto s = servo_step(state, tac, predictor, cfg);
  REQUIRE(s.low_confidence);
  REQUIRE(s.turn == 0.0);
  REQUIRE(state.r_hat == 0.5);  // untouched
}

TEST_CASE("ellipse fit recovers a synthetic ridge angle", "[sliding]") {
  const std::array<double, 3> bg{0.35, 0.45, 0.55};
  const double angle = 30.0 * kPi / 180.0;
  Image img(64, 64, 3);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      const double u = c - 31.5, v = 31.5 - r;
      const double d = std::abs(-std::sin(angle) * u + std::cos(angle) * v);
      for (int ch = 0; ch < 3; ++ch)
        img.at(r, c, ch) = float(bg[std::size_t(ch)] + (d < 3.0 ? 0.3 : 0.0));
    }
  EllipseServoState state;
  const double got = ellipse_servo_step(state, img, bg);
  REQUIRE(got == Catch::Approx(angle).margin(3.0 * kPi / 180.0));

  // circular blob: orientation undefined, hold previous
  Image blob(64, 64, 3);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      const double u = c - 31.5, v = 31.5 - r;
      const bool in = u * u + v * v < 100.0;
      for (int ch = 0; ch < 3; ++ch)
        blob.at(r, c, ch) = float(bg[std::size_t(ch)] + (in ? 0.3 : 0.0));
    }
  REQUIRE(ellipse_servo_step(state, blob, bg) == Catch::Approx(got));
}

namespace {

struct ScriptedPolicy final : SlidePolicy {
  int stop_at = -1;
  int calls = 0;
  PolicyTick on_tick(const sim::TactilePatch&) override {
    PolicyTick out;
    out.decision = Decision::Cruise;
    if (stop_at >= 0 && calls == stop_at) {
      out.decision = Decision::AnomalyStop;
      out.stop = true;
    }
    ++calls;
    return out;
  }
};

}  // namespace

TEST_CASE("executor follows paths, stops, and terminates cleanly", "[sliding]") {
  sim::SceneConfig cfg;
  cfg.extent_x = 0.12;
  cfg.extent_y = 0.12;
  const auto scene = sim::generate_scene(3, cfg);
  SlideParams params;
  params.max_ticks = 50;

  // path mode: zero-feature scene, no stop -> runs out of ticks
  ScriptedPolicy cruise_only;
  std::vector<Vec2> path{{0.02, 0.06}, {0.10, 0.06}};
  auto trace = run_slide(scene, cruise_only, {0.02, 0.06, 0.0}, path, params);
  REQUIRE(trace.terminal_reason == "max_ticks");
  REQUIRE(trace.ticks.size() == 50);
  // 10 Hz at 1 cm/s: 1 mm per tick along +x
  REQUIRE(trace.ticks[10].pose.x ==
          Catch::Approx(0.02 + 0.001 * 10).margin(1e-9));
  REQUIRE(trace.ticks[10].pose.theta == Catch::Approx(0.0).margin(1e-12));

  // scripted stop is recorded with the stop tick
  ScriptedPolicy stopper;
  stopper.stop_at = 7;
  trace = run_slide(scene, stopper, {0.02, 0.06, 0.0}, path, params);
  REQUIRE(trace.terminal_reason == "stopped");
  REQUIRE(trace.stop_tick == 7);

  // short path ends with path_end
  ScriptedPolicy runner;
  std::vector<Vec2> short_path{{0.02, 0.06}, {0.03, 0.06}};
  trace = run_slide(scene, runner, {0.02, 0.06, 0.0}, short_path, params);
  REQUIRE(trace.terminal_reason == "path_end");
}

TEST_CASE("trace round-trips and decisions replay bit-exactly", "[sliding]") {
  // build a synthetic trace through the real detector, save, reload, and
  // re-drive a fresh detector from the stored embeddings
  AnomalyDetector det(0.3, 3, 5);
  SlideTrace trace;
  Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    std::vector<float> v(8, 0.0f);
    v[0] = float(rng.uniform(-0.2, 1.0));
    v[1] = float(std::sqrt(std::max(0.0, 1.0 - double(v[0]) * v[0])));
    EmbeddingVector z{v};
    TickRecord rec;
    rec.tick = t;
    rec.t = 0.1 * t;
    rec.pose = {0.01 * t, 0.02, 0.3};
    rec.decision = det.step(z);
    rec.speed_scale = det.speed_scale();
    rec.score = det.last_score();
    rec.embedding = z.values;
    trace.ticks.push_back(rec);
    if (det.stopped()) break;
  }
  trace.terminal_reason = det.stopped() ? "stopped" : "max_ticks";
  const auto path =
      (std::filesystem::temp_directory_path() / "vistac_trace.jsonl").string();
  save_trace(trace, path);
  const auto loaded = load_trace(path);
  REQUIRE(loaded.ticks.size() == trace.ticks.size());
  REQUIRE(loaded.terminal_reason == trace.terminal_reason);

  AnomalyDetector replay(0.3, 3, 5);
  for (const auto& rec : loaded.ticks) {
    EmbeddingVector z{rec.embedding};
    REQUIRE(replay.step(z) == rec.decision);
    REQUIRE(replay.speed_scale() == rec.speed_scale);
  }
  std::filesystem::remove(path);
}
