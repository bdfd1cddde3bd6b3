#pragma once

// Seeded synthetic amplitude scene for exercising the detector end to end.
//
// A stable clutter field G is drawn once: Rayleigh speckle around a
// background mean, with rectangular bright structures and dark patches.
// Each reference pass observes G with a small multiplicative fluctuation. The
// image of interest follows the regression model itself,
//   y ~ Rayleigh(exp(b1 + b2 x2 + ... )),  x_i = reference pass i,
// and then receives square targets of constant amplitude that are absent
// from every reference pass.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rayreg/detection.hpp"
#include "rayreg/random.hpp"
#include "rayreg/rayleigh.hpp"

namespace rayreg {

struct SceneConfig {
  std::size_t rows = 200;
  std::size_t cols = 200;
  std::uint64_t seed = 7;

  double background_mean = 0.2;
  std::size_t bright_structures = 0;
  double bright_mean = 0.5;
  std::size_t dark_patches = 14;
  double dark_mean = 0.05;
  std::size_t references = 3;
  double pass_fluctuation = 0.15;  // references scale G by a factor in [1 - f, 1 + f]
  // Interest-image model: log mu = intercept + slope * (x_2 + ... + x_k). The
  // defaults put the mean near background_mean where every pass reads 0.2.
  double intercept = -3.1094;
  double slope = 2.5;

  std::size_t targets = 25;
  std::size_t target_size = 3;
  double target_amplitude = 10.0;
  // Targets sit on a jittered 5 x 5 grid inside this rectangle, which also
  // serves as the training region.
  Rect target_zone{20, 20, 65, 75};
  std::size_t grid_rows = 5;
  std::size_t grid_cols = 5;
  std::size_t jitter = 1;
};

struct SyntheticScene {
  ImageMatrix interest;
  std::vector<ImageMatrix> references;
  std::vector<TruthPoint> truth;  // target centres
  Rect training;
  std::size_t anomalous_training_pixels = 0;
};

namespace detail {

inline void paint_rects(std::vector<double>& field, std::size_t rows, std::size_t cols, std::size_t count,
                        std::size_t min_side, std::size_t max_side, double value, Rng& rng) {
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t h = min_side + static_cast<std::size_t>(uniform_index(rng, max_side - min_side + 1));
    const std::size_t w = min_side + static_cast<std::size_t>(uniform_index(rng, max_side - min_side + 1));
    const std::size_t r0 = static_cast<std::size_t>(uniform_index(rng, rows - h));
    const std::size_t c0 = static_cast<std::size_t>(uniform_index(rng, cols - w));
    for (std::size_t r = r0; r < r0 + h; ++r)
      for (std::size_t c = c0; c < c0 + w; ++c) field[r * cols + c] = value;
  }
}

}  // namespace detail

inline SyntheticScene make_scene(const SceneConfig& cfg) {
  if (!cfg.target_zone.within(cfg.rows, cfg.cols)) throw DomainError("scene: target zone outside the image");
  if (cfg.grid_rows * cfg.grid_cols < cfg.targets) throw DomainError("scene: target grid too small");
  if (cfg.references == 0) throw DomainError("scene: need at least one reference pass");
  Rng rng = make_rng(cfg.seed);
  const std::size_t n = cfg.rows * cfg.cols;

  std::vector<double> mean(n, cfg.background_mean);
  detail::paint_rects(mean, cfg.rows, cfg.cols, cfg.dark_patches, 8, 16, cfg.dark_mean, rng);
  detail::paint_rects(mean, cfg.rows, cfg.cols, cfg.bright_structures, 4, 9, cfg.bright_mean, rng);

  std::vector<double> clutter(n);
  for (std::size_t i = 0; i < n; ++i) clutter[i] = sample(RayleighMean(mean[i]), rng);

  SyntheticScene scene;
  for (std::size_t k = 0; k < cfg.references; ++k) {
    std::vector<double> pass(n);
    for (std::size_t i = 0; i < n; ++i)
      pass[i] = clutter[i] * (1.0 + cfg.pass_fluctuation * (2.0 * uniform_open01(rng) - 1.0));
    scene.references.emplace_back(cfg.rows, cfg.cols, std::move(pass));
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = cfg.intercept;
    for (const auto& ref : scene.references) eta += cfg.slope * ref.pixels()[i];
    y[i] = sample(RayleighMean(std::exp(eta)), rng);
  }

  const Rect& z = cfg.target_zone;
  const double cell_h = static_cast<double>(z.rows) / static_cast<double>(cfg.grid_rows);
  const double cell_w = static_cast<double>(z.cols) / static_cast<double>(cfg.grid_cols);
  const auto half = static_cast<std::ptrdiff_t>(cfg.target_size / 2);
  for (std::size_t t = 0; t < cfg.targets; ++t) {
    const std::size_t gr = t / cfg.grid_cols;
    const std::size_t gc = t % cfg.grid_cols;
    const auto jr = static_cast<std::ptrdiff_t>(uniform_index(rng, 2 * cfg.jitter + 1)) - static_cast<std::ptrdiff_t>(cfg.jitter);
    const auto jc = static_cast<std::ptrdiff_t>(uniform_index(rng, 2 * cfg.jitter + 1)) - static_cast<std::ptrdiff_t>(cfg.jitter);
    const auto cr = static_cast<std::ptrdiff_t>(static_cast<double>(z.row) + (static_cast<double>(gr) + 0.5) * cell_h) + jr;
    const auto cc = static_cast<std::ptrdiff_t>(static_cast<double>(z.col) + (static_cast<double>(gc) + 0.5) * cell_w) + jc;
    for (std::ptrdiff_t r = cr - half; r <= cr + half; ++r) {
      for (std::ptrdiff_t c = cc - half; c <= cc + half; ++c) {
        if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(cfg.rows) || c >= static_cast<std::ptrdiff_t>(cfg.cols))
          continue;
        y[static_cast<std::size_t>(r) * cfg.cols + static_cast<std::size_t>(c)] = cfg.target_amplitude;
        if (static_cast<std::size_t>(r) >= z.row && static_cast<std::size_t>(r) < z.row + z.rows &&
            static_cast<std::size_t>(c) >= z.col && static_cast<std::size_t>(c) < z.col + z.cols)
          ++scene.anomalous_training_pixels;
      }
    }
    scene.truth.push_back(TruthPoint{static_cast<double>(cr), static_cast<double>(cc)});
  }
  scene.interest = ImageMatrix(cfg.rows, cfg.cols, std::move(y));
  scene.training = z;
  return scene;
}

}  // namespace rayreg
