#include "gtad/synthdata.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gtad/error.h"
#include "gtad/ops.h"
#include "gtad/rng.h"

namespace gtad {

namespace {

enum SeedTag : std::uint64_t {
  kTagClass = 1,
  kTagTrain = 2,
  kTagTestNominal = 3,
  kTagTestAnomaly = 4,
  kTagLatent = 5,
  kTagNoise = 6,
  kTagBlob = 7,
};

// Gaussian draw, rows orthonormalized and scaled by sqrt(cols / rows) so a
// latent vector of norm r maps to a feature of norm r * sqrt(cols / rows).
// Returns false if the draw was rank deficient.
bool random_map(Tensor& m, Rng& rng) {
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  for (double& v : m.values()) v = rng.normal();
  if (matrix_rank(m) < rows) return false;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += m.at(i, j) * m.at(k, j);
      for (std::size_t j = 0; j < cols; ++j) m.at(i, j) -= dot * m.at(k, j);
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < cols; ++j) norm += m.at(i, j) * m.at(i, j);
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < cols; ++j) m.at(i, j) /= norm;
  }
  const double scale = std::sqrt(static_cast<double>(cols) / static_cast<double>(rows));
  for (double& v : m.values()) v *= scale;
  return true;
}

void add_noise(Tensor& t, double sigma, Rng& rng) {
  if (sigma == 0.0) return;
  for (double& v : t.values()) v += sigma * rng.normal();
}

}  // namespace

const std::vector<std::string>& class_catalog() {
  static const std::vector<std::string> names{
      "bagel", "cable gland", "carrot", "cookie", "dowel",
      "foam",  "peach",       "potato", "rope",   "tire"};
  return names;
}

void validate(const SynthConfig& cfg) {
  if (cfg.classes.empty()) throw ConfigError("data.classes: need at least one class");
  for (const auto& c : cfg.classes) {
    if (c.empty()) throw ConfigError("data.classes: empty class name");
  }
  if (cfg.height < 4 || cfg.width < 4) throw ConfigError("data.height/width: must be >= 4");
  if (2 * cfg.border + 2 > std::min(cfg.height, cfg.width)) {
    throw ConfigError("data.border: leaves no valid interior");
  }
  if (cfg.d_latent == 0 || cfg.d_rgb < cfg.d_latent || cfg.d_3d < cfg.d_latent) {
    throw ConfigError("data.d_latent: must be positive and <= d_rgb, d_3d");
  }
  if (cfg.d_rgb < 2 || cfg.d_3d < 2) throw ConfigError("data.d_rgb/d_3d: must be >= 2");
  if (cfg.n_test_per_class % 2 != 0) {
    throw ConfigError("data.n_test_per_class: must be even (50/50 split)");
  }
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
    throw ConfigError("data.noise_sigma: must be finite and >= 0");
  }
  if (!(cfg.area_frac_min > 0.0 && cfg.area_frac_min <= cfg.area_frac_max &&
        cfg.area_frac_max < 1.0)) {
    throw ConfigError("data.area_frac_min/max: need 0 < min <= max < 1");
  }
}

std::size_t matrix_rank(const Tensor& m, double tol) {
  Tensor a = m;
  const std::size_t rows = a.rows(), cols = a.cols();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < rows; ++r) {
      if (std::abs(a.at(r, c)) > std::abs(a.at(pivot, c))) pivot = r;
    }
    if (std::abs(a.at(pivot, c)) <= tol) continue;
    for (std::size_t j = 0; j < cols; ++j) std::swap(a.at(rank, j), a.at(pivot, j));
    for (std::size_t r = rank + 1; r < rows; ++r) {
      const double f = a.at(r, c) / a.at(rank, c);
      for (std::size_t j = c; j < cols; ++j) a.at(r, j) -= f * a.at(rank, j);
    }
    ++rank;
  }
  return rank;
}

ClassGenerator make_class_generator(const std::string& class_name,
                                    std::size_t d_latent, std::size_t d_rgb,
                                    std::size_t d_3d, std::size_t smoothness,
                                    double noise_sigma, std::uint64_t seed) {
  Rng rng(seed);
  ClassGenerator cg;
  cg.class_name = class_name;
  cg.smoothness = smoothness;
  cg.noise_sigma = noise_sigma;
  cg.a_rgb = Tensor({d_latent, d_rgb});
  while (!random_map(cg.a_rgb, rng)) {
  }
  cg.a_3d = Tensor({d_latent, d_3d});
  while (!random_map(cg.a_3d, rng)) {
  }
  return cg;
}

Tensor latent_field(std::size_t height, std::size_t width, std::size_t d_latent,
                    std::size_t smoothness, std::uint64_t seed) {
  Rng rng(seed);
  Tensor z({height, width, d_latent});
  for (double& v : z.values()) v = rng.normal();
  Tensor tmp = z;
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t pass = 0; pass < smoothness; ++pass) {
    for (std::ptrdiff_t r = 0; r < h; ++r) {
      for (std::ptrdiff_t c = 0; c < w; ++c) {
        for (std::size_t k = 0; k < d_latent; ++k) {
          double s = 0.0;
          for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
            for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
              const auto rr = static_cast<std::size_t>(std::clamp(r + dr, std::ptrdiff_t{0}, h - 1));
              const auto cc = static_cast<std::size_t>(std::clamp(c + dc, std::ptrdiff_t{0}, w - 1));
              s += z[(rr * width + cc) * d_latent + k];
            }
          }
          tmp[(static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)) * d_latent + k] = s / 9.0;
        }
      }
    }
    std::swap(z, tmp);
  }
  const std::size_t n = height * width;
  for (std::size_t k = 0; k < d_latent; ++k) {
    double mean = 0.0;
    for (std::size_t p = 0; p < n; ++p) mean += z[p * d_latent + k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double d = z[p * d_latent + k] - mean;
      var += d * d;
    }
    const double inv = 1.0 / std::sqrt(var / static_cast<double>(n) + 1e-12);
    for (std::size_t p = 0; p < n; ++p) {
      z[p * d_latent + k] = (z[p * d_latent + k] - mean) * inv;
    }
  }
  // Constant per-patch norm, like layer-normalized backbone features.
  const double target = std::sqrt(static_cast<double>(d_latent));
  for (std::size_t p = 0; p < n; ++p) {
    auto v = z.row_span(p);
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double f = sq > 0.0 ? target / std::sqrt(sq) : 0.0;
    for (double& x : v) x *= f;
  }
  return z;
}

LabeledSample gen_nominal(const ClassGenerator& cg, std::uint64_t seed,
                          std::size_t height, std::size_t width,
                          std::size_t border) {
  if (height < 4 || width < 4) throw ConfigError("gen_nominal: H and W must be >= 4");
  const std::size_t d_latent = cg.a_rgb.shape()[0];
  const Tensor z = latent_field(height, width, d_latent, cg.smoothness,
                                derive_seed(seed, kTagLatent));
  Rng noise(derive_seed(seed, kTagNoise));
  LabeledSample s;
  s.class_name = cg.class_name;
  s.f_rgb = matmul(z, cg.a_rgb);
  s.f_3d = matmul(z, cg.a_3d);
  add_noise(s.f_rgb, cg.noise_sigma, noise);
  add_noise(s.f_3d, cg.noise_sigma, noise);
  s.mask = ValidityMask(height, width, true);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (r < border || c < border || r + border >= height || c + border >= width) {
        s.mask.set(r, c, false);
      }
    }
  }
  s.gt = PixelMask(height, width, false);
  s.is_anomalous = false;
  return s;
}

LabeledSample inject_anomaly(const LabeledSample& nominal,
                             const ClassGenerator& cg, std::uint64_t seed,
                             AreaRange area, Corruption corruption) {
  if (nominal.is_anomalous) throw ValidationError("inject_anomaly: input is not nominal");
  const std::size_t h = nominal.mask.height(), w = nominal.mask.width();
  std::vector<std::size_t> valid;
  std::size_t r_lo = h, r_hi = 0, c_lo = w, c_hi = 0;
  for (std::size_t p = 0; p < nominal.mask.size(); ++p) {
    if (!nominal.mask[p]) continue;
    valid.push_back(p);
    r_lo = std::min(r_lo, p / w);
    r_hi = std::max(r_hi, p / w);
    c_lo = std::min(c_lo, p % w);
    c_hi = std::max(c_hi, p % w);
  }
  if (valid.empty()) throw ValidationError("inject_anomaly: no valid pixels");

  Rng rng(derive_seed(seed, kTagBlob));
  const double frac = area.min == area.max ? area.min : rng.uniform(area.min, area.max);
  const auto target = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(valid.size()))));

  bool placed = false;
  double cy = 0, cx = 0, ry = 0, rx = 0;
  for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
    const double aspect = std::exp(rng.uniform(-std::numbers::ln2, std::numbers::ln2));
    const double radius2 = static_cast<double>(target) / std::numbers::pi;
    ry = std::sqrt(radius2 / aspect);
    rx = std::sqrt(radius2 * aspect);
    const double y0 = static_cast<double>(r_lo) + ry - 0.5;
    const double y1 = static_cast<double>(r_hi) - ry + 0.5;
    const double x0 = static_cast<double>(c_lo) + rx - 0.5;
    const double x1 = static_cast<double>(c_hi) - rx + 0.5;
    if (y0 > y1 || x0 > x1) continue;
    cy = rng.uniform(y0, y1);
    cx = rng.uniform(x0, x1);
    placed = true;
  }
  if (!placed) {
    throw ValidationError("inject_anomaly: blob of " + std::to_string(target) +
                          " pixels does not fit in the valid area after 100 tries");
  }

  // The `target` valid pixels closest to the centre in the ellipse metric.
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(valid.size());
  for (std::size_t p : valid) {
    const double dy = (static_cast<double>(p / w) - cy) / ry;
    const double dx = (static_cast<double>(p % w) - cx) / rx;
    ranked.emplace_back(dy * dy + dx * dx, p);
  }
  std::sort(ranked.begin(), ranked.end());

  LabeledSample out = nominal;
  out.is_anomalous = true;
  const std::size_t d_latent = cg.a_rgb.shape()[0];
  const Tensor z = latent_field(h, w, d_latent, cg.smoothness,
                                derive_seed(seed, kTagLatent));
  Rng noise(derive_seed(seed, kTagNoise));
  const Tensor& a = corruption == Corruption::kGeometry ? cg.a_3d : cg.a_rgb;
  FeatureGrid& target_grid = corruption == Corruption::kGeometry ? out.f_3d : out.f_rgb;
  const std::size_t d = a.cols();
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t p = ranked[i].second;
    out.gt.set(p, true);
    auto row = target_grid.row_span(p);
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < d_latent; ++k) v += z[p * d_latent + k] * a.at(k, j);
      row[j] = v + (cg.noise_sigma > 0.0 ? cg.noise_sigma * noise.normal() : 0.0);
    }
  }
  return out;
}

Dataset gen_dataset(const SynthConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Dataset ds;
  const AreaRange area{cfg.area_frac_min, cfg.area_frac_max};
  for (std::size_t ci = 0; ci < cfg.classes.size(); ++ci) {
    ds.generators.push_back(make_class_generator(
        cfg.classes[ci], cfg.d_latent, cfg.d_rgb, cfg.d_3d, cfg.smoothness,
        cfg.noise_sigma, derive_seed(seed, kTagClass, ci)));
  }
  for (std::size_t ci = 0; ci < cfg.classes.size(); ++ci) {
    const ClassGenerator& cg = ds.generators[ci];
    for (std::size_t i = 0; i < cfg.n_train_per_class; ++i) {
      const std::uint64_t s = derive_seed(seed, kTagTrain, ci * cfg.n_train_per_class + i);
      ds.train.push_back(gen_nominal(cg, s, cfg.height, cfg.width, cfg.border));
    }
  }
  for (std::size_t ci = 0; ci < cfg.classes.size(); ++ci) {
    const ClassGenerator& cg = ds.generators[ci];
    for (std::size_t i = 0; i < cfg.n_test_per_class; ++i) {
      const std::uint64_t index = ci * cfg.n_test_per_class + i;
      LabeledSample s = gen_nominal(cg, derive_seed(seed, kTagTestNominal, index),
                                    cfg.height, cfg.width, cfg.border);
      if (i % 2 == 1) {
        s = inject_anomaly(s, cg, derive_seed(seed, kTagTestAnomaly, index), area,
                           cfg.corruption);
      }
      ds.test.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace gtad
