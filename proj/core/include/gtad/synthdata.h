#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtad/mask.h"
#include "gtad/tensor.h"

namespace gtad {

// MVTec 3D-AD object categories, used as realistic prompt tokens.
const std::vector<std::string>& class_catalog();

enum class Corruption { kGeometry, kAppearance };

struct SynthConfig {
  std::vector<std::string> classes{"bagel", "cable gland", "carrot", "cookie"};
  std::size_t n_train_per_class = 64;
  std::size_t n_test_per_class = 64;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t d_latent = 4;
  std::size_t d_rgb = 12;
  std::size_t d_3d = 18;
  std::size_t smoothness = 2;
  double noise_sigma = 0.05;
  std::size_t border = 1;
  double area_frac_min = 0.02;
  double area_frac_max = 0.15;
  Corruption corruption = Corruption::kGeometry;
};

// Throws ConfigError describing the first invalid field.
void validate(const SynthConfig& cfg);

// Per-class generative model: a smooth latent field Z (H x W x D_latent) is
// observed through two linear maps, rgb = Z a_rgb + noise and
// 3d = Z a_3d + noise.
struct ClassGenerator {
  std::string class_name;
  Tensor a_rgb;  // D_latent x D_rgb
  Tensor a_3d;   // D_latent x D_3d
  std::size_t smoothness = 2;
  double noise_sigma = 0.05;
};

// Draws both maps from a Gaussian, redrawing until each has full rank
// D_latent, then orthonormalizes the rows and scales them by
// sqrt(D_out / D_latent). Features therefore keep the latent's per-patch norm
// up to that factor.
ClassGenerator make_class_generator(const std::string& class_name,
                                    std::size_t d_latent, std::size_t d_rgb,
                                    std::size_t d_3d, std::size_t smoothness,
                                    double noise_sigma, std::uint64_t seed);

std::size_t matrix_rank(const Tensor& m, double tol = 1e-9);

struct LabeledSample {
  std::string class_name;
  FeatureGrid f_rgb;
  FeatureGrid f_3d;
  ValidityMask mask;
  PixelMask gt;
  bool is_anomalous = false;
};

// Seeded latent field: N(0,1) noise, 3x3 box blur applied `smoothness`
// times (edge-clamped), standardized per channel, then rescaled so every
// patch vector has norm sqrt(D_latent).
Tensor latent_field(std::size_t height, std::size_t width, std::size_t d_latent,
                    std::size_t smoothness, std::uint64_t seed);

// Nominal sample. The validity mask excludes a frame of `border` pixels.
LabeledSample gen_nominal(const ClassGenerator& cg, std::uint64_t seed,
                          std::size_t height, std::size_t width,
                          std::size_t border = 1);

struct AreaRange {
  double min = 0.02;
  double max = 0.15;
};

// Replaces the features of one modality inside a seeded elliptical blob with
// the image of an independent latent field, breaking RGB/3D consistency.
// The blob holds round(f * |valid|) pixels, f drawn from `area`.
LabeledSample inject_anomaly(const LabeledSample& nominal,
                             const ClassGenerator& cg, std::uint64_t seed,
                             AreaRange area = {},
                             Corruption corruption = Corruption::kGeometry);

struct Dataset {
  std::vector<ClassGenerator> generators;
  std::vector<LabeledSample> train;  // nominal only
  std::vector<LabeledSample> test;   // per class: alternating nominal/anomalous
};

Dataset gen_dataset(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace gtad
