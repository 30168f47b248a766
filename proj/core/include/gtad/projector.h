#pragma once

#include <string>

#include "gtad/autodiff.h"
#include "gtad/params.h"
#include "gtad/rng.h"
#include "gtad/tensor.h"

namespace gtad {

// Two-layer perceptron layer2(GELU(layer1(x))) applied per patch.
struct MlpParams {
  LinearParams layer1;
  LinearParams layer2;
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
};

// Hidden width defaults to max(in, out).
MlpParams make_mlp(ParameterStore& store, const std::string& prefix,
                   std::size_t in, std::size_t out, Rng& rng,
                   std::size_t hidden = 0,
                   LinearInit init = LinearInit::kUniform);

FeatureGrid project(const ParameterStore& store, const MlpParams& p,
                    const Tensor& f);

namespace ad {
Var project(Tape& t, const ParameterStore& store, const MlpParams& p, Var f);
}  // namespace ad

}  // namespace gtad
