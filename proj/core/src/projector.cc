#include "gtad/projector.h"

#include <algorithm>

namespace gtad {

MlpParams make_mlp(ParameterStore& store, const std::string& prefix,
                   std::size_t in, std::size_t out, Rng& rng,
                   std::size_t hidden, LinearInit init) {
  if (hidden == 0) hidden = std::max(in, out);
  MlpParams p;
  p.in = in;
  p.hidden = hidden;
  p.out = out;
  p.layer1 = make_linear(store, prefix + ".layer1", in, hidden,
                         init, rng);
  p.layer2 = make_linear(store, prefix + ".layer2", hidden, out,
                         init, rng);
  return p;
}

FeatureGrid project(const ParameterStore& store, const MlpParams& p,
                    const Tensor& f) {
  Tape tape;
  return tape.value(ad::project(tape, store, p, tape.constant(f)));
}

namespace ad {

Var project(Tape& t, const ParameterStore& store, const MlpParams& p, Var f) {
  return linear(t, store, p.layer2, gelu(t, linear(t, store, p.layer1, f)));
}

}  // namespace ad
}  // namespace gtad
