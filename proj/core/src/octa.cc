#include "gtad/octa.h"

#include <cctype>
#include <cmath>
#include <sstream>

#include "gtad/error.h"

namespace gtad {

PromptCatalog PromptCatalog::defaults() {
  return PromptCatalog{
      {"[c]", "flawless [c]", "perfect [c]", "unblemished [c]",
       "[c] without flaw", "[c] without defect", "[c] without damage"},
      {"a photo of a [s].", "a photo of the [s]."}};
}

namespace {

std::string replace_all(std::string text, const std::string& token,
                        const std::string& with) {
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), with);
    pos += with.size();
  }
  return text;
}

std::string normalize_token(const std::string& raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out = raw.substr(b, e - b);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<std::string> build_prompts(const std::string& class_name,
                                       const PromptCatalog& catalog) {
  if (class_name.empty()) throw ValidationError("build_prompts: empty class name");
  std::vector<std::string> out;
  out.reserve(catalog.states.size() * catalog.templates.size());
  for (const auto& state : catalog.states) {
    const std::string s = replace_all(state, "[c]", class_name);
    for (const auto& tmpl : catalog.templates) {
      out.push_back(replace_all(tmpl, "[s]", s));
    }
  }
  return out;
}

HashingTextEmbedder::HashingTextEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim == 0) throw ConfigError("text embedding width must be positive");
}

Tensor HashingTextEmbedder::embed(std::span<const std::string> sentences) const {
  if (sentences.empty()) throw ValidationError("embed: no sentences");
  Tensor out({sentences.size(), dim_});
  std::vector<double> token(dim_);
  for (std::size_t r = 0; r < sentences.size(); ++r) {
    auto row = out.row_span(r);
    std::istringstream words(sentences[r]);
    std::string word;
    while (words >> word) {
      const std::string tok = normalize_token(word);
      if (tok.empty()) continue;
      Rng rng(derive_seed(seed_, fnv1a(tok)));
      double norm = 0.0;
      for (double& v : token) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < dim_; ++j) row[j] += token[j] / norm;
    }
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : row) v /= norm;
    }
  }
  return out;
}

MoeParams make_moe(ParameterStore& store, const std::string& prefix,
                   std::size_t dim, std::size_t experts, std::size_t k,
                   Rng& rng) {
  if (experts == 0 || k == 0 || k > experts) {
    throw ConfigError("mixture of experts needs 1 <= k <= experts (k=" +
                      std::to_string(k) + ", experts=" +
                      std::to_string(experts) + ")");
  }
  MoeParams p;
  p.k = k;
  for (std::size_t e = 0; e < experts; ++e) {
    p.experts.push_back(
        make_mlp(store, prefix + ".expert" + std::to_string(e), dim, dim, rng, 0, LinearInit::kUnitGain));
  }
  p.gate = make_linear(store, prefix + ".gate", dim, experts,
                       LinearInit::kUniform, rng);
  return p;
}

PrototypeParams make_prototype(ParameterStore& store, const std::string& prefix,
                               std::size_t dim, double dropout_rate, Rng& rng) {
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  PrototypeParams p;
  // Unit-variance query, as for embedding tables.
  Tensor proto({1, dim});
  for (double& v : proto.values()) v = rng.normal();
  p.prototype = store.add(prefix + ".prototype", std::move(proto));
  p.wq = make_linear(store, prefix + ".wq", dim, dim, LinearInit::kUnitGain, rng, false);
  p.wk = make_linear(store, prefix + ".wk", dim, dim, LinearInit::kUnitGain, rng, false);
  p.wv = make_linear(store, prefix + ".wv", dim, dim, LinearInit::kUnitGain, rng, false);
  p.scale = std::sqrt(static_cast<double>(dim));
  p.post_mlp = make_mlp(store, prefix + ".post_mlp", dim, dim, rng);
  p.ffn = make_mlp(store, prefix + ".ffn", dim, dim, rng);
  p.final_ln = make_layer_norm(store, prefix + ".final_ln", dim);
  p.dropout_rate = dropout_rate;
  return p;
}

OctaParams make_octa(ParameterStore& store, const std::string& prefix,
                     std::size_t dim, std::size_t experts, std::size_t k,
                     double dropout_rate, Rng& rng) {
  OctaParams p;
  p.dim = dim;
  p.moe = make_moe(store, prefix + ".moe", dim, experts, k, rng);
  p.proto = make_prototype(store, prefix + ".proto", dim, dropout_rate, rng);
  return p;
}

MoeOutput moe_forward(const ParameterStore& store, const MoeParams& p,
                      const Tensor& text) {
  Tape tape;
  auto out = ad::moe_forward(tape, store, p, tape.constant(text));
  return {tape.value(out.enhanced), std::move(out.selected)};
}

AttentionOutput prototype_attention(const ParameterStore& store,
                                    const PrototypeParams& p,
                                    const Tensor& enhanced) {
  Tape tape;
  Var weights;
  Var attended =
      ad::prototype_attention(tape, store, p, tape.constant(enhanced), &weights);
  return {tape.value(attended), tape.value(weights)};
}

Tensor octa_refine(const ParameterStore& store, const PrototypeParams& p,
                   const Tensor& attended, Mode mode, Rng* dropout_rng) {
  Tape tape;
  return tape.value(
      ad::octa_refine(tape, store, p, tape.constant(attended), mode, dropout_rng));
}

TextAnchor octa_forward(const std::string& class_name,
                        const PromptCatalog& catalog,
                        const TextEmbedder& embedder,
                        const ParameterStore& store, const OctaParams& p,
                        Mode mode, Rng* dropout_rng) {
  const auto prompts = build_prompts(class_name, catalog);
  Tape tape;
  Var text = tape.constant(embedder.embed(prompts));
  return TextAnchor(
      tape.value(ad::octa_forward(tape, store, p, text, mode, dropout_rng)));
}

namespace ad {

MoeVars moe_forward(Tape& t, const ParameterStore& store, const MoeParams& p,
                    Var text) {
  TopK gates = topk_softmax(t, linear(t, store, p.gate, text), p.k);
  std::vector<bool> used(p.experts.size(), false);
  for (const auto& row : gates.selected) {
    for (std::size_t e : row) used[e] = true;
  }
  std::optional<Var> sum;
  for (std::size_t e = 0; e < p.experts.size(); ++e) {
    if (!used[e]) continue;
    Var y = scale_rows(t, project(t, store, p.experts[e], text), gates.weights, e);
    sum = sum ? add(t, *sum, y) : y;
  }
  return {*sum, std::move(gates.selected)};
}

Var prototype_attention(Tape& t, const ParameterStore& store,
                        const PrototypeParams& p, Var enhanced, Var* weights) {
  Var proto = t.param(store, p.prototype);
  Var q = linear(t, store, p.wq, proto);
  Var k = linear(t, store, p.wk, enhanced);
  Var v = linear(t, store, p.wv, enhanced);
  Var attn = softmax_rows(t, scale(t, matmul_bt(t, q, k), 1.0 / p.scale));
  if (weights) *weights = attn;
  return matmul(t, attn, v);
}

Var octa_refine(Tape& t, const ParameterStore& store, const PrototypeParams& p,
                Var attended, Mode mode, Rng* dropout_rng) {
  Var proto = t.param(store, p.prototype);
  Var refined = project(t, store, p.post_mlp, add(t, proto, attended));
  Var ffn = project(t, store, p.ffn, refined);
  if (mode == Mode::kTrain && p.dropout_rate > 0.0) {
    if (!dropout_rng) throw ValidationError("octa_refine: dropout needs an rng");
    Tensor mask = Tensor::zeros_like(t.value(ffn));
    const double keep = 1.0 - p.dropout_rate;
    for (double& m : mask.values()) m = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    ffn = mul_const(t, ffn, mask);
  }
  return layer_norm(t, store, p.final_ln, add(t, refined, ffn));
}

Var octa_forward(Tape& t, const ParameterStore& store, const OctaParams& p,
                 Var text, Mode mode, Rng* dropout_rng) {
  Var enhanced = moe_forward(t, store, p.moe, text).enhanced;
  Var attended = prototype_attention(t, store, p.proto, enhanced);
  return octa_refine(t, store, p.proto, attended, mode, dropout_rng);
}

}  // namespace ad
}  // namespace gtad
