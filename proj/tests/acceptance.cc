// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "gtad/checkpoint.h"
#include "gtad/config.h"
#include "gtad/evaluate.h"
#include "gtad/gacm.h"
#include "gtad/loss.h"
#include "gtad/metrics.h"
#include "gtad/octa.h"
#include "gtad/ops.h"
#include "gtad/oracles.h"
#include "gtad/scoring.h"
#include "gtad/trainer.h"
#include "test_support.h"

namespace gtad {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

// 1. Finite differences at eps 1e-5 for every component over seeds 1..5.
Outcome gradient_fidelity() {
  Outcome o;
  const auto t0 = Clock::now();
  struct Component {
    std::string name;
    std::function<GradCheckReport(std::uint64_t)> run;
  };
  // Projector widths follow the gradcheck head: D_rgb 4, D_3d 6, D_text 8.
  const std::vector<Component> components{
      {"gacm", testing::gradcheck_gacm},
      {"3d_to_rgb", [](std::uint64_t s) { return testing::gradcheck_projector(s, 6, 4); }},
      {"rgb_to_text", [](std::uint64_t s) { return testing::gradcheck_projector(s, 4, 8); }},
      {"3d_to_text", [](std::uint64_t s) { return testing::gradcheck_projector(s, 6, 8); }},
      {"octa", testing::gradcheck_octa},
      {"l_total", testing::gradcheck_total},
  };
  for (const auto& c : components) {
    double worst = 0.0;
    std::string where;
    std::vector<std::uint64_t> failing;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const GradCheckReport r = c.run(seed);
      if (r.max_relative_error > 1e-4) failing.push_back(seed);
      if (r.max_relative_error >= worst) {
        worst = r.max_relative_error;
        where = r.worst_parameter + " seed " + std::to_string(seed);
      }
    }
    std::string msg = c.name + " max " + fmt("%.2e", worst);
    if (!failing.empty()) {
      msg += " (" + where + "; seeds over 1e-4:";
      for (auto s : failing) msg += " " + std::to_string(s);
      msg += ")";
    }
    o.note(msg);
    o.check(failing.empty(), c.name + " above 1e-4");
  }
  const double secs = seconds_since(t0);
  o.note(fmt("%.1f s", secs));
  o.check(secs < 60.0, "runtime over 60 s");
  return o;
}

// 2. Closed forms that must hold exactly (or to 1e-12).
Outcome formula_exactness() {
  Outcome o;
  Rng rng(2024);
  bool convex = true;
  for (int trial = 0; trial < 500; ++trial) {
    const Shape shape{testing::random_between(rng, 1, 4), testing::random_between(rng, 1, 4),
                      testing::random_between(rng, 1, 8)};
    const Tensor sem = testing::random_tensor(shape, rng, 5.0);
    const Tensor geo = testing::random_tensor(shape, rng, 5.0);
    Tensor gate(shape);
    for (double& g : gate.values()) g = rng.uniform();
    const Tensor f = gacm_fuse(sem, geo, gate);
    for (std::size_t i = 0; i < f.size(); ++i) {
      convex = convex && f[i] >= std::min(sem[i], geo[i]) && f[i] <= std::max(sem[i], geo[i]);
    }
  }
  o.check(convex, "gate blend left the [min, max] interval");

  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const double r = rng.uniform(0, 10), g = rng.uniform(0, 10), t = rng.uniform(0, 10);
    const FusionWeights w{rng.uniform(0, 2), rng.uniform(0, 2)};
    const AnomalyMap f = fuse(AnomalyMap(4, 4, r), AnomalyMap(4, 4, g), AnomalyMap(4, 4, t), w);
    for (double v : f.values) worst = std::max(worst, std::abs(v - (w.alpha * r * g + w.beta * t)));
  }
  o.note("fuse closed form max error " + fmt("%.1e", worst));
  o.check(worst <= 1e-12, "fuse closed form");

  const Tensor a({1, 1, 2}, {0.0, 0.0}), b({1, 1, 2}, {3.0, 4.0});
  const double d = distance_map(a, b).values[0];
  o.check(d == 5.0, "distance (0,0)-(3,4) is " + fmt("%.17g", d));

  bool identity = true;
  for (std::size_t dim : {2u, 4u, 8u, 12u}) {
    ParameterStore s;
    const GacmParams p = make_gacm(s, "g", dim, dim, rng, GacmInit::kPassThrough);
    const Tensor x = testing::random_tensor({3, 3, dim}, rng, 4.0);
    identity = identity && gacm_forward(s, p, x) == x;
  }
  o.check(identity, "pass-through mapper is not the identity");
  return o;
}

// 3. Metrics against brute-force oracles.
Outcome metric_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(99);
  double worst_aupro = 0.0;
  std::size_t auroc_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const testing::MetricInstance in = testing::random_metric_instance(rng);
    for (double limit : {0.3, 0.01}) {
      const double a = aupro(in.maps, in.gt, in.valid, limit);
      const double ref = oracle::exhaustive_aupro(in.maps, in.gt, in.valid, limit);
      worst_aupro = std::max(worst_aupro, std::abs(a - ref));
    }
    std::vector<double> scores;
    std::vector<bool> labels;
    for (std::size_t i = 0; i < in.maps.size(); ++i) {
      for (std::size_t p = 0; p < in.maps[i].size(); ++p) {
        if (!in.valid[i][p]) continue;
        scores.push_back(in.maps[i].values[p]);
        labels.push_back(in.gt[i][p]);
      }
    }
    if (pixel_auroc(in.maps, in.gt, in.valid) != oracle::pairwise_auroc(scores, labels)) {
      ++auroc_mismatch;
    }
    // Image-level scores from the same maps.
    std::vector<double> image;
    std::vector<bool> image_labels;
    for (std::size_t i = 0; i < in.maps.size(); ++i) {
      image.push_back(image_score(in.maps[i], in.valid[i]));
      image_labels.push_back(i % 2 == 0);
    }
    if (image.size() >= 2) {
      BinaryLabeledScores s{image, image_labels};
      if (auroc(s) != oracle::pairwise_auroc(image, image_labels)) ++auroc_mismatch;
    }
  }
  const double secs = seconds_since(t0);
  o.note("aupro max deviation " + fmt("%.1e", worst_aupro));
  o.note("auroc mismatches " + std::to_string(auroc_mismatch));
  o.note(fmt("%.1f s", secs));
  o.check(worst_aupro <= 1e-6, "aupro deviation");
  o.check(auroc_mismatch == 0, "auroc differs from pair counting");
  o.check(secs < 120.0, "runtime over 120 s");
  return o;
}

struct RunOutcome {
  double untrained_i = 0.0;
  double i_auroc = 0.0;
  double p_auroc = 0.0;
  double i_auroc_beta0 = 0.0;
  double seconds = 0.0;
  std::string checkpoint;
  std::string report;
};

RunOutcome run_benchmark(std::uint64_t seed, MapperKind mapper) {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.set_seed(seed);
  cfg.model.mapper = mapper;
  const Dataset data = gen_dataset(cfg.data, cfg.seed);
  const ModelDims dims = model_dims(cfg);
  EvalOptions opts;
  opts.fusion = cfg.fusion;
  opts.fpr_limits = cfg.fpr_limits;
  opts.prompts = cfg.prompts;
  RunOutcome r;
  r.untrained_i = evaluate(initial_head(dims, cfg.train.seed), data.test, opts).average.i_auroc;
  const TrainResult trained = train(cfg.train, dims, data.train, cfg.prompts);
  MetricsReport report = evaluate(trained.head, data.test, opts);
  report.config_hash = config_hash(cfg);
  report.seed = cfg.seed;
  r.i_auroc = report.average.i_auroc;
  r.p_auroc = report.average.p_auroc;
  r.report = report_json(report);
  r.checkpoint = encode_checkpoint(make_checkpoint(cfg, trained.head, trained.steps));
  opts.fusion.beta = 0.0;
  r.i_auroc_beta0 = evaluate(trained.head, data.test, opts).average.i_auroc;
  r.seconds = seconds_since(t0);
  return r;
}

// 4. Default synthetic benchmark at seed 7.
Outcome end_to_end(const RunOutcome& r) {
  Outcome o;
  o.note("untrained I-AUROC " + fmt("%.4f", r.untrained_i));
  o.note("trained I-AUROC " + fmt("%.4f", r.i_auroc));
  o.note("P-AUROC " + fmt("%.4f", r.p_auroc));
  o.note(fmt("%.1f s", r.seconds));
  o.check(r.i_auroc >= 0.90, "I-AUROC below 0.90");
  o.check(r.p_auroc >= 0.92, "P-AUROC below 0.92");
  o.check(r.i_auroc - r.untrained_i >= 0.25, "gain over untrained below 0.25");
  o.check(r.untrained_i >= 0.35 && r.untrained_i <= 0.65, "untrained outside [0.35, 0.65]");
  o.check(r.seconds < 600.0, "runtime over 10 min");
  return o;
}

// 5. Full model against the beta = 0 and plain MLP mapper variants.
Outcome ablation(const RunOutcome& seed7) {
  Outcome o;
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const RunOutcome full = seed == 7 ? seed7 : run_benchmark(seed, MapperKind::kGacm);
    const RunOutcome mlp = run_benchmark(seed, MapperKind::kMlp);
    o.note("seed " + std::to_string(seed) + " full " + fmt("%.4f", full.i_auroc) + " beta0 " +
           fmt("%.4f", full.i_auroc_beta0) + " mlp " + fmt("%.4f", mlp.i_auroc));
    o.check(full.i_auroc >= full.i_auroc_beta0,
            "seed " + std::to_string(seed) + " below beta0 by " +
                fmt("%.4f", full.i_auroc_beta0 - full.i_auroc));
    o.check(full.i_auroc >= mlp.i_auroc,
            "seed " + std::to_string(seed) + " below mlp by " +
                fmt("%.4f", mlp.i_auroc - full.i_auroc));
  }
  return o;
}

// 6. Module invariants plus byte-level determinism.
Outcome invariants(const RunOutcome& seed7) {
  Outcome o;
  Rng rng(606);

  bool local = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = testing::random_between(rng, 2, 8);
    const std::size_t experts = testing::random_between(rng, 2, 6);
    const std::size_t k = testing::random_between(rng, 1, experts - 1);
    ParameterStore s;
    const MoeParams p = make_moe(s, "moe", d, experts, k, rng);
    s.value(p.gate.weight) = testing::random_tensor({d, experts}, rng, 2.0);
    const Tensor x = testing::random_tensor({testing::random_between(rng, 1, 4), d}, rng);
    const MoeOutput before = moe_forward(s, p, x);
    std::vector<bool> used(experts, false);
    for (const auto& row : before.selected) {
      for (std::size_t e : row) used[e] = true;
    }
    for (std::size_t e = 0; e < experts; ++e) {
      if (used[e]) continue;
      for (ParamId id : {p.experts[e].layer1.weight, *p.experts[e].layer1.bias,
                         p.experts[e].layer2.weight, *p.experts[e].layer2.bias}) {
        for (double& v : s.value(id).values()) v += rng.normal();
      }
    }
    local = local && moe_forward(s, p, x).enhanced == before.enhanced;
  }
  o.check(local, "unselected experts changed the output");

  bool independent = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = testing::random_between(rng, 1, 4), w = testing::random_between(rng, 1, 4);
    const std::size_t dr = testing::random_between(rng, 2, 5), dg = testing::random_between(rng, 2, 5);
    const std::size_t dt = testing::random_between(rng, 2, 5);
    const LossWeights lw;
    const ValidityMask mask = testing::random_mask(h, w, rng, 0.6);
    Tensor rgb = testing::random_tensor({h, w, dr}, rng), geo = testing::random_tensor({h, w, dg}, rng);
    Tensor r2g = testing::random_tensor({h, w, dg}, rng), g2r = testing::random_tensor({h, w, dr}, rng);
    Tensor rt = testing::random_tensor({h, w, dt}, rng), gt = testing::random_tensor({h, w, dt}, rng);
    const Tensor anchor = testing::random_tensor({1, dt}, rng);
    const double vis = visual_loss(rgb, geo, r2g, g2r, mask, lw);
    const double txt = text_loss(rt, gt, anchor, mask, lw);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) continue;
      for (Tensor* t : {&rgb, &geo, &r2g, &g2r, &rt, &gt}) {
        for (double& v : t->row_span(i)) v = 100.0 * rng.normal();
      }
    }
    independent = independent && visual_loss(rgb, geo, r2g, g2r, mask, lw) == vis &&
                  text_loss(rt, gt, anchor, mask, lw) == txt;
  }
  o.check(independent, "loss depends on invalid patches");

  bool monotone = true;
  for (int trial = 0; trial < 300; ++trial) {
    const FusionWeights w{rng.uniform(0, 2), rng.uniform(0, 2)};
    AnomalyMap m[3] = {testing::random_map(3, 4, rng), testing::random_map(3, 4, rng),
                       testing::random_map(3, 4, rng)};
    const AnomalyMap base = fuse(m[0], m[1], m[2], w);
    for (double& v : m[rng.below(3)].values) v += rng.uniform(0, 1);
    const AnomalyMap up = fuse(m[0], m[1], m[2], w);
    for (std::size_t i = 0; i < base.size(); ++i) monotone = monotone && up.values[i] >= base.values[i];
  }
  o.check(monotone, "fuse decreased when an input grew");

  const RunOutcome again = run_benchmark(7, MapperKind::kGacm);
  o.check(again.checkpoint == seed7.checkpoint, "checkpoint bytes differ between identical runs");
  o.check(again.report == seed7.report, "report bytes differ between identical runs");
  o.note("checkpoint " + std::to_string(seed7.checkpoint.size()) + " bytes and report " +
         std::to_string(seed7.report.size()) + " bytes identical across reruns");
  return o;
}

// 7. The default prompt grammar, spelled out independently of the catalog.
Outcome prompt_catalog() {
  Outcome o;
  const std::vector<std::string> states{
      "{}", "flawless {}", "perfect {}", "unblemished {}",
      "{} without flaw", "{} without defect", "{} without damage"};
  std::size_t classes = 0;
  for (const auto& cls : class_catalog()) {
    std::set<std::string> expected;
    for (const auto& st : states) {
      std::string s = st;
      s.replace(s.find("{}"), 2, cls);
      expected.insert("a photo of a " + s + ".");
      expected.insert("a photo of the " + s + ".");
    }
    const auto got = build_prompts(cls, PromptCatalog::defaults());
    const std::set<std::string> got_set(got.begin(), got.end());
    o.check(got.size() == 14, cls + " yields " + std::to_string(got.size()) + " sentences");
    o.check(got_set == expected, cls + " sentences differ from the grammar");
    o.check(got_set.count("a photo of a flawless " + cls + ".") == 1, cls + " lacks the flawless sentence");
    ++classes;
  }
  o.note(std::to_string(classes) + " classes x 14 sentences");
  return o;
}

}  // namespace
}  // namespace gtad

// An optional argument names a file that receives a copy of the summary.
int main(int argc, char** argv) {
  using namespace gtad;
  std::FILE* copy = argc > 1 ? std::fopen(argv[1], "w") : nullptr;
  auto line = [&](const std::string& s) {
    std::fputs(s.c_str(), stdout);
    std::fflush(stdout);
    if (copy != nullptr) std::fputs(s.c_str(), copy);
  };
  int failed = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    char head[64];
    std::snprintf(head, sizeof head, "criterion %d %-22s %s  ", n, name, o.pass ? "PASS" : "FAIL");
    line(head + o.detail + "\n");
    failed += o.pass ? 0 : 1;
  };
  report(1, "gradient fidelity", gradient_fidelity());
  report(2, "formula exactness", formula_exactness());
  report(3, "metric oracles", metric_oracles());
  const RunOutcome seed7 = run_benchmark(7, MapperKind::kGacm);
  report(4, "end-to-end benchmark", end_to_end(seed7));
  report(5, "ablation direction", ablation(seed7));
  report(6, "invariants", invariants(seed7));
  report(7, "prompt catalog", prompt_catalog());
  line("acceptance run complete: " + std::to_string(7 - failed) + " of 7 criteria passed\n");
  if (copy != nullptr) std::fclose(copy);
  return failed == 0 ? 0 : 1;
}
