// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "diet/cli.hpp"
#include "diet/data.hpp"
#include "diet/eval.hpp"
#include "diet/linalg.hpp"
#include "diet/model.hpp"
#include "diet/optim.hpp"
#include "diet/theory.hpp"
#include "diet/train.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace {

using diet::Matrix;
namespace th = diet::theory;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

// --- Theory -------------------------------------------------------------------

Outcome theory_optimality() {
  Stopwatch clock;
  const th::ClusteredSpec spec{th::orthogonal_centroids(4, 8, 0), 4};
  const double kappa = th::default_kappa(spec.n(), spec.k());
  const auto r = th::verify_optimality(spec, kappa, 1e-6, 1e-8);
  const double secs = clock.seconds();
  const double loss_gap = std::abs(r.loss - std::log(4.0));
  const double grad_bound = 1e-8 * r.x_norm;
  const bool pass = kappa * 4 / 16 >= 40 && r.grad_w_norm < grad_bound && r.grad_v_norm < grad_bound &&
                    r.a_max_deviation < 1e-6 && loss_gap < 1e-6 && secs < 1.0;
  return {pass, fmt("kappa=%g |gW|=%.2e |gV|=%.2e (bound %.2e) A_dev=%.2e (<1e-6) |loss-log4|=%.2e (<1e-6) "
                    "t=%.3fs (<1s)",
                    kappa, r.grad_w_norm, r.grad_v_norm, grad_bound, r.a_max_deviation, loss_gap, secs)};
}

Outcome convergence_demo() {
  Stopwatch clock;
  const Matrix x = th::make_clustered_data({th::orthogonal_centroids(4, 8, 0), 4});
  th::DescentConfig cfg;  // Adam, 20000 steps
  const auto trace = th::descend_linear_diet(x, 4, cfg);
  const double secs = clock.seconds();
  const long first = trace.first_step_within(1e-5);
  const bool pass = first >= 0 && first <= 20000 && trace.final_gap <= 1e-5 && secs < 10.0;
  return {pass, fmt("method=adam steps=%zu first_within_1e-5=%ld final_gap=%.2e (<=1e-5) t=%.2fs (<10s)",
                    cfg.steps, first, trace.final_gap, secs)};
}

Outcome gradient_equivalence() {
  std::mt19937_64 gen(3);
  double worst_fd = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + gen() % 6, d = 1 + gen() % 5, k = 1 + gen() % 4;
    const Matrix x = oracle::random_matrix(n, d, gen());
    Matrix v = oracle::random_matrix(d, k, gen());
    Matrix w = oracle::random_matrix(n, k, gen());
    const auto g = th::diet_gradients(x, v, w);
    const auto loss = [&] { return oracle::linear_diet_sum_loss(x, v, w); };
    worst_fd = std::max({worst_fd, oracle::relative_error(g.grad_v.data(), oracle::finite_difference(loss, v.data())),
                         oracle::relative_error(g.grad_w.data(), oracle::finite_difference(loss, w.data()))});
  }

  // Model backward on a bias-free linear backbone, full batch in index order,
  // against the sum-form theory gradients.
  double worst_model = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + gen() % 6, d = 1 + gen() % 5, k = 1 + gen() % 4;
    const Matrix x = oracle::random_matrix(n, d, gen());
    const Matrix v = oracle::random_matrix(d, k, gen());
    const Matrix w = oracle::random_matrix(n, k, gen());
    diet::Model m{diet::init_backbone(diet::BackboneKind::kLinear, {d, k}, 0, false), diet::init_head(n, k, 0)};
    m.backbone.layers()[0].weight = diet::transpose(v);
    m.head.w = w;
    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = i;
    const auto xent = diet::smoothed_xent(diet::model_forward(m, x), targets, 0.0);
    const auto mg = diet::model_backward(m, xent.grad);
    const auto tg = th::diet_gradients(x, v, w);
    const double scale = static_cast<double>(n);
    const Matrix model_gv = scale * diet::transpose(mg.backbone.weight[0]);
    const Matrix model_gw = scale * mg.head;
    worst_model = std::max({worst_model, oracle::relative_error(model_gv.data(), tg.grad_v.data()),
                            oracle::relative_error(model_gw.data(), tg.grad_w.data())});
  }
  return {worst_fd < 1e-6 && worst_model < 1e-10,
          fmt("instances=20 worst_fd_rel=%.2e (<1e-6) worst_model_vs_theory_rel=%.2e (<1e-10)", worst_fd,
              worst_model)};
}

Outcome mlp_gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 6, d = 5, hidden = 7, k = 4;
    diet::Model m{diet::init_backbone(diet::BackboneKind::kMlp, {d, hidden, k}, seed, true),
                  diet::init_head(n, k, seed)};
    for (auto& layer : m.backbone.layers())
      for (double& b : layer.bias) b = 0.1;
    const Matrix x = oracle::random_matrix(n, d, 100 + seed);
    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = i;
    const auto xent = diet::smoothed_xent(diet::model_forward(m, x), targets, 0.8);
    const auto grads = diet::model_backward(m, xent.grad);
    const auto analytic = diet::gradient_views(grads);
    const auto loss = [&]() -> long double {
      const Matrix z = diet::model_forward(m, x);
      long double total = 0;
      for (std::size_t i = 0; i < n; ++i) total += oracle::smoothed_xent(z.row(i), i, 0.8);
      return total / n;
    };
    auto params = diet::parameter_views(m);
    for (std::size_t p = 0; p < params.size(); ++p)
      worst = std::max(worst, oracle::relative_error(analytic[p], oracle::finite_difference(loss, params[p])));
  }
  return {worst < 1e-6, fmt("seeds=10 worst_param_rel=%.2e (<1e-6)", worst)};
}

Outcome loss_recipe_identities() {
  double worst_uniform = 0.0, worst_plain = 0.0;
  for (std::size_t n : {2u, 10u, 1000u}) {
    const Matrix z(3, n, 0.0);
    const std::vector<std::size_t> y{0, n / 2, n - 1};
    for (double eps : {0.0, 0.4, 0.8})
      worst_uniform = std::max(worst_uniform, std::abs(diet::smoothed_xent(z, y, eps).loss - std::log(double(n))));
    const Matrix r = oracle::random_matrix(3, n, n, 4.0);
    long double plain = 0;
    for (std::size_t i = 0; i < 3; ++i) plain += oracle::lse(r.row(i)) - r(i, y[i]);
    worst_plain = std::max(worst_plain, std::abs(diet::smoothed_xent(r, y, 0.0).loss - double(plain / 3)));
  }
  const double peak = 0.004;
  const bool schedule = diet::lr_at(0, 1000, 100, peak) == 0.0 && diet::lr_at(100, 1000, 100, peak) == peak &&
                        diet::lr_at(1000, 1000, 100, peak) == 0.0 &&
                        diet::lr_at(99, 1000, 100, peak) < peak && diet::lr_at(101, 1000, 100, peak) < peak;
  const double scaled = diet::scale_lr(0.001, 512);
  const bool pass = worst_uniform <= 1e-12 && worst_plain <= 1e-12 && schedule && scaled == 0.002;
  return {pass, fmt("|xent_uniform-logN|=%.1e |eps0-plain|=%.1e (<=1e-12) schedule_endpoints=%s scale_lr=%g",
                    worst_uniform, worst_plain, schedule ? "exact" : "off", scaled)};
}

// --- Blobs experiments --------------------------------------------------------

struct BlobsRun {
  diet::TrainResult result;
  double seconds = 0.0;
  double final_probe = 0.0;
};

diet::Model blobs_model(std::size_t rows, std::uint64_t seed) {
  return {diet::init_backbone(diet::BackboneKind::kMlp, {32, 64, 32}, seed), diet::init_head(rows, 32, seed)};
}

diet::ProbeHook probe_hook(const diet::IndexedDataset& train, const diet::IndexedDataset& test) {
  return [&train, &test](const diet::Model& m, std::size_t) -> std::optional<double> {
    return diet::linear_probe(diet::extract_features(m.backbone, train, "train"),
                              diet::extract_features(m.backbone, test, "test"))
        .test_acc;
  };
}

BlobsRun run_blobs(const diet::BlobsSpec& spec, const diet::TrainConfig& cfg) {
  const auto train = diet::gen_blobs(spec);
  const auto test = diet::gen_blobs_split(spec, spec.per_class);
  Stopwatch clock;
  BlobsRun run{diet::train_diet(train, blobs_model(train.size(), cfg.seed), cfg, {}, probe_hook(train, test))};
  run.seconds = clock.seconds();
  run.final_probe = run.result.log.back().probe_acc.value_or(0.0);
  return run;
}

Outcome end_to_end(const BlobsRun& run) {
  const double rho = diet::loss_acc_correlation(run.result.log);
  const std::size_t probes = std::count_if(run.result.log.begin(), run.result.log.end(),
                                           [](const auto& r) { return r.probe_acc.has_value(); });
  const bool pass = run.result.log.size() == 200 && run.final_probe >= 0.90 && rho <= -0.8 && run.seconds < 120;
  return {pass, fmt("probe_test_acc=%.3f (>=0.90) spearman=%.3f (<=-0.8) over %zu probes t=%.1fs (<120s)",
                    run.final_probe, rho, probes, run.seconds)};
}

Outcome batch_size_robustness(const BlobsRun& bs256) {
  std::vector<double> accs;
  std::string detail;
  for (std::size_t bs : {32u, 128u}) {
    diet::TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = bs;
    cfg.probe_every = 200;
    accs.push_back(run_blobs({}, cfg).final_probe);
    detail += fmt("bs%zu=%.3f ", bs, accs.back());
  }
  accs.push_back(bs256.final_probe);
  detail += fmt("bs256=%.3f ", accs.back());
  const auto [lo, hi] = std::minmax_element(accs.begin(), accs.end());
  const double spread = *hi - *lo;
  return {spread <= 0.05, detail + fmt("spread=%.3f (<=0.05)", spread)};
}

Outcome small_n_parity() {
  std::vector<double> ratios;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const diet::BlobsSpec spec{.per_class = 10, .seed = seed};
    const auto train = diet::gen_blobs(spec);
    const auto test = diet::gen_blobs_split(spec, 125);

    diet::TrainConfig dcfg;
    dcfg.epochs = 200;
    dcfg.seed = seed;
    dcfg.probe_every = 200;
    const auto diet_run = diet::train_diet(train, blobs_model(train.size(), seed), dcfg, {}, probe_hook(train, test));
    const double diet_acc = diet_run.log.back().probe_acc.value_or(0.0);

    diet::TrainConfig scfg;
    scfg.epochs = 200;
    scfg.seed = seed;
    scfg.batch_size = 16;
    scfg.scale_lr_by_batch = false;
    scfg.label_smoothing = 0.0;
    const auto sup = diet::train_supervised(train, blobs_model(spec.classes, seed), scfg);
    const double sup_acc = diet::classifier_accuracy(sup.model, test);
    ratios.push_back(diet_acc / sup_acc);
    detail += fmt("seed%llu diet=%.3f sup=%.3f ", static_cast<unsigned long long>(seed), diet_acc, sup_acc);
  }
  const double med = median3(ratios);
  return {med >= 0.8, detail + fmt("median_ratio=%.3f (>=0.8)", med)};
}

Outcome smoothing_speedup() {
  constexpr double kTarget = 0.8;
  constexpr std::size_t kEpochs = 200;
  std::vector<double> high, low;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    for (double eps : {0.8, 0.1}) {
      diet::TrainConfig cfg;
      cfg.epochs = kEpochs;
      cfg.seed = seed;
      cfg.label_smoothing = eps;
      cfg.probe_every = 1;
      cfg.stop_at_probe_acc = kTarget;
      const auto run = run_blobs({.seed = seed}, cfg);
      const auto& last = run.result.log.back();
      const double reached = last.probe_acc.value_or(0.0) >= kTarget ? double(last.epoch) : double(kEpochs + 1);
      (eps == 0.8 ? high : low).push_back(reached);
      detail += fmt("s%llu/eps%.1f=%g ", static_cast<unsigned long long>(seed), eps, reached);
    }
  const double mh = median3(high), ml = median3(low);
  return {mh <= ml, detail + fmt("median_epochs eps0.8=%g eps0.1=%g (<=)", mh, ml)};
}

// --- Determinism --------------------------------------------------------------

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "diet-lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = diet::run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  return code;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  TempDir dir;
  const auto d = [&](const std::string& s) { return (dir / s).string(); };
  std::vector<std::string> mismatched;
  int failures = 0;
  const auto same = [&](const std::string& a, const std::string& b, const char* file) {
    const std::string x = slurp(dir / a / file), y = slurp(dir / b / file);
    if (x.empty() || x != y) mismatched.push_back(a + "/" + file);
  };
  const auto rerun = [&](const std::string& cmd, const std::string& first) {
    failures += cli({cmd, "--config", d(first + "/resolved-config.json"), "-o", d(first + "2")}) != 0;
  };

  failures += cli({"gen-data", "--per-class", "10", "--seed", "5", "-o", d("gen")}) != 0;
  rerun("gen-data", "gen");
  for (const char* f : {"blobs.csv", "blobs_test.csv", "manifest.json"}) same("gen", "gen2", f);

  failures += cli({"train", "--data", d("gen/blobs.csv"), "--test-data", d("gen/blobs_test.csv"), "--epochs", "30",
                   "--batch-size", "32", "--probe-every", "5", "-o", d("train")}) != 0;
  rerun("train", "train");
  ::setenv("DIET_LAB_THREADS", "1", 1);
  failures += cli({"train", "--config", d("train/resolved-config.json"), "-o", d("train1t")}) != 0;
  ::unsetenv("DIET_LAB_THREADS");
  for (const char* f : {"metrics.jsonl", "checkpoint.json", "checkpoint.bin", "summary.json"}) {
    same("train", "train2", f);
    same("train", "train1t", f);
  }

  std::string out1, out2;
  failures += cli({"probe", "--checkpoint", d("train/checkpoint.json"), "--data", d("gen/blobs.csv"), "--metrics",
                   d("train/metrics.jsonl"), "-o", d("probe")}, &out1) != 0;
  failures += cli({"probe", "--config", d("probe/resolved-config.json"), "-o", d("probe2")}, &out2) != 0;
  same("probe", "probe2", "probe.json");
  if (out1 != out2) mismatched.push_back("probe stdout");

  failures += cli({"theory", "--steps", "3000", "-o", d("theory")}) != 0;
  rerun("theory", "theory");
  for (const char* f : {"report.json", "loss-curve.csv"}) same("theory", "theory2", f);

  std::string detail = fmt("commands=gen-data,train,probe,theory exit_failures=%d mismatches=%zu", failures,
                           mismatched.size());
  for (const auto& m : mismatched) detail += " " + m;
  return {failures == 0 && mismatched.empty(), detail};
}

}  // namespace

int main() {
  int failed = 0;
  const auto report = [&](int id, const Outcome& o) {
    std::printf("criterion %d: %s %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  report(1, theory_optimality());
  report(2, convergence_demo());
  report(3, gradient_equivalence());
  report(4, mlp_gradient_check());
  report(5, loss_recipe_identities());

  diet::TrainConfig cfg6;
  cfg6.epochs = 200;  // probe cadence defaults to every 4 epochs
  const BlobsRun bs256 = run_blobs({}, cfg6);
  report(6, end_to_end(bs256));
  report(7, small_n_parity());
  report(8, batch_size_robustness(bs256));
  report(9, smoothing_speedup());
  report(10, determinism());
  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
