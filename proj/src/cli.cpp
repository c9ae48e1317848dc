// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "diet/augment.hpp"
#include "diet/config.hpp"
#include "diet/data.hpp"
#include "diet/error.hpp"
#include "diet/eval.hpp"
#include "diet/model.hpp"
#include "diet/theory.hpp"
#include "diet/train.hpp"

namespace diet {
namespace {

namespace fs = std::filesystem;
using config::BlobsSource;
using config::DataSource;
using config::Json;

constexpr double kConvergenceGap = 1e-5;

// --- argument plumbing -------------------------------------------------------

std::optional<std::string> find_config_flag(int argc, const char* const* argv) {
  for (int i = 2; i < argc; ++i) {
    const std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.starts_with("--config=")) return std::string(a.substr(9));
  }
  return std::nullopt;
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DIET_LAB_THREADS")) {
    unsigned cap = 0;
    const std::string_view s = env;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || cap == 0) {
      throw ConfigError("DIET_LAB_THREADS must be a positive integer, got '" + std::string(s) +
                        "'");
    }
    n = std::min(n, cap);
  }
  return n;
}

// Flags naming a data source. Giving any of them replaces the source loaded
// from --config instead of merging with it.
struct SourceFlags {
  std::string csv, idx_images, idx_labels;
  bool blobs = false;
  BlobsSource blob;
  std::vector<CLI::Option*> options;
};

void add_source_flags(CLI::App& app, SourceFlags& f, const std::string& prefix,
                      const DataSource& preset, bool with_blobs) {
  if (preset.blobs) f.blob = *preset.blobs;
  const std::string p = prefix.empty() ? "" : prefix + "-";
  const std::string what = prefix.empty() ? "training" : prefix;
  f.options.push_back(app.add_option("--" + (prefix.empty() ? std::string("data") : prefix + "-data"),
                                     f.csv, "CSV file with " + what + " samples"));
  f.options.push_back(app.add_option("--" + p + "idx-images", f.idx_images, "IDX image file"));
  f.options.push_back(app.add_option("--" + p + "idx-labels", f.idx_labels, "IDX label file"));
  if (!with_blobs) return;
  f.options.push_back(app.add_flag("--blobs", f.blobs, "generate synthetic blobs in memory"));
  f.options.push_back(app.add_option("--blobs-classes", f.blob.spec.classes));
  f.options.push_back(app.add_option("--blobs-per-class", f.blob.spec.per_class));
  f.options.push_back(app.add_option("--blobs-dim", f.blob.spec.dim));
  f.options.push_back(app.add_option("--blobs-spread", f.blob.spec.spread));
  f.options.push_back(app.add_option("--blobs-center-scale", f.blob.spec.center_scale));
  f.options.push_back(app.add_option("--blobs-seed", f.blob.spec.seed));
  f.options.push_back(app.add_option("--blobs-test-per-class", f.blob.test_per_class));
}

void apply_source_flags(const SourceFlags& f, DataSource& dst) {
  bool any = false;
  for (const CLI::Option* o : f.options) any = any || o->count() > 0;
  if (!any) return;
  dst = DataSource{};
  dst.csv = f.csv;
  dst.idx_images = f.idx_images;
  dst.idx_labels = f.idx_labels;
  bool blob_flags = f.blobs;
  for (std::size_t i = 3; i < f.options.size(); ++i) blob_flags = blob_flags || f.options[i]->count();
  if (blob_flags) dst.blobs = f.blob;
}

void add_probe_flags(CLI::App& app, ProbeConfig& p) {
  app.add_option("--probe-lr", p.lr, "linear probe step size");
  app.add_option("--probe-weight-decay", p.weight_decay);
  app.add_option("--probe-steps", p.max_steps, "linear probe step budget");
  app.add_option("--probe-grad-tol", p.grad_tol);
  app.add_flag("--probe-standardize,!--no-probe-standardize", p.standardize);
}

void require_file(const std::string& path, const char* what) {
  if (!path.empty() && !fs::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " not found: " + path);
  }
}

void require_source_files(const DataSource& s) {
  require_file(s.csv, "data file");
  require_file(s.idx_images, "IDX image file");
  require_file(s.idx_labels, "IDX label file");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write " + path.string());
}

Json probe_json(const ProbeConfig& p) {
  return Json{{"lr", p.lr},
              {"weight_decay", p.weight_decay},
              {"max_steps", p.max_steps},
              {"grad_tol", p.grad_tol},
              {"standardize", p.standardize}};
}

// Normalizes both splits with statistics of the training split.
void normalize_splits(IndexedDataset& train, std::optional<IndexedDataset>& test) {
  if (train.image_shape()) throw ConfigError("--normalize applies to flat features only");
  const FeatureNormalizer norm = FeatureNormalizer::fit(train);
  train = norm.apply(train);
  if (test) test = norm.apply(*test);
}

// --- gen-data ----------------------------------------------------------------

int cmd_gen_data(const config::GenDataConfig& cfg, std::ostream& out) {
  cfg.validate();
  const fs::path dir = cfg.out;
  ensure_dir(dir);
  const std::size_t test_per_class = cfg.test_per_class ? cfg.test_per_class : cfg.blobs.per_class;
  const IndexedDataset train = gen_blobs(cfg.blobs);
  const IndexedDataset test = gen_blobs_split(cfg.blobs, test_per_class);
  save_csv(train, dir / "blobs.csv");
  save_csv(test, dir / "blobs_test.csv");

  const BlobsSpec& b = cfg.blobs;
  Json manifest{{"format", "diet-lab-blobs"},
                {"version", 1},
                {"seed", b.seed},
                {"spec",
                 {{"classes", b.classes},
                  {"per_class", b.per_class},
                  {"dim", b.dim},
                  {"spread", b.spread},
                  {"center_scale", b.center_scale},
                  {"test_per_class", test_per_class}}},
                {"files",
                 {{"train", {{"path", "blobs.csv"}, {"samples", train.size()}}},
                  {"test", {{"path", "blobs_test.csv"}, {"samples", test.size()}}}}}};
  config::write_json_file((dir / "manifest.json").string(), manifest);
  config::write_json_file((dir / "resolved-config.json").string(), config::to_json(cfg));
  out << "wrote " << train.size() << " train and " << test.size() << " test samples to "
      << dir.string() << '\n';
  return kExitOk;
}

// --- train -------------------------------------------------------------------

void write_metrics(const fs::path& dir, const std::vector<MetricsRecord>& log) {
  std::string metrics, timing;
  for (const MetricsRecord& r : log) {
    metrics += r.to_json_line() + '\n';
    timing += Json{{"epoch", r.epoch}, {"seconds", r.seconds}}.dump() + '\n';
  }
  write_text(dir / "metrics.jsonl", metrics);
  write_text(dir / "timing.jsonl", timing);
}

int cmd_train(config::TrainRunConfig cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  require_source_files(cfg.data);
  require_source_files(cfg.test_data);
  cfg.train.threads = worker_threads();

  auto [train_ds, test_ds] = config::load_data(cfg.data, cfg.test_data);
  if (cfg.normalize) normalize_splits(train_ds, test_ds);
  const bool supervised = cfg.mode == config::TrainMode::kSupervised;
  if (supervised && !train_ds.has_labels()) {
    throw ConfigError("--mode supervised needs labeled training data");
  }

  std::optional<augment::AugmentPipeline> pipeline;
  std::optional<ImageShape> model_shape;
  if (cfg.augment_strength > 0) {
    if (!train_ds.image_shape()) throw ConfigError("--augment needs image data (IDX)");
    const ImageShape in = *train_ds.image_shape();
    const std::size_t h = cfg.augment_height ? cfg.augment_height : in.height;
    const std::size_t w = cfg.augment_width ? cfg.augment_width : in.width;
    pipeline = augment::build_pipeline(cfg.augment_strength, h, w);
    model_shape = ImageShape{in.channels, h, w};
  }
  const std::size_t input_dim = model_shape ? model_shape->size() : train_ds.dim();

  const config::BackboneSpec bb = cfg.backbone_spec();
  const std::size_t head_rows = supervised ? train_ds.num_classes() : train_ds.size();
  const HeadInit head_init = cfg.head_init == "zeros" ? HeadInit::kZeros : HeadInit::kUniform;
  Model model{init_backbone(bb.kind, bb.widths(input_dim), cfg.train.seed, bb.bias),
              init_head(head_rows, bb.features, cfg.train.seed, head_init)};

  ProbeHook hook;
  if (cfg.online_probe && train_ds.has_labels() && train_ds.num_classes() >= 2) {
    const IndexedDataset& probe_test = test_ds ? *test_ds : train_ds;
    hook = [&, probe_cfg = cfg.probe](const Model& m, std::size_t) -> std::optional<double> {
      const FeatureBank tr = extract_features(m.backbone, train_ds, "train", model_shape);
      const FeatureBank te = extract_features(m.backbone, probe_test, "test", model_shape);
      return linear_probe(tr, te, probe_cfg).test_acc;
    };
  }

  const fs::path dir = cfg.out;
  ensure_dir(dir);
  config::write_json_file((dir / "resolved-config.json").string(), config::to_json(cfg));

  Json summary{{"mode", supervised ? "supervised" : "diet"},
               {"samples", train_ds.size()},
               {"input_dim", input_dim},
               {"features", bb.features},
               {"head_rows", head_rows},
               {"peak_lr", cfg.train.peak_lr()},
               {"epochs", cfg.train.epochs}};
  std::vector<MetricsRecord> log;
  Model final_model = model;
  bool aborted = false;
  try {
    TrainResult res = supervised ? train_supervised(train_ds, model, cfg.train, pipeline, hook)
                                 : train_diet(train_ds, model, cfg.train, pipeline, hook);
    log = std::move(res.log);
    final_model = std::move(res.model);
  } catch (const TrainingAborted& e) {
    err << "error: " << e.what() << "; keeping the last completed epoch\n";
    log = e.log();
    final_model = e.last_good();
    aborted = true;
    summary["aborted"] = e.what();
  }

  write_metrics(dir, log);
  save_checkpoint(final_model, dir / "checkpoint");
  summary["epochs_completed"] = log.size();
  summary["final_loss"] = log.empty() ? Json() : Json(log.back().loss);
  std::optional<double> last_probe;
  for (const MetricsRecord& r : log)
    if (r.probe_acc) last_probe = r.probe_acc;
  summary["final_probe_acc"] = last_probe ? Json(*last_probe) : Json();
  if (supervised && !aborted) {
    const IndexedDataset& eval_ds = test_ds ? *test_ds : train_ds;
    summary["classifier_acc"] = classifier_accuracy(final_model, eval_ds, model_shape);
  }
  config::write_json_file((dir / "summary.json").string(), summary);

  out << "trained " << log.size() << " epochs, peak lr " << cfg.train.peak_lr();
  if (!log.empty()) out << ", final loss " << log.back().loss;
  if (last_probe) out << ", probe acc " << *last_probe;
  out << "; outputs in " << dir.string() << '\n';
  return aborted ? kExitRuntime : kExitOk;
}

// --- probe -------------------------------------------------------------------

std::vector<MetricsRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("metrics file not found: " + path);
  std::vector<MetricsRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      log.push_back(MetricsRecord::from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
  return log;
}

int cmd_probe(const config::ProbeRunConfig& cfg, std::ostream& out) {
  cfg.validate();
  require_file(cfg.checkpoint, "checkpoint");
  require_source_files(cfg.data);
  require_source_files(cfg.test_data);
  const Model model = load_checkpoint(cfg.checkpoint);

  auto [train_ds, test_ds] = config::load_data(cfg.data, cfg.test_data);
  if (!train_ds.has_labels()) throw ConfigError("probe needs labeled data");
  if (test_ds && !test_ds->has_labels()) throw ConfigError("probe test data has no labels");
  if (cfg.normalize) normalize_splits(train_ds, test_ds);
  const std::size_t d = model.backbone.widths().front();
  if (train_ds.dim() != d) {
    throw ConfigError("checkpoint expects inputs of width " + std::to_string(d) +
                      " but the data has width " + std::to_string(train_ds.dim()));
  }

  const FeatureBank tr = extract_features(model.backbone, train_ds, "train");
  const FeatureBank te = extract_features(model.backbone, test_ds ? *test_ds : train_ds, "test");
  const ProbeResult res = linear_probe(tr, te, cfg.probe);

  Json report{{"checkpoint", cfg.checkpoint},
              {"features", model.backbone.widths().back()},
              {"classes", res.classes},
              {"train_samples", tr.features.rows()},
              {"test_samples", te.features.rows()},
              {"test_split", test_ds ? "test" : "train"},
              {"train_acc", res.train_acc},
              {"test_acc", res.test_acc},
              {"steps", res.steps},
              {"grad_norm", res.grad_norm},
              {"probe", probe_json(cfg.probe)}};
  if (!cfg.metrics.empty()) {
    const std::vector<MetricsRecord> log = read_metrics(cfg.metrics);
    report["spearman_loss_acc"] = loss_acc_correlation(log);
  }
  if (!cfg.out.empty()) {
    const fs::path dir = cfg.out;
    ensure_dir(dir);
    config::write_json_file((dir / "probe.json").string(), report);
    config::write_json_file((dir / "resolved-config.json").string(), config::to_json(cfg));
  }
  out << report.dump(2) << '\n';
  return kExitOk;
}

// --- theory ------------------------------------------------------------------

int cmd_theory(const config::TheoryRunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const std::size_t reps = cfg.resolved_reps();
  const double kappa = cfg.resolved_kappa();
  const theory::ClusteredSpec spec{theory::orthogonal_centroids(cfg.k, cfg.dim, cfg.seed), reps};
  const theory::OptimalityReport r = theory::verify_optimality(spec, kappa, cfg.tol, cfg.grad_rel_tol);

  theory::DescentConfig dc;
  dc.steps = cfg.steps;
  dc.method = cfg.method == "gd" ? theory::DescentMethod::kGradientDescent
                                 : theory::DescentMethod::kAdam;
  dc.lr = cfg.lr;
  dc.seed = cfg.seed;
  dc.record_every = cfg.record_every;
  const theory::DescentTrace trace = theory::descend_linear_diet(make_clustered_data(spec), cfg.k, dc);

  Json report{
      {"k", r.k},
      {"n", r.n},
      {"dim", r.dim},
      {"rank", r.rank},
      {"kappa", r.kappa},
      {"kappa_k_over_n", r.kappa * static_cast<double>(r.k) / static_cast<double>(r.n)},
      {"optimality",
       {{"x_norm", r.x_norm},
        {"grad_w_norm", r.grad_w_norm},
        {"grad_v_norm", r.grad_v_norm},
        {"grad_bound", r.grad_rel_tol * r.x_norm},
        {"a_max_deviation", r.a_max_deviation},
        {"loss", r.loss},
        {"optimal_loss", r.optimal_loss},
        {"loss_gap", r.loss_gap},
        {"tol", r.tol},
        {"grad_pass", r.grad_pass},
        {"a_matrix_pass", r.a_matrix_pass},
        {"loss_pass", r.loss_pass},
        {"pass", r.pass()}}},
      {"within_block",
       {{"numeric", r.within_block_numeric},
        {"k_over_n", r.within_block_k_over_n},
        {"one_over_k", r.within_block_one_over_k}}},
      {"convergence",
       {{"method", cfg.method},
        {"lr", cfg.lr},
        {"steps", cfg.steps},
        {"final_loss", trace.final_loss},
        {"optimal_loss", trace.optimal_loss},
        {"final_gap", trace.final_gap},
        {"target_gap", kConvergenceGap},
        {"first_step_within_target", trace.first_step_within(kConvergenceGap)},
        {"pass", trace.final_gap <= kConvergenceGap}}}};

  const fs::path dir = cfg.out;
  ensure_dir(dir);
  config::write_json_file((dir / "report.json").string(), report);
  config::write_json_file((dir / "resolved-config.json").string(), config::to_json(cfg));
  std::string csv = "step,loss,gap\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    csv += std::to_string(trace.steps[i]);
    for (double v : {trace.losses[i], trace.losses[i] - trace.optimal_loss}) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      csv += ',';
      csv.append(buf, res.ptr);
    }
    csv += '\n';
  }
  write_text(dir / "loss-curve.csv", csv);
  out << report.dump(2) << '\n';
  return kExitOk;
}

// --- dispatch ----------------------------------------------------------------

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const std::string command = argc > 1 ? argv[1] : "";
  const std::optional<std::string> config_path = find_config_flag(argc, argv);
  std::optional<Json> preset;
  if (config_path) preset = config::read_json_file(*config_path);

  config::GenDataConfig gen = preset && command == "gen-data" ? config::gen_data_from_json(*preset)
                                                              : config::GenDataConfig{};
  config::TrainRunConfig train =
      preset && command == "train" ? config::train_from_json(*preset) : config::TrainRunConfig{};
  config::ProbeRunConfig probe =
      preset && command == "probe" ? config::probe_from_json(*preset) : config::ProbeRunConfig{};
  config::TheoryRunConfig theo =
      preset && command == "theory" ? config::theory_from_json(*preset) : config::TheoryRunConfig{};

  CLI::App app{"DIET: self-supervised learning with the datum index as target", "diet-lab"};
  app.require_subcommand(1);
  std::string ignored;
  auto config_flag = [&](CLI::App* sub) {
    sub->add_option("--config", ignored, "resolved-config.json to start from");
  };

  CLI::App* g = app.add_subcommand("gen-data", "write a synthetic blobs dataset");
  config_flag(g);
  g->add_option("--classes", gen.blobs.classes);
  g->add_option("--per-class", gen.blobs.per_class);
  g->add_option("--dim", gen.blobs.dim);
  g->add_option("--spread", gen.blobs.spread, "per-coordinate noise std around each centroid");
  g->add_option("--center-scale", gen.blobs.center_scale, "per-coordinate centroid std");
  g->add_option("--seed", gen.blobs.seed);
  g->add_option("--test-per-class", gen.test_per_class, "held-out samples per class");
  g->add_option("-o,--out", gen.out, "output directory");

  CLI::App* t = app.add_subcommand("train", "train a backbone with DIET or supervised labels");
  config_flag(t);
  SourceFlags train_src, train_test_src;
  add_source_flags(*t, train_src, "", train.data, true);
  add_source_flags(*t, train_test_src, "test", train.test_data, false);
  TrainConfig& tc = train.train;
  std::string mode = train.mode == config::TrainMode::kDiet ? "diet" : "supervised";
  t->add_option("--backbone", train.backbone, "linear or mlp:W[,W...]");
  t->add_option("--features", train.features, "representation width K");
  t->add_flag("--bias,!--no-bias", train.bias);
  t->add_option("--head-init", train.head_init)->check(CLI::IsMember({"uniform", "zeros"}));
  t->add_option("--mode", mode)->check(CLI::IsMember({"diet", "supervised"}));
  t->add_option("--lr", tc.lr, "base learning rate before batch-size scaling");
  t->add_option("--weight-decay", tc.weight_decay);
  t->add_option("--label-smoothing", tc.label_smoothing);
  t->add_option("--warmup-epochs", tc.warmup_epochs);
  t->add_option("--epochs", tc.epochs);
  t->add_option("--batch-size", tc.batch_size);
  t->add_option("--seed", tc.seed);
  t->add_flag("--scale-lr,!--no-scale-lr", tc.scale_lr_by_batch);
  t->add_flag("--shuffle,!--no-shuffle", tc.shuffle);
  t->add_option("--adam-beta1", tc.adamw.beta1);
  t->add_option("--adam-beta2", tc.adamw.beta2);
  t->add_option("--adam-eps", tc.adamw.eps);
  t->add_option("--probe-every", tc.probe_every, "online probe cadence in epochs");
  double stop_at = tc.stop_at_probe_acc.value_or(0.0);
  CLI::Option* stop_opt =
      t->add_option("--stop-at-probe-acc", stop_at, "stop once the online probe reaches this");
  t->add_flag("--online-probe,!--no-online-probe", train.online_probe);
  t->add_option("--augment", train.augment_strength, "augmentation strength 0-3");
  t->add_option("--augment-height", train.augment_height);
  t->add_option("--augment-width", train.augment_width);
  t->add_flag("--normalize,!--no-normalize", train.normalize);
  add_probe_flags(*t, train.probe);
  t->add_option("-o,--out", train.out, "output directory");

  CLI::App* p = app.add_subcommand("probe", "linear probe of a checkpoint's frozen features");
  config_flag(p);
  SourceFlags probe_src, probe_test_src;
  add_source_flags(*p, probe_src, "", probe.data, true);
  add_source_flags(*p, probe_test_src, "test", probe.test_data, false);
  p->add_option("--checkpoint", probe.checkpoint, "checkpoint manifest (.json)");
  p->add_flag("--normalize,!--no-normalize", probe.normalize);
  p->add_option("--metrics", probe.metrics, "metrics.jsonl for the loss/accuracy correlation");
  add_probe_flags(*p, probe.probe);
  p->add_option("-o,--out", probe.out, "directory for probe.json");

  CLI::App* th = app.add_subcommand("theory", "verify the closed-form linear DIET optimum");
  config_flag(th);
  th->add_option("--k", theo.k, "number of clusters");
  th->add_option("--reps", theo.reps, "samples per cluster");
  th->add_option("--n", theo.n, "total samples; must be a multiple of --k");
  th->add_option("--dim", theo.dim);
  th->add_option("--kappa", theo.kappa, "head scale; 0 picks 40 N / K");
  th->add_option("--tol", theo.tol);
  th->add_option("--grad-rel-tol", theo.grad_rel_tol);
  th->add_option("--seed", theo.seed);
  th->add_option("--steps", theo.steps, "descent steps for the convergence demo");
  th->add_option("--lr", theo.lr);
  th->add_option("--method", theo.method)->check(CLI::IsMember({"adam", "gd"}));
  th->add_option("--record-every", theo.record_every);
  th->add_option("-o,--out", theo.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (g->parsed()) return cmd_gen_data(gen, out);
  if (t->parsed()) {
    apply_source_flags(train_src, train.data);
    apply_source_flags(train_test_src, train.test_data);
    train.mode = mode == "diet" ? config::TrainMode::kDiet : config::TrainMode::kSupervised;
    if (stop_opt->count()) tc.stop_at_probe_acc = stop_at;
    return cmd_train(train, out, err);
  }
  if (p->parsed()) {
    apply_source_flags(probe_src, probe.data);
    apply_source_flags(probe_test_src, probe.test_data);
    return cmd_probe(probe, out);
  }
  return cmd_theory(theo, out);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(argc, argv, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace diet
