// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "diet/error.hpp"

namespace diet::config {

namespace {

// Reads typed fields from a JSON object and remembers which keys were used,
// so leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const Json& at(const char* key) const { return j_.at(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void check_command(Reader& r, const char* expected) {
  std::string cmd = expected;
  r.get("command", cmd);
  if (cmd != expected) {
    throw ConfigError("config is for command '" + cmd + "', not '" + expected + "'");
  }
}

Json blobs_to_json(const BlobsSpec& b) {
  return Json{{"classes", b.classes},   {"per_class", b.per_class}, {"dim", b.dim},
              {"spread", b.spread},     {"seed", b.seed},           {"center_scale", b.center_scale}};
}

void blobs_from(Reader& r, BlobsSpec& b) {
  r.get("classes", b.classes);
  r.get("per_class", b.per_class);
  r.get("dim", b.dim);
  r.get("spread", b.spread);
  r.get("seed", b.seed);
  r.get("center_scale", b.center_scale);
}

Json source_to_json(const DataSource& s) {
  Json j = Json::object();
  if (!s.csv.empty()) j["csv"] = s.csv;
  if (!s.idx_images.empty()) j["idx_images"] = s.idx_images;
  if (!s.idx_labels.empty()) j["idx_labels"] = s.idx_labels;
  if (s.blobs) {
    Json b = blobs_to_json(s.blobs->spec);
    b["test_per_class"] = s.blobs->test_per_class;
    j["blobs"] = b;
  }
  return j;
}

DataSource source_from_json(const Json& j, const std::string& where) {
  Reader r(j, where);
  DataSource s;
  r.get("csv", s.csv);
  r.get("idx_images", s.idx_images);
  r.get("idx_labels", s.idx_labels);
  if (r.has("blobs")) {
    Reader b(r.at("blobs"), where + ".blobs");
    BlobsSource src;
    blobs_from(b, src.spec);
    b.get("test_per_class", src.test_per_class);
    b.finish();
    s.blobs = src;
  }
  r.finish();
  return s;
}

Json probe_to_json(const ProbeConfig& p) {
  return Json{{"lr", p.lr},
              {"weight_decay", p.weight_decay},
              {"max_steps", p.max_steps},
              {"grad_tol", p.grad_tol},
              {"standardize", p.standardize}};
}

ProbeConfig probe_from_json(const Json& j, const std::string& where) {
  Reader r(j, where);
  ProbeConfig p;
  r.get("lr", p.lr);
  r.get("weight_decay", p.weight_decay);
  r.get("max_steps", p.max_steps);
  r.get("grad_tol", p.grad_tol);
  r.get("standardize", p.standardize);
  r.finish();
  return p;
}

void validate_probe(const ProbeConfig& p) {
  if (!(p.lr > 0.0)) throw ConfigError("probe.lr must be > 0");
  if (!(p.weight_decay >= 0.0)) throw ConfigError("probe.weight_decay must be >= 0");
}

}  // namespace

void DataSource::validate(const char* what) const {
  const int set = (!csv.empty()) + (!idx_images.empty()) + (blobs.has_value());
  if (set != 1) {
    throw ConfigError(std::string(what) + ": specify exactly one of csv, idx images, or blobs");
  }
  if (!idx_labels.empty() && idx_images.empty()) {
    throw ConfigError(std::string(what) + ": idx labels given without idx images");
  }
}

BackboneSpec BackboneSpec::parse(const std::string& text, std::size_t features, bool bias) {
  BackboneSpec s;
  s.features = features;
  s.bias = bias;
  if (features == 0) throw ConfigError("backbone: features must be >= 1");
  if (text == "linear") {
    s.kind = BackboneKind::kLinear;
    s.hidden.clear();
    return s;
  }
  if (text.rfind("mlp:", 0) != 0) {
    throw ConfigError("backbone: expected 'linear' or 'mlp:W[,W...]', got '" + text + "'");
  }
  s.kind = BackboneKind::kMlp;
  s.hidden.clear();
  std::stringstream ss(text.substr(4));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t w = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), w);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || w == 0) {
      throw ConfigError("backbone: bad hidden width '" + tok + "'");
    }
    s.hidden.push_back(w);
  }
  if (s.hidden.empty()) throw ConfigError("backbone: mlp needs at least one hidden width");
  return s;
}

std::string BackboneSpec::to_string() const {
  if (kind == BackboneKind::kLinear) return "linear";
  std::string s = "mlp:";
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(hidden[i]);
  }
  return s;
}

std::vector<std::size_t> BackboneSpec::widths(std::size_t input_dim) const {
  std::vector<std::size_t> w{input_dim};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(features);
  return w;
}

void GenDataConfig::validate() const {
  if (blobs.classes == 0) throw ConfigError("gen-data: --classes must be >= 1");
  if (blobs.per_class == 0) throw ConfigError("gen-data: --per-class must be >= 1");
  if (blobs.dim == 0) throw ConfigError("gen-data: --dim must be >= 1");
  if (!(blobs.spread >= 0.0)) throw ConfigError("gen-data: --spread must be >= 0");
  if (!(blobs.center_scale > 0.0)) throw ConfigError("gen-data: --center-scale must be > 0");
  if (out.empty()) throw ConfigError("gen-data: output directory required");
}

void TrainRunConfig::validate() const {
  data.validate("train data");
  if (!test_data.empty()) test_data.validate("test data");
  (void)backbone_spec();
  if (head_init != "uniform" && head_init != "zeros") {
    throw ConfigError("head_init must be 'uniform' or 'zeros'");
  }
  try {
    train.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (augment_strength < 0 || augment_strength > 3) {
    throw ConfigError("augment strength must be 0 (off), 1, 2 or 3");
  }
  if ((augment_height == 0) != (augment_width == 0)) {
    throw ConfigError("augment size needs both height and width");
  }
  validate_probe(probe);
  if (out.empty()) throw ConfigError("train: output directory required");
}

BackboneSpec TrainRunConfig::backbone_spec() const {
  return BackboneSpec::parse(backbone, features, bias);
}

void ProbeRunConfig::validate() const {
  if (checkpoint.empty()) throw ConfigError("probe: --checkpoint is required");
  data.validate("probe data");
  if (!test_data.empty()) test_data.validate("probe test data");
  validate_probe(probe);
}

void TheoryRunConfig::validate() const {
  if (k == 0) throw ConfigError("theory: --k must be >= 1");
  if (n && n % k != 0) {
    throw ConfigError("theory: --k " + std::to_string(k) + " does not divide --n " +
                      std::to_string(n));
  }
  if (resolved_reps() == 0) throw ConfigError("theory: need at least one sample per cluster");
  if (dim < k) throw ConfigError("theory: --dim must be >= --k for orthogonal centroids");
  if (kappa < 0.0) throw ConfigError("theory: --kappa must be > 0");
  if (!(tol > 0.0) || !(grad_rel_tol > 0.0)) throw ConfigError("theory: tolerances must be > 0");
  if (!(lr > 0.0)) throw ConfigError("theory: --lr must be > 0");
  if (method != "adam" && method != "gd") throw ConfigError("theory: --method must be adam or gd");
  if (out.empty()) throw ConfigError("theory: output directory required");
}

double TheoryRunConfig::resolved_kappa() const {
  return kappa > 0.0 ? kappa : 40.0 * static_cast<double>(resolved_reps());
}

Json to_json(const GenDataConfig& c) {
  Json j{{"command", "gen-data"}};
  const Json blobs = blobs_to_json(c.blobs);
  for (auto it = blobs.begin(); it != blobs.end(); ++it) j[it.key()] = *it;
  j["test_per_class"] = c.test_per_class;
  j["out"] = c.out;
  return j;
}

GenDataConfig gen_data_from_json(const Json& j) {
  Reader r(j, "gen-data config");
  check_command(r, "gen-data");
  GenDataConfig c;
  blobs_from(r, c.blobs);
  r.get("test_per_class", c.test_per_class);
  r.get("out", c.out);
  r.finish();
  return c;
}

Json to_json(const TrainRunConfig& c) {
  const TrainConfig& t = c.train;
  Json j{{"command", "train"}};
  j["data"] = source_to_json(c.data);
  j["test_data"] = source_to_json(c.test_data);
  j["backbone"] = c.backbone;
  j["features"] = c.features;
  j["bias"] = c.bias;
  j["head_init"] = c.head_init;
  j["mode"] = c.mode == TrainMode::kDiet ? "diet" : "supervised";
  j["lr"] = t.lr;
  j["weight_decay"] = t.weight_decay;
  j["label_smoothing"] = t.label_smoothing;
  j["warmup_epochs"] = t.warmup_epochs;
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["seed"] = t.seed;
  j["scale_lr"] = t.scale_lr_by_batch;
  j["shuffle"] = t.shuffle;
  j["adam_beta1"] = t.adamw.beta1;
  j["adam_beta2"] = t.adamw.beta2;
  j["adam_eps"] = t.adamw.eps;
  j["probe_every"] = t.probe_every;
  j["stop_at_probe_acc"] = t.stop_at_probe_acc ? Json(*t.stop_at_probe_acc) : Json();
  j["augment_strength"] = c.augment_strength;
  j["augment_height"] = c.augment_height;
  j["augment_width"] = c.augment_width;
  j["normalize"] = c.normalize;
  j["online_probe"] = c.online_probe;
  j["probe"] = probe_to_json(c.probe);
  j["out"] = c.out;
  return j;
}

TrainRunConfig train_from_json(const Json& j) {
  Reader r(j, "train config");
  check_command(r, "train");
  TrainRunConfig c;
  TrainConfig& t = c.train;
  if (r.has("data")) c.data = source_from_json(r.at("data"), "data");
  if (r.has("test_data")) c.test_data = source_from_json(r.at("test_data"), "test_data");
  r.get("backbone", c.backbone);
  r.get("features", c.features);
  r.get("bias", c.bias);
  r.get("head_init", c.head_init);
  std::string mode = "diet";
  r.get("mode", mode);
  if (mode == "diet") {
    c.mode = TrainMode::kDiet;
  } else if (mode == "supervised") {
    c.mode = TrainMode::kSupervised;
  } else {
    throw ConfigError("mode must be 'diet' or 'supervised'");
  }
  r.get("lr", t.lr);
  r.get("weight_decay", t.weight_decay);
  r.get("label_smoothing", t.label_smoothing);
  r.get("warmup_epochs", t.warmup_epochs);
  r.get("epochs", t.epochs);
  r.get("batch_size", t.batch_size);
  r.get("seed", t.seed);
  r.get("scale_lr", t.scale_lr_by_batch);
  r.get("shuffle", t.shuffle);
  r.get("adam_beta1", t.adamw.beta1);
  r.get("adam_beta2", t.adamw.beta2);
  r.get("adam_eps", t.adamw.eps);
  r.get("probe_every", t.probe_every);
  if (r.has("stop_at_probe_acc")) {
    double v = 0.0;
    r.get("stop_at_probe_acc", v);
    t.stop_at_probe_acc = v;
  }
  r.get("augment_strength", c.augment_strength);
  r.get("augment_height", c.augment_height);
  r.get("augment_width", c.augment_width);
  r.get("normalize", c.normalize);
  r.get("online_probe", c.online_probe);
  if (r.has("probe")) c.probe = probe_from_json(r.at("probe"), "probe");
  r.get("out", c.out);
  r.finish();
  return c;
}

Json to_json(const ProbeRunConfig& c) {
  Json j{{"command", "probe"}};
  j["checkpoint"] = c.checkpoint;
  j["data"] = source_to_json(c.data);
  j["test_data"] = source_to_json(c.test_data);
  j["normalize"] = c.normalize;
  j["probe"] = probe_to_json(c.probe);
  j["metrics"] = c.metrics;
  j["out"] = c.out;
  return j;
}

ProbeRunConfig probe_from_json(const Json& j) {
  Reader r(j, "probe config");
  check_command(r, "probe");
  ProbeRunConfig c;
  r.get("checkpoint", c.checkpoint);
  if (r.has("data")) c.data = source_from_json(r.at("data"), "data");
  if (r.has("test_data")) c.test_data = source_from_json(r.at("test_data"), "test_data");
  r.get("normalize", c.normalize);
  if (r.has("probe")) c.probe = probe_from_json(r.at("probe"), "probe");
  r.get("metrics", c.metrics);
  r.get("out", c.out);
  r.finish();
  return c;
}

Json to_json(const TheoryRunConfig& c) {
  return Json{{"command", "theory"}, {"k", c.k},
              {"reps", c.reps},      {"n", c.n},
              {"dim", c.dim},
              {"kappa", c.kappa},    {"tol", c.tol},
              {"grad_rel_tol", c.grad_rel_tol},
              {"seed", c.seed},      {"steps", c.steps},
              {"lr", c.lr},          {"method", c.method},
              {"record_every", c.record_every},
              {"out", c.out}};
}

TheoryRunConfig theory_from_json(const Json& j) {
  Reader r(j, "theory config");
  check_command(r, "theory");
  TheoryRunConfig c;
  r.get("k", c.k);
  r.get("reps", c.reps);
  r.get("n", c.n);
  r.get("dim", c.dim);
  r.get("kappa", c.kappa);
  r.get("tol", c.tol);
  r.get("grad_rel_tol", c.grad_rel_tol);
  r.get("seed", c.seed);
  r.get("steps", c.steps);
  r.get("lr", c.lr);
  r.get("method", c.method);
  r.get("record_every", c.record_every);
  r.get("out", c.out);
  r.finish();
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

namespace {

IndexedDataset load_one(const DataSource& s) {
  if (!s.csv.empty()) return load_csv(s.csv);
  if (!s.idx_images.empty()) {
    std::optional<std::filesystem::path> labels;
    if (!s.idx_labels.empty()) labels = s.idx_labels;
    return load_idx(s.idx_images, labels);
  }
  return gen_blobs(s.blobs->spec);
}

}  // namespace

std::pair<IndexedDataset, std::optional<IndexedDataset>> load_data(const DataSource& train,
                                                                   const DataSource& test) {
  train.validate("train data");
  IndexedDataset tr = load_one(train);
  std::optional<IndexedDataset> te;
  if (!test.empty()) {
    test.validate("test data");
    te = load_one(test);
  } else if (train.blobs) {
    const auto& b = *train.blobs;
    te = gen_blobs_split(b.spec, b.test_per_class ? b.test_per_class : b.spec.per_class);
  }
  if (te && te->dim() != tr.dim()) throw ConfigError("train and test data differ in width");
  return {std::move(tr), std::move(te)};
}

}  // namespace diet::config
