// geneae command-line tool: synth, split, train-ae, train-clf, predict,
// eval, baselines, report-plot.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <geneae/geneae.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geneae;

namespace {

/// Reads a flat JSON object (or one section per subcommand) as CLI11 config.
/// Flat keys apply to the active subcommand when it has that option; keys
/// no subcommand knows are an error. Underscores in keys read as hyphens.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
    const CLI::App* active = nullptr;
    for (const auto* sub : root_->get_subcommands()) active = sub;

    std::vector<CLI::ConfigItem> items;
    auto add = [&](const CLI::App* sub, const std::string& raw, const json& value) {
      std::string key = raw;
      std::replace(key.begin(), key.end(), '_', '-');
      if (key == "config") return;
      bool known = false;
      for (const auto* s : root_->get_subcommands({})) known |= s->get_option_no_throw("--" + key) != nullptr;
      if (!known) throw CLI::ConfigError("unknown config key '" + raw + "'");
      if (sub == nullptr || sub->get_option_no_throw("--" + key) == nullptr) return;
      CLI::ConfigItem item;
      item.parents = {sub->get_name()};
      item.name = key;
      auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    };
    for (const auto& [key, value] : j.items()) {
      const CLI::App* section = nullptr;
      for (const auto* s : root_->get_subcommands({}))
        if (s->get_name() == key) section = s;
      if (section != nullptr && value.is_object()) {
        if (section != active) continue;
        for (const auto& [k, v] : value.items()) add(section, k, v);
      } else {
        add(active, key, value);
      }
    }
    return items;
  }

 private:
  const CLI::App* root_;
};

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

void print_error(std::string_view code, std::string_view category, const std::string& message) {
  std::cerr << "error: code=" << code << " category=" << category << " message=" << json(one_line(message)).dump()
            << '\n';
}

int exit_code_of(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::numerical: return 4;
  }
  return 1;
}

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::data: return "data";
    case ErrorCategory::numerical: return "numerical";
  }
  return "unknown";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_file, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::bad_format, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::missing_file, "cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  fail(ErrorCode::usage, "unknown optimizer '" + s + "' (expected adam or sgd)");
}

struct TrainFlags {
  int epochs = 1000;
  int batch_size = 32;
  double lr = 1e-3;
  std::string optimizer = "adam";

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--lr", lr, "Learning rate")->capture_default_str();
    app->add_option("--optimizer", optimizer, "adam or sgd")->capture_default_str();
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.learning_rate = lr;
    c.optimizer = optimizer_from_string(optimizer);
    c.seed = seed;
    return c;
  }
};

/// Rows whose label is in `keep`; everything when `keep` is empty.
ExpressionDataset select_labels(ExpressionDataset ds, const std::vector<std::string>& keep) {
  if (keep.empty()) return ds;
  const auto& labels = ds.require_labels();
  std::vector<Index> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (std::find(keep.begin(), keep.end(), labels[i]) != keep.end()) rows.push_back(static_cast<Index>(i));
  if (rows.empty()) fail(ErrorCode::empty_dataset, "no rows carry any of the selected labels");
  return ds.subset(rows);
}

ExpressionDataset load_labeled(const fs::path& path, const std::vector<std::string>& keep, bool log2) {
  auto ds = select_labels(load_matrix(path, std::string("label")), keep);
  return log2 ? log2p1(std::move(ds)) : ds;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  fs::path output;
  std::uint64_t seed = 0;
  int classes = 2;
  std::vector<int> samples_per_class;
  Index features = 50;
  Index latent_dim = 3;
  double noise = 0.1;
  double strength = 1.0;
  double separation = 3.0;
  double spread = 1.0;
  double amplitude = 1.5;
};

void run_synth(const SynthArgs& a) {
  SynthSpec s;
  s.n_classes = a.classes;
  s.samples_per_class = a.samples_per_class.empty() ? std::vector<int>(static_cast<std::size_t>(std::max(a.classes, 0)), 100)
                                                     : a.samples_per_class;
  s.feature_dim = a.features;
  s.latent_dim = a.latent_dim;
  s.noise = a.noise;
  s.nonlinearity_strength = a.strength;
  s.class_separation = a.separation;
  s.latent_spread = a.spread;
  s.amplitude = a.amplitude;
  s.seed = a.seed;
  const auto ds = generate(s);
  if (a.output.has_parent_path()) fs::create_directories(a.output.parent_path());
  write_matrix(ds, a.output);
}

// --- split -----------------------------------------------------------------

struct SplitArgs {
  fs::path input;
  fs::path output;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

void run_split(const SplitArgs& a) {
  const auto ds = load_matrix(a.input, std::string("label"));
  const auto split = stratified_split(ds, a.train_fraction, derive_seed(a.seed, "split"));
  fs::create_directories(a.output);
  const std::string ext = a.input.extension().string().empty() ? ".csv" : a.input.extension().string();
  write_matrix(split.train, a.output / ("train" + ext));
  write_matrix(split.test, a.output / ("test" + ext));
}

// --- train-ae --------------------------------------------------------------

struct TrainAeArgs {
  fs::path input;
  fs::path output;
  std::uint64_t seed = 0;
  TrainFlags train;
  Index code_dim = 25;
  std::vector<Index> encoder_widths{100, 50};
  bool log2 = false;
  std::string precision = "double";
};

void run_train_ae(const TrainAeArgs& a) {
  if (a.precision != "double" && a.precision != "float")
    fail(ErrorCode::usage, "unknown precision '" + a.precision + "' (expected double or float)");
  auto ds = load_matrix(a.input);
  if (a.log2) ds = log2p1(std::move(ds));
  const auto scaler = fit_minmax(ds);
  const Matrix x = apply_minmax(scaler, ds.values);
  AutoencoderSpec spec{ds.n_features(), a.encoder_widths, a.code_dim};
  auto net = build_autoencoder(spec, derive_seed(a.seed, "ae-init"));
  const auto config = a.train.config(derive_seed(a.seed, "ae-train"));
  TrainHistory history;
  if (a.precision == "float") {
    check_unit_interval(x);
    auto single = net.cast<float>();
    const MatrixT<float> xf = x.cast<float>();
    history = train_network<float>(single, xf, xf, LossKind::reconstruction, config);
    net = single.cast<double>();
  } else {
    history = train_autoencoder(net, x, config);
  }

  fs::create_directories(a.output);
  write_json(a.output / "autoencoder.json", bundle_to_json(AutoencoderBundle{spec, scaler, net, a.log2}));
  write_json(a.output / "encoder.json",
             bundle_to_json(AutoencoderBundle{spec, scaler, extract_encoder(net, spec), a.log2}));
  write_json(a.output / "history.json", json(history));
}

// --- train-clf -------------------------------------------------------------

struct TrainClfArgs {
  fs::path input;
  fs::path encoder;
  fs::path output;
  std::optional<fs::path> history;
  std::uint64_t seed = 0;
  TrainFlags train;
  std::string task = "detect";
  std::string negative = "normal";
  std::vector<Index> head_widths{64};
  double validation_fraction = 0.1;
  int patience = 20;
  std::vector<std::string> select;
};

void run_train_clf(const TrainClfArgs& a) {
  const auto task = task_from_string(a.task);
  const auto enc = autoencoder_bundle_from_json(read_json(a.encoder));
  const auto ds = load_labeled(a.input, a.select, enc.log2_transform);
  if (ds.n_features() != enc.scaler.mins.size())
    fail(ErrorCode::dimension_mismatch, "input has " + std::to_string(ds.n_features()) +
                                            " features, encoder expects " + std::to_string(enc.scaler.mins.size()));

  ClassifierBundle bundle;
  bundle.task = task;
  bundle.vocab = LabelVocabulary::from_labels(ds.require_labels());
  bundle.vocab.negative = a.negative;
  if (task == Task::detect && !bundle.vocab.contains(a.negative))
    fail(ErrorCode::missing_labels, "detection needs negative-class rows labeled '" + a.negative + "'");
  if (task == Task::type && bundle.vocab.size() < 2)
    fail(ErrorCode::class_too_small, "typing needs at least two classes");
  bundle.scaler = enc.scaler;
  bundle.log2_transform = enc.log2_transform;

  ClassifierSpec spec;
  spec.head_hidden_widths = a.head_widths;
  spec.n_classes = task == Task::detect ? 2 : static_cast<int>(bundle.vocab.size());
  bundle.network = build_transfer_classifier(enc.network, spec, derive_seed(a.seed, "clf-init"));

  const Matrix x = apply_minmax(bundle.scaler, ds.values);
  const auto y = encode_labels(ds, bundle.vocab, bundle.label_mode());
  ClassifierTraining options{a.validation_fraction, a.patience};
  const auto history = train_classifier(bundle.network, x, y, a.train.config(derive_seed(a.seed, "clf-train")), options);

  write_json(a.output, bundle_to_json(bundle));
  if (a.history) write_json(*a.history, json(history));
}

// --- predict ---------------------------------------------------------------

struct PredictArgs {
  fs::path input;
  fs::path model;
  fs::path output;
};

ClassifierBundle load_classifier(const fs::path& path) { return classifier_bundle_from_json(read_json(path)); }

Matrix scaled_inputs(const ClassifierBundle& b, const ExpressionDataset& ds) {
  if (ds.n_features() != b.scaler.mins.size())
    fail(ErrorCode::dimension_mismatch, "input has " + std::to_string(ds.n_features()) +
                                            " features, model expects " + std::to_string(b.scaler.mins.size()));
  return apply_minmax(b.scaler, ds.values);
}

void run_predict(const PredictArgs& a) {
  const auto bundle = load_classifier(a.model);
  auto ds = load_matrix(a.input);
  if (bundle.log2_transform) ds = log2p1(std::move(ds));
  const auto pred = predict(bundle.network, scaled_inputs(bundle, ds));
  const auto names = bundle.class_names();

  std::string out = "sample_id,predicted";
  if (pred.probabilities.cols() == 1) {
    out += ",p_" + names[1];
  } else {
    for (const auto& n : names) out += ",p_" + n;
  }
  out += '\n';
  for (Index r = 0; r < ds.n_samples(); ++r) {
    out += ds.sample_ids[static_cast<std::size_t>(r)] + ',' + names[static_cast<std::size_t>(pred.classes[static_cast<std::size_t>(r)])];
    for (Index c = 0; c < pred.probabilities.cols(); ++c) out += ',' + shortest(pred.probabilities(r, c));
    out += '\n';
  }
  write_text(a.output, out);
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  fs::path input;
  fs::path model;
  fs::path output;
  std::optional<fs::path> text;
  double threshold = 0.90;
  std::vector<std::string> select;
};

void run_eval(const EvalArgs& a) {
  const auto bundle = load_classifier(a.model);
  const auto ds = load_labeled(a.input, a.select, bundle.log2_transform);
  const auto y = encode_labels(ds, bundle.vocab, bundle.label_mode());
  const auto pred = predict(bundle.network, scaled_inputs(bundle, ds));
  const auto report = evaluate(y, pred.classes, bundle.class_names(), a.threshold);
  write_json(a.output, report_to_json(report));
  const auto text = render_text(report);
  if (a.text) write_text(*a.text, text);
  std::cout << text;
}

// --- baselines -------------------------------------------------------------

struct BaselineArgs {
  fs::path input;
  fs::path test;
  fs::path output;
  std::optional<fs::path> table;
  std::uint64_t seed = 0;
  Index pca_k = 40;
  int knn_k = 5;
  int trees = 100;
  int epochs = 200;
  std::string negative = "normal";
  bool log2 = false;
  std::vector<std::string> select;
};

void run_baselines(const BaselineArgs& a) {
  const auto train = load_labeled(a.input, a.select, a.log2);
  const auto test = load_labeled(a.test, a.select, a.log2);
  // Detection only distinguishes the negative class from everything else,
  // so the vocabulary lists every name seen in either file.
  auto names = train.require_labels();
  names.insert(names.end(), test.require_labels().begin(), test.require_labels().end());
  auto vocab = LabelVocabulary::from_labels(names);
  vocab.negative = a.negative;

  BaselineOptions opt;
  opt.pca_k = a.pca_k;
  opt.knn_k = a.knn_k;
  opt.forest.n_trees = a.trees;
  opt.nn.config.epochs = a.epochs;
  const auto report = run_baseline_suite(train, test, vocab, opt, a.seed);
  write_text(a.output, render_csv(report));
  const auto table = render_table(report);
  if (a.table) write_text(*a.table, table);
  std::cout << table;
}

// --- report-plot -----------------------------------------------------------

struct PlotArgs {
  fs::path input;
  fs::path output;
  int cell = 28;
};

void run_report_plot(const PlotArgs& a) {
  const auto report = report_from_json(read_json(a.input));
  write_text(a.output, render_svg_heatmap(report, a.cell));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autoencoder-based cancer detection and typing on gene expression matrices", "geneae"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic labeled expression matrix");
  s->add_option("--output", synth.output, "Output matrix (.csv or .tsv)")->required();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--classes", synth.classes)->capture_default_str();
  s->add_option("--samples-per-class", synth.samples_per_class, "Comma-separated counts, default 100 each")
      ->delimiter(',');
  s->add_option("--features", synth.features)->capture_default_str();
  s->add_option("--latent-dim", synth.latent_dim)->capture_default_str();
  s->add_option("--noise", synth.noise)->capture_default_str();
  s->add_option("--strength", synth.strength, "Nonlinearity strength")->capture_default_str();
  s->add_option("--separation", synth.separation, "Distance between class means in latent space")
      ->capture_default_str();
  s->add_option("--spread", synth.spread, "Within-class latent standard deviation")->capture_default_str();
  s->add_option("--amplitude", synth.amplitude)->capture_default_str();

  SplitArgs split;
  auto* sp = app.add_subcommand("split", "Stratified train/test split into OUTPUT/train and OUTPUT/test");
  sp->add_option("--input", split.input)->required();
  sp->add_option("--output", split.output, "Output directory")->required();
  sp->add_option("--seed", split.seed)->capture_default_str();
  sp->add_option("--train-fraction", split.train_fraction)->capture_default_str();

  TrainAeArgs ae;
  auto* a = app.add_subcommand("train-ae", "Train the autoencoder; writes autoencoder.json, encoder.json, history.json");
  a->add_option("--input", ae.input, "Training matrix")->required();
  a->add_option("--output", ae.output, "Output directory")->required();
  a->add_option("--seed", ae.seed)->capture_default_str();
  ae.train.add_to(a);
  a->add_option("--code-dim", ae.code_dim)->capture_default_str();
  a->add_option("--encoder-widths", ae.encoder_widths)->delimiter(',')->capture_default_str();
  a->add_flag("--log2", ae.log2, "Apply log2(x + 1) before scaling");
  a->add_option("--precision", ae.precision, "double or float")->capture_default_str();

  TrainClfArgs clf;
  auto* c = app.add_subcommand("train-clf", "Train a classifier head on a frozen encoder");
  c->add_option("--input", clf.input, "Labeled training matrix")->required();
  c->add_option("--encoder", clf.encoder, "encoder.json from train-ae")->required();
  c->add_option("--output", clf.output, "Classifier bundle (.json)")->required();
  c->add_option("--history", clf.history, "Optional training history (.json)");
  c->add_option("--seed", clf.seed)->capture_default_str();
  clf.train.epochs = 200;
  clf.train.add_to(c);
  c->add_option("--task", clf.task, "detect or type")->capture_default_str();
  c->add_option("--negative-label", clf.negative)->capture_default_str();
  c->add_option("--head-widths", clf.head_widths)->delimiter(',')->capture_default_str();
  c->add_option("--validation-fraction", clf.validation_fraction)->capture_default_str();
  c->add_option("--patience", clf.patience)->capture_default_str();
  c->add_option("--select-labels", clf.select, "Train only on rows with these labels")->delimiter(',');

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Write per-sample predictions as CSV");
  p->add_option("--input", pr.input)->required();
  p->add_option("--model", pr.model, "Classifier bundle")->required();
  p->add_option("--output", pr.output)->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a classifier on labeled test data");
  e->add_option("--input", ev.input, "Labeled test matrix")->required();
  e->add_option("--model", ev.model, "Classifier bundle")->required();
  e->add_option("--output", ev.output, "Report (.json)")->required();
  e->add_option("--text", ev.text, "Optional heat-table text file");
  e->add_option("--threshold", ev.threshold, "Per-class recall threshold")->capture_default_str();
  e->add_option("--select-labels", ev.select, "Evaluate only rows with these labels")->delimiter(',');

  BaselineArgs bl;
  auto* b = app.add_subcommand("baselines", "PCA baseline comparison for detection");
  b->add_option("--input", bl.input, "Labeled training matrix")->required();
  b->add_option("--test", bl.test, "Labeled test matrix")->required();
  b->add_option("--output", bl.output, "Report (.csv)")->required();
  b->add_option("--table", bl.table, "Optional fixed-width table file");
  b->add_option("--seed", bl.seed)->capture_default_str();
  b->add_option("--pca-k", bl.pca_k)->capture_default_str();
  b->add_option("--knn-k", bl.knn_k)->capture_default_str();
  b->add_option("--trees", bl.trees)->capture_default_str();
  b->add_option("--epochs", bl.epochs, "Epochs for the PCA neural network")->capture_default_str();
  b->add_option("--negative-label", bl.negative)->capture_default_str();
  b->add_flag("--log2", bl.log2, "Apply log2(x + 1) before scaling");
  b->add_option("--select-labels", bl.select, "Use only rows with these labels")->delimiter(',');

  PlotArgs pl;
  auto* r = app.add_subcommand("report-plot", "Render an eval report as an SVG heatmap");
  r->add_option("--input", pl.input, "Report (.json) from eval")->required();
  r->add_option("--output", pl.output, "Image (.svg)")->required();
  r->add_option("--cell", pl.cell, "Cell size in pixels")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << app.help();
    print_error("UsageError", "usage", ex.what());
    return 2;
  }

  try {
    if (s->parsed()) run_synth(synth);
    else if (sp->parsed()) run_split(split);
    else if (a->parsed()) run_train_ae(ae);
    else if (c->parsed()) run_train_clf(clf);
    else if (p->parsed()) run_predict(pr);
    else if (e->parsed()) run_eval(ev);
    else if (b->parsed()) run_baselines(bl);
    else if (r->parsed()) run_report_plot(pl);
  } catch (const Error& ex) {
    print_error(to_string(ex.code()), category_name(ex.category()), ex.what());
    return exit_code_of(ex.category());
  } catch (const json::exception& ex) {
    print_error(to_string(ErrorCode::bad_format), "data", ex.what());
    return 3;
  } catch (const fs::filesystem_error& ex) {
    print_error(to_string(ErrorCode::missing_file), "data", ex.what());
    return 3;
  }
  return 0;
}
