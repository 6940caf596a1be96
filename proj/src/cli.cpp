/* Copyright 2026 The gWaveNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gwavenet/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gwavenet/data.hpp"
#include "gwavenet/error.hpp"
#include "gwavenet/filters.hpp"
#include "gwavenet/model.hpp"
#include "gwavenet/pgm.hpp"
#include "gwavenet/tensor_io.hpp"
#include "gwavenet/train.hpp"

namespace gwavenet::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSeedEnv = "GWAVENET_SEED";

// Settings that are fine syntactically but cannot be honoured together.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct NetOptions {
  std::size_t kernel = 7;
  std::string config = "trainable";
  std::string kernel_kind;  // empty: checkerboard, or random for nckl
  std::size_t first_filters = 1;
  std::vector<std::size_t> conv_filters = {32, 32, 16, 16, 8};
  std::size_t dense = 64;
  double dropout = 0.5;
  double lambda_reg = 1e-4;
};

struct TrainOptions {
  std::string data;
  std::size_t epochs = 2000;
  std::size_t batch_size = 128;
  double lr = 0.01;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  std::size_t micro_batch = 16;
  double subsample = 1.0;
};

void add_net_options(CLI::App* app, NetOptions& o) {
  app->add_option("--kernel", o.kernel, "First-layer kernel side")->check(CLI::IsMember({3, 5, 7, 9}));
  app->add_option("--config", o.config, "Train configuration")
      ->check(CLI::IsMember({"trainable", "non-trainable", "non_trainable", "kapt", "nckl"}));
  app->add_option("--kernel-kind", o.kernel_kind,
                  "checkerboard|gabor_bank|sobel|laplacian|random (default: random for nckl, else checkerboard)");
  app->add_option("--first-filters", o.first_filters, "Filters in the first conv layer")->check(CLI::PositiveNumber);
  app->add_option("--conv-filters", o.conv_filters, "Filter counts of conv2..conv6")
      ->delimiter(',')
      ->expected(5);
  app->add_option("--dense", o.dense, "Hidden units of the first dense layer")->check(CLI::PositiveNumber);
  app->add_option("--dropout", o.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.99));
  app->add_option("--lambda-reg", o.lambda_reg, "L2 coefficient on conv2")->check(CLI::NonNegativeNumber);
}

void add_train_options(CLI::App* app, TrainOptions& o) {
  app->add_option("--data", o.data, "Dataset directory")->required();
  app->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber);
  app->add_option("--batch-size", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  app->add_option("--lr", o.lr, "SGD learning rate")->check(CLI::NonNegativeNumber);
  app->add_option("--momentum", o.momentum, "SGD momentum")->check(CLI::Range(0.0, 0.999));
  app->add_option("--seed", o.seed, "Master seed")->envname(kSeedEnv);
  app->add_option("--eval-every", o.eval_every, "Epochs between train/val evaluations")->check(CLI::PositiveNumber);
  app->add_option("--micro-batch", o.micro_batch, "Samples per forward/backward pass")->check(CLI::PositiveNumber);
  app->add_option("--subsample", o.subsample, "Fraction of every train/val group kept")
      ->check(CLI::Range(0.0, 1.0));
}

model::NetworkConfig network_config(const NetOptions& o, std::size_t input_size) {
  model::NetworkConfig c;
  c.kernel_size = o.kernel;
  c.variant = model::variant_from_string(o.config);
  if (o.kernel_kind.empty()) {
    c.kernel_kind = c.variant == model::Variant::kNckl ? model::FirstKernel::kRandom : model::FirstKernel::kCheckerboard;
  } else {
    c.kernel_kind = model::first_kernel_from_string(o.kernel_kind);
  }
  c.first_layer_filters = o.first_filters;
  c.conv_filters = o.conv_filters;
  c.dense_hidden = o.dense;
  c.dropout_rate = o.dropout;
  c.lambda_reg = o.lambda_reg;
  c.input_size = input_size;
  try {
    c.validate();
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
  return c;
}

train::TrainConfig train_config(const TrainOptions& o, const NetOptions& n) {
  train::TrainConfig t;
  t.epochs = o.epochs;
  t.batch_size = o.batch_size;
  t.lr = o.lr;
  t.momentum = o.momentum;
  t.lambda_reg = n.lambda_reg;
  t.seed = o.seed;
  t.eval_every = o.eval_every;
  t.micro_batch = o.micro_batch;
  t.validate();
  return t;
}

std::string config_name(const model::NetworkConfig& c) {
  const std::string w = std::to_string(c.kernel_size);
  return std::string(model::to_string(c.variant)) + "-" + w + "x" + w;
}

// Applies the subsample fraction and, for kapt, the custom-kernel prefilter.
data::PatchDataset prepare_dataset(data::PatchDataset ds, const TrainOptions& o, const model::NetworkConfig& net) {
  if (o.subsample < 1.0) {
    if (!(o.subsample > 0.0)) throw UsageError("--subsample must lie in (0, 1]");
    ds = data::subsample(ds, o.subsample, o.seed);
  }
  if (net.variant == model::Variant::kKapt) ds = data::prefilter_kapt(ds, model::custom_kernel(net));
  return ds;
}

std::size_t patch_side(const data::PatchDataset& ds) {
  if (ds.samples.empty()) throw DataError("dataset is empty");
  const Image& first = ds.samples.front().image;
  if (first.height() != first.width()) throw DataError("patches must be square");
  return first.height();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void print_metrics(std::ostream& out, const std::string& split, const train::Metrics& m) {
  out << "split " << split << " (" << m.total() << " samples)\n"
      << "              pred gw  pred ngw\n"
      << "  true gw  " << std::setw(10) << m.tp << std::setw(10) << m.fn << '\n'
      << "  true ngw " << std::setw(10) << m.fp << std::setw(10) << m.tn << '\n'
      << "  accuracy  " << fixed(m.accuracy) << '\n'
      << "  precision " << fixed(m.precision) << '\n'
      << "  recall    " << fixed(m.recall) << '\n'
      << "  f1        " << fixed(m.f1) << '\n';
}

// Output files may name directories that do not exist yet.
void ensure_parent(const fs::path& file) {
  const fs::path dir = file.parent_path();
  std::error_code ec;
  if (!dir.empty()) fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create directory " + dir.string() + ": " + ec.message());
}

fs::path sibling(const fs::path& file, const char* name) {
  const fs::path dir = file.parent_path();
  return dir.empty() ? fs::path(name) : dir / name;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenOptions {
  std::string out;
  std::size_t per_class = 500;
  std::uint64_t seed = 0;
  std::string profile;
  std::size_t test_count = 0;  // 0: automatic
  double train_ratio = 0.65;
  bool augment = false;
  unsigned maxval = 255;
};

// 240 test patches, capped at 12% of the dataset (at least 2) so small
// datasets still get every split.
std::size_t default_test_count(std::size_t total) {
  return std::min<std::size_t>(240, std::max<std::size_t>(2, total * 12 / 100));
}

void run_gen_data(const GenOptions& o, std::ostream& out) {
  const data::NoiseProfile profile = o.profile.empty() ? data::NoiseProfile{} : data::load_noise_profile(o.profile);
  const std::size_t total = 2 * o.per_class;
  const std::size_t test = o.test_count == 0 ? default_test_count(total) : o.test_count;
  if (test >= total) throw UsageError("--test-count must be smaller than the dataset (" + std::to_string(total) + ")");
  data::PatchDataset ds = data::split(data::make_dataset(o.seed, o.per_class, profile), {o.train_ratio, test}, o.seed);
  if (o.augment) ds = data::augment_split(ds, data::Split::kTrain);
  data::write_dataset(ds, o.out, data::WriteOptions{o.maxval, true});
  out << "wrote " << ds.size() << " patches to " << o.out << '\n';
  for (data::Split s : {data::Split::kTrain, data::Split::kVal, data::Split::kTest}) {
    out << "  " << std::left << std::setw(6) << data::to_string(s) << std::right << std::setw(6) << ds.count(s)
        << "  (gw " << ds.count(Label::kGw, s) << ", ngw " << ds.count(Label::kNgw, s) << ")\n";
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainCmd {
  NetOptions net;
  TrainOptions train;
  std::string out;
  std::string history;
  std::string metrics;
  bool quiet = false;
};

void run_train(const TrainCmd& o, std::ostream& out) {
  data::PatchDataset raw = data::load_dataset(o.train.data);
  const model::NetworkConfig net_cfg = network_config(o.net, patch_side(raw));
  const train::TrainConfig cfg = train_config(o.train, o.net);
  const data::PatchDataset ds = prepare_dataset(std::move(raw), o.train, net_cfg);

  out << "training " << config_name(net_cfg) << " on " << ds.count(data::Split::kTrain) << " train / "
      << ds.count(data::Split::kVal) << " val patches for " << cfg.epochs << " epochs\n";
  const train::EpochCallback progress = [&](const train::EpochRecord& e) {
    if (o.quiet) return;
    out << "epoch " << e.epoch << '/' << cfg.epochs << "  loss " << fixed(e.train_loss, 6);
    if (e.train_acc) out << "  train_acc " << fixed(*e.train_acc);
    if (e.val_acc) out << "  val_acc " << fixed(*e.val_acc);
    out << '\n';
  };
  const train::TrainResult result = train::train(model::build(net_cfg, cfg.seed), ds, cfg, progress);

  const fs::path ckpt(o.out);
  const fs::path history = o.history.empty() ? sibling(ckpt, "history.csv") : fs::path(o.history);
  const fs::path metrics = o.metrics.empty() ? sibling(ckpt, "metrics.csv") : fs::path(o.metrics);
  ensure_parent(ckpt);
  ensure_parent(history);
  ensure_parent(metrics);
  model::save_checkpoint(result.network, ckpt);
  train::write_history_csv(result.history, history);
  std::vector<train::MetricsRow> rows = {{config_name(net_cfg), "train", result.history.train},
                                         {config_name(net_cfg), "val", result.history.val}};
  if (result.history.test) rows.push_back({config_name(net_cfg), "test", *result.history.test});
  train::write_metrics_csv(rows, metrics);

  for (const auto& r : rows) print_metrics(out, r.split, r.metrics);
  out << "checkpoint " << ckpt.string() << "\nhistory " << history.string() << "\nmetrics " << metrics.string()
      << '\n';
}

// ---------------------------------------------------------------------------
// eval

struct EvalCmd {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::string out = "metrics.csv";
};

void run_eval(const EvalCmd& o, std::ostream& out) {
  const model::Network net = model::load_checkpoint(o.ckpt);
  data::PatchDataset ds = data::load_dataset(o.data);
  if (net.config.variant == model::Variant::kKapt) ds = data::prefilter_kapt(ds, model::custom_kernel(net.config));
  const data::Split split = data::split_from_string(o.split);
  if (ds.count(split) == 0) throw DataError("dataset has no '" + o.split + "' samples");
  const train::Metrics m = train::evaluate(net, ds, split);
  print_metrics(out, o.split, m);
  const std::vector<train::MetricsRow> rows = {{config_name(net.config), o.split, m}};
  ensure_parent(o.out);
  train::write_metrics_csv(rows, o.out);
  out << "metrics " << o.out << '\n';
}

// ---------------------------------------------------------------------------
// filter

struct FilterCmd {
  std::string in;
  std::string kernel;
  std::string out;
  unsigned maxval = 255;
};

std::string filter_usage() {
  return filters::kernel_spec_usage() + ", fft:<keep fraction in (0, 1]>, file:<raw tensor path>";
}

MatrixD kernel_from_tensor(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.n != 1 || s.c != 1) throw FormatError("kernel tensor must be 1x1xHxW, got " + s.str());
  MatrixD k(s.h, s.w);
  for (std::size_t i = 0; i < k.size(); ++i) k.values()[i] = t[i];
  return k;
}

void run_filter(const FilterCmd& o, std::ostream& out) {
  const Image img = read_pgm(o.in);
  Image result;
  if (o.kernel.starts_with("fft:")) {
    double keep = 0.0;
    const std::string v = o.kernel.substr(4);
    std::istringstream is(v);
    if (!(is >> keep) || !is.eof() || !(keep > 0.0 && keep <= 1.0)) {
      throw UsageError("bad fft keep fraction '" + v + "'\n" + filter_usage());
    }
    result = filters::fft_denoise(img, keep);
  } else if (o.kernel.starts_with("file:")) {
    result = filters::apply_filter(img, kernel_from_tensor(load_tensor(o.kernel.substr(5))));
  } else {
    filters::KernelSpec spec;
    try {
      spec = filters::parse_kernel_spec(o.kernel);
    } catch (const ValueError& e) {
      throw UsageError(std::string(e.what()) + "\nalso accepted: fft:<keep fraction in (0, 1]>, file:<raw tensor path>");
    }
    result = filters::apply_filter(img, filters::make_kernel(spec));
  }
  ensure_parent(o.out);
  write_pgm(o.out, result, o.maxval);
  out << "wrote " << o.out << " (" << result.height() << "x" << result.width() << ")\n";
}

// ---------------------------------------------------------------------------
// kernel

struct KernelCmd {
  std::string spec;
  std::string ckpt;
  std::string export_path;
  int precision = 4;
};

void run_kernel(const KernelCmd& o, std::ostream& out) {
  std::vector<MatrixD> kernels;
  if (!o.spec.empty()) {
    filters::KernelSpec spec;
    try {
      spec = filters::parse_kernel_spec(o.spec);
    } catch (const ValueError& e) {
      throw UsageError(e.what());
    }
    kernels.push_back(filters::make_kernel(spec));
  } else {
    kernels = model::extract_first_kernel(model::load_checkpoint(o.ckpt));
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (kernels.size() > 1) out << "filter " << i << '\n';
    out << filters::format_kernel(kernels[i], o.precision);
  }
  if (!o.export_path.empty()) {
    const std::size_t h = kernels.front().rows();
    const std::size_t w = kernels.front().cols();
    Tensor t(Shape{kernels.size(), 1, h, w});
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      for (std::size_t j = 0; j < h * w; ++j) t[i * h * w + j] = static_cast<float>(kernels[i].values()[j]);
    }
    ensure_parent(o.export_path);
    save_tensor(o.export_path, t);
    out << "exported " << o.export_path << '\n';
  }
}

// ---------------------------------------------------------------------------
// repeat

struct RepeatCmd {
  NetOptions net;
  TrainOptions train;
  std::size_t runs = 5;
  bool same_seed = false;
  std::string out = "summary.csv";
};

void run_repeat(const RepeatCmd& o, std::ostream& out) {
  data::PatchDataset raw = data::load_dataset(o.train.data);
  const model::NetworkConfig net_cfg = network_config(o.net, patch_side(raw));
  const train::TrainConfig cfg = train_config(o.train, o.net);
  const data::PatchDataset ds = prepare_dataset(std::move(raw), o.train, net_cfg);
  const train::NetworkBuilder builder = [&](std::uint64_t seed) { return model::build(net_cfg, seed); };
  const auto rows = train::repeat_runs(builder, ds, cfg, o.runs, !o.same_seed);
  ensure_parent(o.out);
  train::write_summary_csv(config_name(net_cfg), rows, o.out);
  out << config_name(net_cfg) << ", " << o.runs << " runs\n";
  for (const auto& r : rows) {
    out << "  " << std::left << std::setw(16) << r.metric << std::right << fixed(r.stat.mean) << " +- "
        << fixed(r.stat.std) << '\n';
  }
  out << "summary " << o.out << '\n';
}

// Reads key=value config files; keys outside a [section] belong to the
// subcommand being run.
class SubcommandConfig : public CLI::ConfigINI {
 public:
  explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigINI::from_config(input);
    const auto subs = app_->get_subcommands();
    if (subs.size() != 1) return items;
    for (CLI::ConfigItem& item : items) {
      if (item.parents.empty()) item.parents.push_back(subs.front()->get_name());
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Checkerboard-kernel CNN for gravity-wave patch classification", "gwavenet");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.get_formatter()->column_width(34);
  app.fallthrough();
  app.set_config("--config-file", "", "key=value file of option defaults for the subcommand; flags given on the command line win");
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic gw/ngw patch dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--per-class", gen.per_class, "Patches per class")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->envname(kSeedEnv);
  gen_cmd->add_option("--profile", gen.profile, "Noise profile file (key=value)")->check(CLI::ExistingFile);
  gen_cmd->add_option("--test-count", gen.test_count, "Test patches (0: 240 capped at 12% of the dataset)");
  gen_cmd->add_option("--train-ratio", gen.train_ratio, "Train share of the non-test patches")
      ->check(CLI::Range(0.01, 0.99));
  gen_cmd->add_flag("--augment", gen.augment, "Add rotated and flipped views of the train patches");
  gen_cmd->add_option("--maxval", gen.maxval, "PGM maxval")->check(CLI::IsMember({255u, 65535u}));

  TrainCmd tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one configuration and write a checkpoint");
  add_train_options(train_cmd, tr.train);
  add_net_options(train_cmd, tr.net);
  train_cmd->add_option("--out", tr.out, "Checkpoint path (.gwck)")->required();
  train_cmd->add_option("--history", tr.history, "History CSV (default: history.csv beside the checkpoint)");
  train_cmd->add_option("--metrics", tr.metrics, "Metrics CSV (default: metrics.csv beside the checkpoint)");
  train_cmd->add_flag("--quiet", tr.quiet, "Suppress per-epoch lines");

  EvalCmd ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--split", ev.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", ev.out, "Metrics CSV");

  FilterCmd fi;
  CLI::App* filter_cmd = app.add_subcommand("filter", "Filter a PGM image and rescale to [0, 1]");
  filter_cmd->add_option("--in", fi.in, "Input PGM")->required();
  filter_cmd->add_option("--kernel", fi.kernel, filter_usage())->required();
  filter_cmd->add_option("--out", fi.out, "Output PGM")->required();
  filter_cmd->add_option("--maxval", fi.maxval, "PGM maxval")->check(CLI::IsMember({255u, 65535u}));

  KernelCmd ke;
  CLI::App* kernel_cmd = app.add_subcommand("kernel", "Print a generated or learned first-layer kernel");
  CLI::Option* spec_opt = kernel_cmd->add_option("--spec", ke.spec, filters::kernel_spec_usage());
  CLI::Option* ckpt_opt = kernel_cmd->add_option("--ckpt", ke.ckpt, "Checkpoint whose conv1 weights to print");
  spec_opt->excludes(ckpt_opt);
  kernel_cmd->add_option("--export", ke.export_path, "Also write the kernels as a raw tensor");
  kernel_cmd->add_option("--precision", ke.precision, "Decimals for non-integer kernels")->check(CLI::Range(0, 12));

  RepeatCmd re;
  CLI::App* repeat_cmd = app.add_subcommand("repeat", "Train several seeds and summarize mean and std");
  add_train_options(repeat_cmd, re.train);
  add_net_options(repeat_cmd, re.net);
  repeat_cmd->add_option("--runs", re.runs, "Number of runs (>= 2)")->check(CLI::Range(2, 1000));
  repeat_cmd->add_flag("--same-seed", re.same_seed, "Use the same seed for every run");
  repeat_cmd->add_option("--out", re.out, "Summary CSV");

  try {
    app.parse(argc, argv);
    if (kernel_cmd->parsed() && ke.spec.empty() && ke.ckpt.empty()) {
      throw CLI::ValidationError("--spec/--ckpt", "kernel needs one of them");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) run_gen_data(gen, out);
    if (train_cmd->parsed()) run_train(tr, out);
    if (eval_cmd->parsed()) run_eval(ev, out);
    if (filter_cmd->parsed()) run_filter(fi, out);
    if (kernel_cmd->parsed()) run_kernel(ke, out);
    if (repeat_cmd->parsed()) run_repeat(re, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValueError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace gwavenet::cli
