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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gwavenet/error.hpp"
#include "gwavenet/filters.hpp"
#include "gwavenet/train.hpp"

using namespace gwavenet;
using namespace gwavenet::train;
using data::Split;

namespace {

namespace fs = std::filesystem;

data::NoiseProfile small_profile() {
  data::NoiseProfile p;
  p.patch_size = 64;
  p.wavelength_max = 16.0;
  p.envelope_sigma_min = 12.0;
  p.envelope_sigma_max = 24.0;
  p.cloud_radius_min = 8.0;
  p.cloud_radius_max = 16.0;
  return p;
}

data::PatchDataset small_dataset(std::uint64_t seed, std::size_t per_class, std::size_t test = 4) {
  return data::split(data::make_dataset(seed, per_class, small_profile()), {0.65, test}, seed);
}

model::NetworkConfig small_net(model::Variant v) {
  model::NetworkConfig c;
  c.variant = v;
  if (v == model::Variant::kNckl) c.kernel_kind = model::FirstKernel::kRandom;
  c.conv_filters = {4, 4, 4, 4, 4};
  c.dense_hidden = 8;
  c.input_size = 64;
  return c;
}

TrainConfig quick_config(std::size_t epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 8;
  t.seed = 3;
  return t;
}

// Independent restatement of the metric definitions.
struct Expected {
  double acc, prec, rec, f1;
};

Expected expected_metrics(double tp, double fp, double fn, double tn) {
  Expected e{};
  const double n = tp + fp + fn + tn;
  e.acc = n > 0 ? (tp + tn) / n : 0.0;
  e.prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  e.rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  // Harmonic mean written through counts: 2 tp / (2 tp + fp + fn).
  e.f1 = tp > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  return e;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool same_params(const model::Network& a, const model::Network& b) {
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (!a.layers[i].has_params()) continue;
    if (!bit_equal(a.layers[i].weight, b.layers[i].weight) || !bit_equal(a.layers[i].bias, b.layers[i].bias))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("metrics examples") {
  const Metrics a = Metrics::from_counts(9, 1, 1, 9);
  CHECK(a.accuracy == doctest::Approx(0.9));
  CHECK(a.precision == doctest::Approx(0.9));
  CHECK(a.recall == doctest::Approx(0.9));
  CHECK(a.f1 == doctest::Approx(0.9));

  const Metrics wrong = Metrics::from_counts(0, 6, 4, 0);
  CHECK(wrong.accuracy == 0.0);
  CHECK(wrong.f1 == 0.0);

  const Metrics none = Metrics::from_counts(0, 0, 5, 0);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  const Metrics empty = Metrics::from_counts(0, 0, 0, 0);
  CHECK(empty.accuracy == 0.0);
  CHECK(empty.total() == 0);
}

TEST_CASE("metrics identities over 1000 random confusion matrices") {
  Rng rng(2718);
  for (int i = 0; i < 1000; ++i) {
    // Small counts so zero denominators come up often.
    const std::size_t bound = i % 4 == 0 ? 3 : 200;
    const std::size_t tp = rng.below(bound), fp = rng.below(bound), fn = rng.below(bound), tn = rng.below(bound);
    const Metrics m = Metrics::from_counts(tp, fp, fn, tn);
    const Expected e = expected_metrics(double(tp), double(fp), double(fn), double(tn));
    CAPTURE(tp);
    CAPTURE(fp);
    CAPTURE(fn);
    CAPTURE(tn);
    CHECK(m.total() == tp + fp + fn + tn);
    CHECK(m.accuracy == doctest::Approx(e.acc).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(e.prec).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(e.rec).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(e.f1).epsilon(1e-12));
    for (double r : {m.accuracy, m.precision, m.recall, m.f1}) CHECK((r >= 0.0 && r <= 1.0));
  }
}

TEST_CASE("summarize uses the sample standard deviation") {
  const std::vector<double> two = {0.9, 0.8};
  const Stat s = summarize(two);
  CHECK(s.mean == doctest::Approx(0.85));
  CHECK(s.std == doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));
  const std::vector<double> one = {0.4};
  CHECK(summarize(one).std == 0.0);
  const std::vector<double> same = {0.7, 0.7, 0.7};
  CHECK(summarize(same).std == 0.0);
}

TEST_CASE("train config validation") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.lr = 0.0;
  CHECK_NOTHROW(t.validate());
  auto invalid = [](auto&& mutate) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ValueError);
  };
  invalid([](TrainConfig& c) { c.epochs = 0; });
  invalid([](TrainConfig& c) { c.batch_size = 0; });
  invalid([](TrainConfig& c) { c.lr = -0.1; });
  invalid([](TrainConfig& c) { c.momentum = 1.0; });
  invalid([](TrainConfig& c) { c.eval_every = 0; });
  invalid([](TrainConfig& c) { c.micro_batch = 0; });
  invalid([](TrainConfig& c) { c.lambda_reg = -1.0; });
}

TEST_CASE("lr = 0 leaves parameters untouched and, without dropout, the loss constant") {
  const data::PatchDataset ds = small_dataset(1, 10);
  model::NetworkConfig c = small_net(model::Variant::kTrainable);
  c.dropout_rate = 0.0;
  const model::Network start = model::build(c, 4);
  TrainConfig t = quick_config(4);
  t.lr = 0.0;
  const TrainResult r = train::train(start, ds, t);
  CHECK(same_params(r.network, start));
  REQUIRE(r.history.epochs.size() == 4);
  for (const EpochRecord& e : r.history.epochs) CHECK(e.train_loss == r.history.epochs[0].train_loss);
}

TEST_CASE("history records one row per epoch and honours eval_every") {
  const data::PatchDataset ds = small_dataset(2, 10);
  TrainConfig t = quick_config(5);
  t.eval_every = 2;
  const TrainResult r = train::train(model::build(small_net(model::Variant::kTrainable), 1), ds, t);
  REQUIRE(r.history.epochs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const EpochRecord& e = r.history.epochs[i];
    CHECK(e.epoch == i + 1);
    const bool evaluated = e.epoch % 2 == 0 || e.epoch == 5;
    CHECK(e.train_acc.has_value() == evaluated);
    CHECK(e.val_acc.has_value() == evaluated);
    CHECK(std::isfinite(e.train_loss));
  }
  CHECK(r.history.train.total() == ds.count(Split::kTrain));
  CHECK(r.history.val.total() == ds.count(Split::kVal));
  REQUIRE(r.history.test.has_value());
  CHECK(r.history.test->total() == ds.count(Split::kTest));
  CHECK(r.network.steps == 5 * ((ds.count(Split::kTrain) + 7) / 8));
}

TEST_CASE("full-batch loss trends down over the first 10 epochs") {
  // Dropout is off so the epoch loss is not dominated by mask noise. Single
  // epochs may tick up in at most 20% of cases.
  std::size_t passing = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CAPTURE(seed);
    const data::PatchDataset ds = data::split(data::make_dataset(seed, 40, data::NoiseProfile{}), {0.65, 4}, seed);
    model::NetworkConfig c;
    c.conv_filters = {4, 4, 4, 4, 4};
    c.dense_hidden = 16;
    c.dropout_rate = 0.0;
    TrainConfig t;
    t.epochs = 10;
    t.batch_size = ds.size();
    t.seed = seed;
    t.eval_every = 10;
    const TrainResult r = train::train(model::build(c, seed), ds, t);
    const auto& e = r.history.epochs;
    std::size_t upticks = 0;
    for (std::size_t i = 1; i < e.size(); ++i) upticks += e[i].train_loss > e[i - 1].train_loss ? 1 : 0;
    if (upticks <= 2 && e.back().train_loss < e.front().train_loss) ++passing;
  }
  CHECK(passing >= 5);
}

TEST_CASE("training is bit-deterministic") {
  const data::PatchDataset ds = small_dataset(3, 10);
  const model::Network start = model::build(small_net(model::Variant::kNckl), 8);
  const TrainConfig t = quick_config(3);
  const TrainResult a = train::train(start, ds, t);
  const TrainResult b = train::train(start, ds, t);
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
    CHECK(a.history.epochs[i].train_loss == b.history.epochs[i].train_loss);
    CHECK(a.history.epochs[i].train_acc_dropout == b.history.epochs[i].train_acc_dropout);
  }
  CHECK(same_params(a.network, b.network));

  TrainConfig other = t;
  other.seed = t.seed + 1;
  const TrainResult c = train::train(start, ds, other);
  CHECK_FALSE(same_params(a.network, c.network));
}

TEST_CASE("micro-batch size only affects rounding") {
  const data::PatchDataset ds = small_dataset(4, 10);
  model::NetworkConfig nc = small_net(model::Variant::kTrainable);
  nc.dropout_rate = 0.0;
  const model::Network start = model::build(nc, 2);
  TrainConfig a = quick_config(2);
  a.micro_batch = 8;
  TrainConfig b = a;
  b.micro_batch = 3;
  const TrainResult ra = train::train(start, ds, a);
  const TrainResult rb = train::train(start, ds, b);
  for (std::size_t i = 0; i < ra.history.epochs.size(); ++i)
    CHECK(ra.history.epochs[i].train_loss == doctest::Approx(rb.history.epochs[i].train_loss).epsilon(1e-4));
}

TEST_CASE("frozen first layer stays bit-identical through training") {
  const data::PatchDataset ds = small_dataset(5, 10);
  const model::Network start = model::build(small_net(model::Variant::kNonTrainable), 9);
  const TrainResult r = train::train(start, ds, quick_config(3));
  CHECK(bit_equal(r.network.layers[0].weight, start.layers[0].weight));
  CHECK(bit_equal(r.network.layers[0].bias, start.layers[0].bias));
  CHECK(model::extract_first_kernel(r.network)[0] == filters::checkerboard(7));
  CHECK_FALSE(bit_equal(r.network.layers[3].weight, start.layers[3].weight));
}

TEST_CASE("trainable first layer moves") {
  const data::PatchDataset ds = small_dataset(5, 10);
  const model::Network start = model::build(small_net(model::Variant::kTrainable), 9);
  const TrainResult r = train::train(start, ds, quick_config(2));
  CHECK_FALSE(bit_equal(r.network.layers[0].weight, start.layers[0].weight));
}

TEST_CASE("train rejects empty splits and mismatched patch sizes") {
  data::PatchDataset ds = small_dataset(6, 6);
  data::PatchDataset no_val = ds;
  for (auto& s : no_val.samples)
    if (s.split == Split::kVal) s.split = Split::kTrain;
  CHECK_THROWS_AS(train::train(model::build(small_net(model::Variant::kTrainable), 1), no_val, quick_config(1)),
                  DataError);
  data::PatchDataset no_train = ds;
  for (auto& s : no_train.samples)
    if (s.split == Split::kTrain) s.split = Split::kVal;
  CHECK_THROWS_AS(train::train(model::build(small_net(model::Variant::kTrainable), 1), no_train, quick_config(1)),
                  DataError);
  model::NetworkConfig big = small_net(model::Variant::kTrainable);
  big.input_size = 128;
  CHECK_THROWS_AS(train::train(model::build(big, 1), ds, quick_config(1)), ShapeError);
}

TEST_CASE("evaluate agrees with thresholded predictions") {
  const data::PatchDataset ds = small_dataset(7, 10);
  const model::Network net = model::build(small_net(model::Variant::kNckl), 12);
  for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto idx = ds.indices(split);
    const auto probs = predict_samples(net, ds, idx);
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const bool predicted_gw = probs[k] >= 0.5f;
      const bool gw = ds.samples[idx[k]].label == Label::kGw;
      tp += predicted_gw && gw;
      fp += predicted_gw && !gw;
      fn += !predicted_gw && gw;
      tn += !predicted_gw && !gw;
    }
    const Metrics m = evaluate(net, ds, split);
    CHECK(m.tp == tp);
    CHECK(m.fp == fp);
    CHECK(m.fn == fn);
    CHECK(m.tn == tn);
  }
  data::PatchDataset unsplit = data::make_dataset(1, 2, small_profile());
  CHECK_THROWS_AS(evaluate(net, unsplit, Split::kTest), DataError);
}

TEST_CASE("repeat_runs: identical seeds give zero spread") {
  const data::PatchDataset ds = small_dataset(8, 6);
  const NetworkBuilder builder = [](std::uint64_t seed) {
    return model::build(small_net(model::Variant::kTrainable), seed);
  };
  const auto rows = repeat_runs(builder, ds, quick_config(1), 2, false);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].metric == "train_accuracy");
  CHECK(rows[5].metric == "test_f1");
  for (const SummaryRow& r : rows) {
    CHECK(r.values.size() == 2);
    CHECK(r.stat.std == 0.0);
  }
  CHECK_THROWS_AS(repeat_runs(builder, ds, quick_config(1), 1), ValueError);
}

TEST_CASE("csv exports") {
  const fs::path dir = fs::temp_directory_path() / "gwavenet_test_train_csv";
  fs::create_directories(dir);

  RunHistory h;
  EpochRecord e1;
  e1.epoch = 1;
  e1.train_loss = 0.5;
  e1.train_acc_dropout = 0.25;
  EpochRecord e2 = e1;
  e2.epoch = 2;
  e2.train_acc = 0.75;
  e2.val_acc = 0.1;
  h.epochs = {e1, e2};
  write_history_csv(h, dir / "history.csv");
  CHECK(slurp(dir / "history.csv") ==
        "epoch,train_loss,train_acc,val_acc,train_acc_dropout\n1,0.5,,,0.25\n2,0.5,0.75,0.1,0.25\n");

  const std::vector<MetricsRow> rows = {{"trainable", "test", Metrics::from_counts(9, 1, 1, 9)}};
  write_metrics_csv(rows, dir / "metrics.csv");
  CHECK(slurp(dir / "metrics.csv") ==
        "config,split,tp,fp,fn,tn,accuracy,precision,recall,f1\ntrainable,test,9,1,1,9,0.9,0.9,0.9,0.9\n");

  const std::vector<SummaryRow> summary = {{"test_f1", {0.85, 0.0}, {0.85, 0.85}}};
  write_summary_csv("nckl", summary, dir / "summary.csv");
  CHECK(slurp(dir / "summary.csv") == "config,metric,mean,std\nnckl,test_f1,0.85,0\n");

  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK_THROWS_AS(write_history_csv(h, dir / "missing" / "sub" / "history.csv"), FormatError);
  fs::remove_all(dir);
}
