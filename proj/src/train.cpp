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

#include "gwavenet/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

namespace gwavenet::train {

namespace {

constexpr std::size_t kEvalChunk = 32;

float target_of(const data::Sample& s) { return static_cast<float>(label_target(s.label)); }

bool correct(float p, const data::Sample& s) { return model::classify(p) == s.label; }

double accuracy_of(std::span<const float> probs, const data::PatchDataset& data,
                   std::span<const std::size_t> indices) {
  std::size_t hits = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) hits += correct(probs[k], data.samples[indices[k]]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

Metrics metrics_of(std::span<const float> probs, const data::PatchDataset& data,
                   std::span<const std::size_t> indices) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const bool predicted_gw = model::classify(probs[k]) == Label::kGw;
    const bool actual_gw = data.samples[indices[k]].label == Label::kGw;
    if (predicted_gw && actual_gw) {
      ++tp;
    } else if (predicted_gw) {
      ++fp;
    } else if (actual_gw) {
      ++fn;
    } else {
      ++tn;
    }
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

void accumulate(nn::GradientList<float>& total, std::size_t i, const nn::ParamGrads<float>& g) {
  if (!total[i]) {
    total[i] = g;
    return;
  }
  auto add = [](Tensor& dst, const Tensor& src) {
    for (std::size_t q = 0; q < dst.size(); ++q) {
      dst[q] = static_cast<float>(static_cast<double>(dst[q]) + static_cast<double>(src[q]));
    }
  };
  add(total[i]->weight, g.weight);
  add(total[i]->bias, g.bias);
}

struct FrozenSnapshot {
  std::size_t index;
  Tensor weight;
  Tensor bias;
};

std::size_t second_conv_index(const model::Network& net) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].kind == nn::LayerKind::kConv && ++seen == 2) return i;
  }
  throw ValueError("network has fewer than two convolution layers");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw ValueError("epochs must be >= 1");
  if (batch_size == 0) throw ValueError("batch_size must be >= 1");
  if (micro_batch == 0) throw ValueError("micro_batch must be >= 1");
  if (eval_every == 0) throw ValueError("eval_every must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValueError("learning rate must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValueError("momentum must lie in [0, 1)");
  if (lambda_reg && !(*lambda_reg >= 0.0)) throw ValueError("lambda_reg must be >= 0");
}

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(tp + tn, tp + fp + fn + tn);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

std::vector<float> predict_samples(const model::Network& net, const data::PatchDataset& data,
                                   std::span<const std::size_t> indices) {
  std::vector<float> probs;
  probs.reserve(indices.size());
  for (std::size_t first = 0; first < indices.size(); first += kEvalChunk) {
    const auto chunk = indices.subspan(first, std::min(kEvalChunk, indices.size() - first));
    const std::vector<float> p = model::predict(net, data::to_batch(data, chunk));
    probs.insert(probs.end(), p.begin(), p.end());
  }
  return probs;
}

Metrics evaluate(const model::Network& net, const data::PatchDataset& data, data::Split split) {
  const std::vector<std::size_t> idx = data.indices(split);
  if (idx.empty()) throw DataError("split '" + std::string(data::to_string(split)) + "' is empty");
  const std::vector<float> probs = predict_samples(net, data, idx);
  return metrics_of(probs, data, idx);
}

TrainResult train(model::Network net, const data::PatchDataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::vector<std::size_t> train_idx = data.indices(data::Split::kTrain);
  const std::vector<std::size_t> val_idx = data.indices(data::Split::kVal);
  if (train_idx.empty()) throw DataError("training needs a non-empty train split");
  if (val_idx.empty()) throw DataError("training needs a non-empty val split");
  for (std::size_t i : train_idx) {
    const Image& img = data.samples[i].image;
    if (img.height() != net.config.input_size || img.width() != net.config.input_size) {
      throw ShapeError("patch " + data.samples[i].id + " is " + std::to_string(img.height()) + "x" +
                       std::to_string(img.width()) + " but the network expects " +
                       std::to_string(net.config.input_size));
    }
  }

  auto& layers = net.layers;
  const std::size_t l2_layer = second_conv_index(net);
  if (cfg.lambda_reg) layers[l2_layer].l2 = *cfg.lambda_reg;
  if (layers.back().kind != nn::LayerKind::kSigmoid) throw ValueError("network must end in a sigmoid");
  const std::size_t logit_layers = layers.size() - 1;

  std::vector<FrozenSnapshot> frozen;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].has_params() && !layers[i].trainable) frozen.push_back({i, layers[i].weight, layers[i].bias});
  }
  // Backward stops at the first layer that still needs a parameter gradient.
  std::size_t first_trainable = layers.size();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].has_params() && layers[i].trainable) {
      first_trainable = i;
      break;
    }
  }

  nn::Sgd optimizer(cfg.lr, cfg.momentum);
  RunHistory history;
  std::vector<std::size_t> order = train_idx;
  std::vector<double> sample_loss(data.size(), 0.0);
  std::vector<nn::ForwardCache<float>> caches(layers.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, epoch));
    Rng dropout_rng(derive_seed(derive_seed(cfg.seed, epoch), 1));
    std::sort(order.begin(), order.end());
    shuffle_rng.shuffle(order.begin(), order.end());

    double penalty_sum = 0.0;
    std::size_t dropout_hits = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t bsize = std::min(cfg.batch_size, order.size() - b0);
      nn::GradientList<float> grads(layers.size());
      for (std::size_t m0 = 0; m0 < bsize; m0 += cfg.micro_batch) {
        const std::span<const std::size_t> micro(order.data() + b0 + m0, std::min(cfg.micro_batch, bsize - m0));
        Tensor x = data::to_batch(data, micro);
        for (std::size_t i = 0; i < logit_layers; ++i) {
          auto fr = nn::forward(layers[i], std::move(x), nn::Mode::kTrain, dropout_rng);
          x = std::move(fr.y);
          caches[i] = std::move(fr.cache);
        }
        // Fused sigmoid + BCE: dL/dz = (p - y) / B for the batch mean.
        const Tensor probs = nn::infer(layers.back(), x);
        Tensor dz(x.shape());
        for (std::size_t k = 0; k < micro.size(); ++k) {
          const data::Sample& s = data.samples[micro[k]];
          const double p = static_cast<double>(probs[k]);
          const double y = target_of(s);
          const double q = std::clamp(p, nn::kBceEpsilon, 1.0 - nn::kBceEpsilon);
          sample_loss[micro[k]] = -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
          dz[k] = static_cast<float>((p - y) / static_cast<double>(bsize));
          dropout_hits += correct(probs[k], s) ? 1 : 0;
        }
        Tensor dy = std::move(dz);
        for (std::size_t i = logit_layers; i-- > first_trainable;) {
          const nn::Layer& layer = layers[i];
          const bool need_params = layer.has_params() && layer.trainable;
          const bool need_dx = i > first_trainable;
          if (!need_params && !need_dx) continue;
          auto br = nn::backward(layer, caches[i], dy, need_dx);
          if (need_params && br.grads) accumulate(grads, i, *br.grads);
          if (need_dx) dy = std::move(*br.dx);
        }
      }
      for (std::size_t i = 0; i < layers.size(); ++i) {
        const nn::Layer& layer = layers[i];
        if (!layer.has_params() || !layer.trainable || layer.l2 == 0.0) continue;
        auto pen = nn::l2_penalty(layer.weight, layer.l2);
        penalty_sum += pen.loss * static_cast<double>(bsize);
        accumulate(grads, i, nn::ParamGrads<float>{std::move(pen.grad), Tensor(layer.bias.shape())});
      }
      optimizer.step(layers, grads);
      ++net.steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double bce = 0.0;
    for (std::size_t i : train_idx) bce += sample_loss[i];
    const double n_train = static_cast<double>(train_idx.size());
    rec.train_loss = bce / n_train + penalty_sum / n_train;
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (loss is not finite)");
    }
    rec.train_acc_dropout = static_cast<double>(dropout_hits) / n_train;
    const bool last = epoch == cfg.epochs;
    if (epoch % cfg.eval_every == 0 || last) {
      const auto tp = predict_samples(net, data, train_idx);
      const auto vp = predict_samples(net, data, val_idx);
      rec.train_acc = accuracy_of(tp, data, train_idx);
      rec.val_acc = accuracy_of(vp, data, val_idx);
      if (last) {
        history.train = metrics_of(tp, data, train_idx);
        history.val = metrics_of(vp, data, val_idx);
      }
    }

    for (const FrozenSnapshot& f : frozen) {
      if (!bit_equal(layers[f.index].weight, f.weight) || !bit_equal(layers[f.index].bias, f.bias)) {
        throw Error("frozen layer " + std::to_string(f.index) + " changed during epoch " + std::to_string(epoch));
      }
    }
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  if (!data.indices(data::Split::kTest).empty()) history.test = evaluate(net, data, data::Split::kTest);
  history.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(net), std::move(history)};
}

Stat summarize(std::span<const double> values) {
  if (values.empty()) throw ValueError("cannot summarize an empty list");
  // Deviations are taken from the first value so identical inputs give a
  // spread of exactly zero.
  const double pivot = values.front();
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  double sq = 0.0;
  for (double v : values) {
    sum += v - pivot;
    sq += (v - pivot) * (v - pivot);
  }
  Stat s;
  s.mean = pivot + sum / n;
  if (values.size() > 1) s.std = std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1.0)));
  return s;
}

std::vector<SummaryRow> repeat_runs(const NetworkBuilder& builder, const data::PatchDataset& data,
                                    const TrainConfig& cfg, std::size_t n, bool vary_seed) {
  if (n < 2) throw ValueError("repeat_runs needs n >= 2");
  std::vector<SummaryRow> rows = {{"train_accuracy", {}, {}}, {"train_f1", {}, {}}, {"val_accuracy", {}, {}},
                                  {"val_f1", {}, {}},         {"test_accuracy", {}, {}}, {"test_f1", {}, {}}};
  const bool has_test = !data.indices(data::Split::kTest).empty();
  for (std::size_t r = 0; r < n; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = vary_seed ? cfg.seed + r : cfg.seed;
    const TrainResult result = train(builder(run_cfg.seed), data, run_cfg);
    const RunHistory& h = result.history;
    rows[0].values.push_back(h.train.accuracy);
    rows[1].values.push_back(h.train.f1);
    rows[2].values.push_back(h.val.accuracy);
    rows[3].values.push_back(h.val.f1);
    if (h.test) {
      rows[4].values.push_back(h.test->accuracy);
      rows[5].values.push_back(h.test->f1);
    }
  }
  if (!has_test) rows.resize(4);
  for (auto& row : rows) row.stat = summarize(row.values);
  return rows;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  return os;
}

void finish_csv(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw FormatError("failed writing " + path.string());
}

}  // namespace

void write_history_csv(const RunHistory& history, const std::filesystem::path& path) {
  std::ofstream os = open_csv(path);
  os << "epoch,train_loss,train_acc,val_acc,train_acc_dropout\n";
  for (const EpochRecord& r : history.epochs) {
    os << r.epoch << ',' << format_number(r.train_loss) << ',' << (r.train_acc ? format_number(*r.train_acc) : "")
       << ',' << (r.val_acc ? format_number(*r.val_acc) : "") << ',' << format_number(r.train_acc_dropout) << '\n';
  }
  finish_csv(os, path);
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ofstream os = open_csv(path);
  os << "config,split,tp,fp,fn,tn,accuracy,precision,recall,f1\n";
  for (const MetricsRow& r : rows) {
    const Metrics& m = r.metrics;
    os << r.config << ',' << r.split << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << m.tn << ','
       << format_number(m.accuracy) << ',' << format_number(m.precision) << ',' << format_number(m.recall) << ','
       << format_number(m.f1) << '\n';
  }
  finish_csv(os, path);
}

void write_summary_csv(const std::string& config, std::span<const SummaryRow> rows,
                       const std::filesystem::path& path) {
  std::ofstream os = open_csv(path);
  os << "config,metric,mean,std\n";
  for (const SummaryRow& r : rows) {
    os << config << ',' << r.metric << ',' << format_number(r.stat.mean) << ',' << format_number(r.stat.std) << '\n';
  }
  finish_csv(os, path);
}

}  // namespace gwavenet::train
