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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gwavenet/data.hpp"
#include "gwavenet/model.hpp"

namespace gwavenet::train {

struct TrainConfig {
  std::size_t epochs = 2000;
  std::size_t batch_size = 128;
  /// 0 is accepted and leaves every parameter untouched.
  double lr = 0.01;
  double momentum = 0.0;
  /// Overrides the L2 coefficient carried by conv2 when set.
  std::optional<double> lambda_reg;
  std::uint64_t seed = 0;
  /// Eval-mode train/val accuracy is recorded every eval_every epochs and on
  /// the last epoch.
  std::size_t eval_every = 1;
  /// Samples per forward/backward pass. Gradients of the micro-batches of one
  /// batch are summed in order, so results do not depend on this value beyond
  /// floating-point rounding.
  std::size_t micro_batch = 16;

  void validate() const;
};

struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// Ratios with a zero denominator are 0.
  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
  std::size_t total() const { return tp + fp + fn + tn; }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  /// Mean per-sample BCE over the training set plus the L2 penalty.
  double train_loss = 0.0;
  /// Eval-mode (dropout off) accuracies; empty on epochs without evaluation.
  std::optional<double> train_acc;
  std::optional<double> val_acc;
  /// Accuracy of the train-mode (dropout on) predictions seen during the epoch.
  double train_acc_dropout = 0.0;
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  Metrics train;
  Metrics val;
  std::optional<Metrics> test;
  double wall_seconds = 0.0;
};

struct TrainResult {
  model::Network network;
  RunHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch SGD on the train split with BCE loss and the configured L2
/// penalty. Epoch e shuffles with derive_seed(cfg.seed, e); the last partial
/// batch is kept. Frozen layers are audited after every epoch. Throws
/// DataError on an empty train or val split and NumericError on divergence.
TrainResult train(model::Network net, const data::PatchDataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Eval-mode predictions for the given samples, in order.
std::vector<float> predict_samples(const model::Network& net, const data::PatchDataset& data,
                                   std::span<const std::size_t> indices);

/// Confusion counts at threshold 0.5, gw positive. Throws DataError on an
/// empty split.
Metrics evaluate(const model::Network& net, const data::PatchDataset& data, data::Split split);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

Stat summarize(std::span<const double> values);

struct SummaryRow {
  std::string metric;
  Stat stat;
  std::vector<double> values;
};

using NetworkBuilder = std::function<model::Network(std::uint64_t seed)>;

/// n >= 2 runs with seeds cfg.seed + r (or cfg.seed for every run when
/// vary_seed is false). Summarizes train/val/test accuracy and F1.
std::vector<SummaryRow> repeat_runs(const NetworkBuilder& builder, const data::PatchDataset& data,
                                    const TrainConfig& cfg, std::size_t n, bool vary_seed = true);

// ---------------------------------------------------------------------------
// CSV exports

/// epoch,train_loss,train_acc,val_acc,train_acc_dropout
void write_history_csv(const RunHistory& history, const std::filesystem::path& path);

struct MetricsRow {
  std::string config;
  std::string split;
  Metrics metrics;
};

/// config,split,tp,fp,fn,tn,accuracy,precision,recall,f1
void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);

/// config,metric,mean,std
void write_summary_csv(const std::string& config, std::span<const SummaryRow> rows,
                       const std::filesystem::path& path);

/// Shortest decimal representation that reads back to the same double.
std::string format_number(double v);

}  // namespace gwavenet::train
