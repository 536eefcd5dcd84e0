// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gruc/checkpoint.hpp"
#include "gruc/embeddings.hpp"
#include "gruc/model.hpp"
#include "gruc/optim.hpp"

namespace gruc {

struct TrainConfig {
  ModelConfig model;
  AblationConfig ablation;
  std::size_t epochs = 10;
  std::size_t batch = 16;
  LrSchedule schedule;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  /// DomainError naming the offending field.
  void validate() const;
};

/// Flat JSON with the field names above; model fields sit at the top level
/// next to epochs/batch/seed, plus "ablation" and "schedule" objects.
/// Unknown keys are a SchemaError.
nlohmann::json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Exceptions are
/// rethrown on the caller's thread (lowest index first).
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t steps = 0;
  std::size_t skipped = 0;
  double last_lr = 0.0;
};

struct TrainState {
  TrainConfig config;
  RelationVocab relations;
  ParameterSet params;
  AdamState adam;
  std::int64_t global_step = 0;
  std::vector<double> step_losses;
  std::vector<EpochStats> epochs;
  std::size_t skipped = 0;
  std::mt19937_64 shuffle_rng;  // epoch orders; seeded from config.seed
};

struct TrainHooks {
  /// Called after every epoch with the state so far.
  std::function<void(const TrainState&)> on_epoch;
};

/// Seeded mini-batch Adam on the mean per-instance loss. Instances whose
/// candidates do not contain the answer are excluded from the loss and
/// counted in `skipped`. Gradients are reduced in batch order, so results do
/// not depend on `jobs`.
TrainState train(const std::vector<InstanceBundle>& data, const EmbeddingTable& table,
                 const TrainConfig& config, const TrainHooks& hooks = {});

Checkpoint make_checkpoint(const TrainState& state);
/// Restores config, vocabulary, parameters and optimizer state.
TrainState state_from_checkpoint(const Checkpoint& ckpt);

struct InstancePrediction {
  std::string id;
  bool skipped = false;  // no candidates survived retrieval
  std::vector<std::string> ranked;  // entities, best first
  std::vector<double> ranked_probs;
  bool top1 = false;
  bool top3 = false;
  std::vector<std::string> relations_used;
};

InstancePrediction predict(const GrucModel& model, const ParameterSet& params,
                           const EmbeddingTable& table, const InstanceBundle& bundle);

struct SplitScore {
  std::size_t n = 0;
  std::size_t correct1 = 0;
  std::size_t correct3 = 0;
  std::size_t skipped = 0;
  double top1 = 0.0;
  double top3 = 0.0;
};

/// Top-1/top-3 counts; skipped predictions count as wrong.
SplitScore score_split(const std::vector<InstancePrediction>& predictions);

struct EvalReport {
  double top1 = 0.0;
  double top3 = 0.0;
  std::vector<SplitScore> splits;
  std::size_t split_count = 0;
};

EvalReport evaluate(const GrucModel& model, const ParameterSet& params,
                    const EmbeddingTable& table,
                    const std::vector<std::vector<InstanceBundle>>& splits, std::size_t jobs = 1);

nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json curve_to_json(const TrainState& state);

/// Model for a trained state.
GrucModel make_model(const TrainState& state);

/// Training defaults with dims sized for synthetic worlds: word and visual
/// widths from the world, 64 for every hidden width.
TrainConfig synthetic_train_config(std::size_t word_dim, std::size_t visual_dim);

enum class SweepParam { kSteps, kCaptions };

/// "T" | "captions"; DomainError otherwise.
SweepParam parse_sweep_param(std::string_view name);
/// T = 1..5 or captions = {5, 10, 20}.
std::vector<std::size_t> default_sweep_values(SweepParam param);

struct SweepRow {
  std::size_t value = 0;
  EvalReport report;
  double train_seconds = 0.0;  // wall clock; not reproducible
};

/// Trains and evaluates once per value, everything else from `base`.
std::vector<SweepRow> sweep(SweepParam param, const std::vector<std::size_t>& values,
                            const std::vector<InstanceBundle>& train_data,
                            const std::vector<std::vector<InstanceBundle>>& splits,
                            const EmbeddingTable& table, const TrainConfig& base);

/// Accuracy table only, so repeated runs give identical bytes.
nlohmann::json sweep_to_json(SweepParam param, const std::vector<SweepRow>& rows);

}  // namespace gruc
