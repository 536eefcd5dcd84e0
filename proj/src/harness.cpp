// SPDX-License-Identifier: Apache-2.0
#include "gruc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "gruc/errors.hpp"
#include "gruc/kernels.hpp"
#include "gruc/log.hpp"

namespace gruc {

using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t dropout_seed(std::uint64_t seed, std::size_t epoch, std::size_t instance) {
  return splitmix(splitmix(seed ^ 0x5deece66dULL) ^ splitmix(epoch) ^ (instance * 0x2545f4914f6cdd1dULL));
}

struct InstanceGrad {
  bool used = false;
  double loss = 0.0;
  std::vector<std::pair<std::string, Tensor>> grads;
};

json epoch_to_json(const EpochStats& e) {
  return {{"epoch", e.epoch},
          {"mean_loss", e.mean_loss},
          {"steps", e.steps},
          {"skipped", e.skipped},
          {"last_lr", e.last_lr}};
}

}  // namespace

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs - 1);
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

GrucModel make_model(const TrainState& state) {
  return GrucModel(state.config.model, state.config.ablation, state.relations);
}

TrainConfig synthetic_train_config(std::size_t word_dim, std::size_t visual_dim) {
  TrainConfig c;
  c.model.word_dim = word_dim;
  c.model.visual_dim = visual_dim;
  c.model.hidden_dim = c.model.attention_dim = c.model.classifier_hidden =
      c.model.relation_hidden = 64;
  return c;
}

TrainState train(const std::vector<InstanceBundle>& data, const EmbeddingTable& table,
                 const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (data.empty()) throw DataError("train: empty training set");
  TrainState state;
  state.config = config;
  state.relations = RelationVocab::from_corpus(data);
  state.shuffle_rng.seed(config.seed);
  const GrucModel model = make_model(state);
  model.init_params(state.params, config.seed);

  std::vector<PreparedInstance> prepared(data.size());
  parallel_for(data.size(), config.jobs,
               [&](std::size_t i) { prepared[i] = model.prepare(data[i], table); });

  const std::size_t n = data.size();
  const std::size_t steps_per_epoch = (n + config.batch - 1) / config.batch;
  std::size_t batches_seen = 0;
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.shuffle_rng);
    EpochStats stats;
    stats.epoch = epoch + 1;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    for (std::size_t start = 0; start < n; start += config.batch) {
      const std::size_t len = std::min(config.batch, n - start);
      std::vector<InstanceGrad> results(len);
      parallel_for(len, config.jobs, [&](std::size_t k) {
        const std::size_t idx = order[start + k];
        std::mt19937_64 rng(dropout_seed(config.seed, epoch, idx));
        ad::Tape tape;
        ForwardResult out;
        try {
          out = model.forward(tape, state.params, prepared[idx], table, {true, &rng, false});
        } catch (const NoCandidates&) {
          return;
        }
        if (!out.loss) return;
        tape.backward(*out.loss);
        results[k].used = true;
        results[k].loss = out.loss->value()[0];
        results[k].grads = tape.take_param_grads();
      });

      const double lr = config.schedule.lr_at(static_cast<double>(batches_seen) /
                                              static_cast<double>(steps_per_epoch));
      ++batches_seen;
      std::size_t used = 0;
      double batch_loss = 0.0;
      for (const auto& r : results) {
        if (r.used) {
          ++used;
          batch_loss += r.loss;
        }
      }
      stats.skipped += len - used;
      if (used == 0) continue;

      state.params.zero_grad();
      const double scale = 1.0 / static_cast<double>(used);
      for (const auto& r : results) {
        if (!r.used) continue;
        for (const auto& [name, g] : r.grads) {
          Tensor& dst = state.params.at(name).grad;
          kernels::axpy(scale, g.data(), dst.data(), g.size());
        }
      }
      adam_step(state.params, state.adam, lr);
      ++state.global_step;
      ++stats.steps;
      stats.last_lr = lr;
      state.step_losses.push_back(batch_loss * scale);
      loss_sum += batch_loss;
      loss_count += used;
    }
    stats.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    state.skipped += stats.skipped;
    state.epochs.push_back(stats);
    log::info("epoch " + std::to_string(stats.epoch) + "/" + std::to_string(config.epochs) +
              " loss " + std::to_string(stats.mean_loss) + " steps " +
              std::to_string(stats.steps) + " skipped " + std::to_string(stats.skipped));
    if (hooks.on_epoch) hooks.on_epoch(state);
  }
  return state;
}

Checkpoint make_checkpoint(const TrainState& state) {
  Checkpoint ckpt;
  ckpt.seed = state.config.seed;
  json meta;
  meta["config"] = config_to_json(state.config);
  meta["relations"] = state.relations.names();
  meta["step_losses"] = state.step_losses;
  meta["skipped"] = state.skipped;
  json epochs = json::array();
  for (const auto& e : state.epochs) epochs.push_back(epoch_to_json(e));
  meta["epochs"] = std::move(epochs);
  ckpt.metadata = meta.dump();
  ckpt.params = state.params;
  ckpt.adam = state.adam;
  ckpt.schedule_epoch = static_cast<double>(state.epochs.size());
  ckpt.global_step = state.global_step;
  std::ostringstream rng;
  rng << state.shuffle_rng;
  ckpt.rng_state = rng.str();
  return ckpt;
}

TrainState state_from_checkpoint(const Checkpoint& ckpt) {
  json meta;
  try {
    meta = json::parse(ckpt.metadata);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint metadata: ") + e.what());
  }
  if (!meta.is_object() || !meta.contains("config") || !meta.contains("relations")) {
    throw SchemaError("checkpoint metadata: missing config or relations");
  }
  TrainState state;
  try {
    state.config = config_from_json(meta.at("config"));
    state.relations = RelationVocab(meta.at("relations").get<std::vector<std::string>>());
    if (meta.contains("step_losses")) {
      state.step_losses = meta["step_losses"].get<std::vector<double>>();
    }
    if (meta.contains("skipped")) state.skipped = meta["skipped"].get<std::size_t>();
    if (meta.contains("epochs")) {
      for (const auto& e : meta["epochs"]) {
        state.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("mean_loss").get<double>(),
                                e.at("steps").get<std::size_t>(), e.at("skipped").get<std::size_t>(),
                                e.at("last_lr").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint metadata: ") + e.what());
  }
  state.params = ckpt.params;
  state.adam = ckpt.adam;
  state.global_step = ckpt.global_step;
  if (!ckpt.rng_state.empty()) {
    std::istringstream rng(ckpt.rng_state);
    rng >> state.shuffle_rng;
    if (!rng) throw SchemaError("checkpoint: malformed rng state");
  }
  // The stored parameters must cover exactly what the model would create.
  ParameterSet expected;
  make_model(state).init_params(expected, 0);
  if (expected.names() != state.params.names()) {
    throw SchemaError("checkpoint: parameter names do not match the stored config");
  }
  for (const auto& [name, p] : expected) {
    if (!p.value.same_shape(state.params.value(name))) {
      throw SchemaError("checkpoint: shape mismatch for '" + name + "'");
    }
  }
  return state;
}

InstancePrediction predict(const GrucModel& model, const ParameterSet& params,
                           const EmbeddingTable& table, const InstanceBundle& bundle) {
  InstancePrediction pred;
  pred.id = bundle.id;
  const PreparedInstance inst = model.prepare(bundle, table);
  ad::Tape tape;
  ForwardResult out;
  try {
    out = model.forward(tape, params, inst, table);
  } catch (const NoCandidates&) {
    pred.skipped = true;
    return pred;
  }
  pred.relations_used = out.relations_used;
  const AnswerPrediction ranked = rank_answers(out.probs.value().values(), out.entities);
  for (std::size_t node : ranked.ranking) {
    pred.ranked.push_back(out.entities[node]);
    pred.ranked_probs.push_back(ranked.probs[node]);
  }
  const auto hit = std::find(pred.ranked.begin(), pred.ranked.end(), inst.answer);
  const auto rank = static_cast<std::size_t>(hit - pred.ranked.begin());
  pred.top1 = hit != pred.ranked.end() && rank < 1;
  pred.top3 = hit != pred.ranked.end() && rank < 3;
  return pred;
}

SplitScore score_split(const std::vector<InstancePrediction>& predictions) {
  SplitScore s;
  s.n = predictions.size();
  for (const auto& p : predictions) {
    s.correct1 += p.top1 ? 1 : 0;
    s.correct3 += p.top3 ? 1 : 0;
    s.skipped += p.skipped ? 1 : 0;
  }
  if (s.n > 0) {
    s.top1 = static_cast<double>(s.correct1) / static_cast<double>(s.n);
    s.top3 = static_cast<double>(s.correct3) / static_cast<double>(s.n);
  }
  return s;
}

EvalReport evaluate(const GrucModel& model, const ParameterSet& params,
                    const EmbeddingTable& table,
                    const std::vector<std::vector<InstanceBundle>>& splits, std::size_t jobs) {
  EvalReport report;
  report.split_count = splits.size();
  for (const auto& split : splits) {
    std::vector<InstancePrediction> preds(split.size());
    parallel_for(split.size(), jobs,
                 [&](std::size_t i) { preds[i] = predict(model, params, table, split[i]); });
    report.splits.push_back(score_split(preds));
  }
  // Accuracy is averaged over splits, each split weighted equally.
  if (!report.splits.empty()) {
    for (const auto& s : report.splits) {
      report.top1 += s.top1;
      report.top3 += s.top3;
    }
    report.top1 /= static_cast<double>(report.splits.size());
    report.top3 /= static_cast<double>(report.splits.size());
  }
  return report;
}

json report_to_json(const EvalReport& report) {
  json splits = json::array();
  for (const auto& s : report.splits) {
    splits.push_back({{"n", s.n},
                      {"correct_top1", s.correct1},
                      {"correct_top3", s.correct3},
                      {"skipped", s.skipped},
                      {"top1", s.top1},
                      {"top3", s.top3}});
  }
  return {{"top1", report.top1},
          {"top3", report.top3},
          {"split_count", report.split_count},
          {"splits", std::move(splits)}};
}

json curve_to_json(const TrainState& state) {
  json epochs = json::array();
  for (const auto& e : state.epochs) epochs.push_back(epoch_to_json(e));
  return {{"step_losses", state.step_losses},
          {"epochs", std::move(epochs)},
          {"global_step", state.global_step},
          {"skipped", state.skipped}};
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "T") return SweepParam::kSteps;
  if (name == "captions") return SweepParam::kCaptions;
  throw DomainError("unknown sweep parameter '" + std::string(name) + "' (T, captions)");
}

std::vector<std::size_t> default_sweep_values(SweepParam param) {
  if (param == SweepParam::kSteps) return {1, 2, 3, 4, 5};
  return {5, 10, 20};
}

std::vector<SweepRow> sweep(SweepParam param, const std::vector<std::size_t>& values,
                            const std::vector<InstanceBundle>& train_data,
                            const std::vector<std::vector<InstanceBundle>>& splits,
                            const EmbeddingTable& table, const TrainConfig& base) {
  std::vector<SweepRow> rows;
  for (std::size_t v : values) {
    TrainConfig config = base;
    (param == SweepParam::kSteps ? config.model.steps : config.model.captions) = v;
    const auto start = std::chrono::steady_clock::now();
    const TrainState state = train(train_data, table, config);
    SweepRow row;
    row.value = v;
    row.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.report = evaluate(make_model(state), state.params, table, splits, config.jobs);
    log::info("sweep " + std::to_string(v) + ": top1 " + std::to_string(row.report.top1));
    rows.push_back(std::move(row));
  }
  return rows;
}

json sweep_to_json(SweepParam param, const std::vector<SweepRow>& rows) {
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"value", r.value}, {"top1", r.report.top1}, {"top3", r.report.top3}});
  }
  return {{"param", param == SweepParam::kSteps ? "T" : "captions"}, {"rows", std::move(table)}};
}

}  // namespace gruc
