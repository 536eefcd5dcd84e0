// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 a gradient check that ran but failed.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gruc/errors.hpp"
#include "gruc/gradcheck.hpp"
#include "gruc/harness.hpp"
#include "gruc/instance.hpp"
#include "gruc/log.hpp"
#include "gruc/retrieval.hpp"
#include "gruc/synthetic.hpp"

#ifndef GRUC_VERSION
#define GRUC_VERSION "unknown"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gruc;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheckFailed = 3;

/// Relative inputs that do not exist here are looked up under GRUC_DATA_DIR.
fs::path input_path(const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || fs::exists(path)) return path;
  if (const char* root = std::getenv("GRUC_DATA_DIR"); root && *root) {
    const fs::path under = fs::path(root) / path;
    if (fs::exists(under)) return under;
  }
  return path;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read '" + p.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw SchemaError("'" + p.string() + "': " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

/// What ran, with which inputs, producing which files; replayable from argv.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  json config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const fs::path& dir) const {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(dir / "manifest.json", {{"command", command},
                                       {"argv", argv},
                                       {"config", config},
                                       {"seed", seed},
                                       {"code_version", GRUC_VERSION},
                                       {"inputs", inputs},
                                       {"outputs", outputs},
                                       {"wall_seconds", wall}});
  }
};

/// Options every subcommand understands.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string out;
};

constexpr const char* kDefaultOut = ".";

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) cmd->add_option("--config", c.config, "JSON config (TrainConfig field names)");
  cmd->add_option("--seed", c.seed, "seed for every random choice (default 0)");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory (default: current directory)");
}

TrainConfig load_config(const Common& c, RunManifest& m) {
  TrainConfig cfg;
  if (!c.config.empty()) {
    const fs::path p = input_path(c.config);
    m.inputs.push_back(p.string());
    cfg = config_from_json(read_json(p));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  cfg.validate();
  m.config = config_to_json(cfg);
  m.seed = cfg.seed;
  return cfg;
}

fs::path output_dir(const Common& c) {
  const fs::path dir(c.out.empty() ? kDefaultOut : c.out);
  fs::create_directories(dir);
  return dir;
}

std::vector<InstanceBundle> load_data(const std::string& p, RunManifest& m) {
  const fs::path path = input_path(p);
  m.inputs.push_back(path.string());
  return load_dataset(path);
}

EmbeddingTable load_embeddings(const std::string& p, std::size_t dim, RunManifest& m) {
  const fs::path path = input_path(p);
  m.inputs.push_back(path.string());
  return load_table(path, dim);
}

TrainState load_state(const std::string& p, RunManifest& m) {
  const fs::path path = input_path(p);
  m.inputs.push_back(path.string());
  TrainState st = state_from_checkpoint(load_checkpoint(path));
  m.config = config_to_json(st.config);
  m.seed = st.config.seed;
  return st;
}

json column(const Tensor& t) {
  return json(std::vector<double>(t.values().begin(), t.values().end()));
}

json ratios_json(const ForwardTrace& trace) {
  if (trace.gate.size() == 0) return nullptr;
  const std::vector<Tensor> gates{trace.gate};
  const GateRatios r = gate_ratios(gates, trace.gate_segments);
  return {{"visual", r.visual}, {"fact", r.fact}, {"semantic", r.semantic}};
}

// ---- subcommands ----------------------------------------------------------

struct SynthArgs {
  Common common;
  std::size_t n = 500, splits = 5, test_n = 100;
  std::string difficulty = "both";
  SyntheticConfig world;
};

int run_synth(const SynthArgs& a, RunManifest& m) {
  SyntheticConfig wc = a.world;
  const std::uint64_t seed = a.common.seed.value_or(0);
  wc.world_seed = seed;
  wc.visual_dim = wc.word_dim;
  const SyntheticWorld world(wc);
  const Difficulty d = parse_difficulty(a.difficulty);
  const SyntheticCorpus corpus = make_corpus(world, a.n, a.splits, a.test_n, seed, d);
  const fs::path dir = output_dir(a.common);

  auto emit = [&](const std::string& name, const std::vector<InstanceBundle>& data) {
    save_dataset(data, dir / name);
    m.outputs.push_back((dir / name).string());
  };
  emit("train.jsonl", corpus.train);
  for (std::size_t k = 0; k < corpus.splits.size(); ++k) {
    emit("test_" + std::to_string(k) + ".jsonl", corpus.splits[k]);
  }
  save_table(world.table(), dir / "embeddings.txt");
  m.outputs.push_back((dir / "embeddings.txt").string());
  TrainConfig cfg = synthetic_train_config(wc.word_dim, wc.visual_dim);
  cfg.seed = seed;
  if (a.common.jobs) cfg.jobs = *a.common.jobs;
  write_json(dir / "config.json", config_to_json(cfg));
  m.outputs.push_back((dir / "config.json").string());
  m.config = {{"difficulty", a.difficulty},
              {"n", a.n},
              {"splits", a.splits},
              {"test_n", a.test_n},
              {"word_dim", wc.word_dim},
              {"objects", wc.objects},
              {"topics", wc.topics},
              {"detections", wc.detections},
              {"tuples", wc.tuples},
              {"noise_facts", wc.noise_facts},
              {"distractors", wc.distractors}};
  m.seed = seed;
  m.write(dir);
  return 0;
}

struct TrainArgs {
  Common common;
  std::string data, embeddings;
};

int run_train(const TrainArgs& a, RunManifest& m) {
  const TrainConfig cfg = load_config(a.common, m);
  const auto data = load_data(a.data, m);
  const EmbeddingTable table = load_embeddings(a.embeddings, cfg.model.word_dim, m);
  const fs::path dir = output_dir(a.common);
  TrainHooks hooks;
  hooks.on_epoch = [&](const TrainState& st) {
    const fs::path p = dir / ("epoch_" + std::to_string(st.epochs.size()) + ".ckpt");
    save_checkpoint(make_checkpoint(st), p);
    m.outputs.push_back(p.string());
  };
  const TrainState st = train(data, table, cfg, hooks);
  save_checkpoint(make_checkpoint(st), dir / "model.ckpt");
  write_json(dir / "curve.json", curve_to_json(st));
  m.outputs.push_back((dir / "model.ckpt").string());
  m.outputs.push_back((dir / "curve.json").string());
  m.write(dir);
  return 0;
}

struct EvalArgs {
  Common common;
  std::string checkpoint, embeddings;
  std::vector<std::string> splits;
};

int run_eval(const EvalArgs& a, RunManifest& m) {
  const TrainState st = load_state(a.checkpoint, m);
  const EmbeddingTable table = load_embeddings(a.embeddings, st.config.model.word_dim, m);
  std::vector<std::vector<InstanceBundle>> splits;
  for (const auto& s : a.splits) splits.push_back(load_data(s, m));
  const EvalReport r = evaluate(make_model(st), st.params, table, splits,
                                a.common.jobs.value_or(st.config.jobs));
  const json j = report_to_json(r);
  std::cout << j.dump(2) << "\n";
  if (!a.common.out.empty()) {
    const fs::path dir = output_dir(a.common);
    write_json(dir / "report.json", j);
    m.outputs.push_back((dir / "report.json").string());
    m.write(dir);
  }
  return 0;
}

struct InstanceArgs {
  Common common;
  std::string checkpoint, embeddings, instance;
};

struct LoadedInstance {
  TrainState state;
  EmbeddingTable table;
  InstanceBundle bundle;
};

LoadedInstance load_instance_args(const InstanceArgs& a, RunManifest& m) {
  TrainState st = load_state(a.checkpoint, m);
  const std::size_t dim = st.config.model.word_dim;
  LoadedInstance li{std::move(st), load_embeddings(a.embeddings, dim, m), {}};
  const fs::path p = input_path(a.instance);
  m.inputs.push_back(p.string());
  li.bundle = load_instance(p);
  return li;
}

void finish_single(const Common& c, const std::string& file, const json& j, RunManifest& m) {
  std::cout << j.dump(2) << "\n";
  if (c.out.empty()) return;
  const fs::path dir = output_dir(c);
  write_json(dir / file, j);
  m.outputs.push_back((dir / file).string());
  m.write(dir);
}

int run_infer(const InstanceArgs& a, RunManifest& m) {
  const LoadedInstance li = load_instance_args(a, m);
  const GrucModel model = make_model(li.state);
  ad::Tape tape;
  const ForwardResult out = model.forward(tape, li.state.params, model.prepare(li.bundle, li.table),
                                          li.table, {false, nullptr, true});
  const AnswerPrediction ranked = rank_answers(out.probs.value().values(), out.entities);
  json list = json::array();
  for (std::size_t node : ranked.ranking) list.push_back({out.entities[node], ranked.probs[node]});
  finish_single(a.common, "infer.json",
                {{"id", li.bundle.id},
                 {"answer", out.entities[ranked.answer]},
                 {"ranked", std::move(list)},
                 {"relations_used", out.relations_used},
                 {"gate_ratios", ratios_json(out.trace)}},
                m);
  return 0;
}

int run_inspect(const InstanceArgs& a, RunManifest& m) {
  const LoadedInstance li = load_instance_args(a, m);
  const GrucModel model = make_model(li.state);
  const PreparedInstance inst = model.prepare(li.bundle, li.table);
  ad::Tape tape;
  const ForwardResult out =
      model.forward(tape, li.state.params, inst, li.table, {false, nullptr, true});
  auto graph_json = [](const ModalGraph& g, const Tensor& alpha, const Tensor& beta,
                       const Neighborhood& nb) {
    json pairs = json::array();
    for (std::size_t p = 0; p < nb.size() && p < beta.size(); ++p) {
      pairs.push_back({{"receiver", nb.receiver[p]}, {"neighbor", nb.neighbor[p]}, {"beta", beta[p]}});
    }
    return json{{"nodes", g.node_labels}, {"alpha", column(alpha)}, {"beta", std::move(pairs)}};
  };
  auto stream_json = [&](const StreamTrace& t, std::size_t entries) {
    json steps = json::array();
    for (const Tensor& gamma : t.gamma) {
      json per_concept = json::array();
      for (std::size_t i = 0; i < out.entities.size(); ++i) {
        std::vector<double> row(entries);
        for (std::size_t j = 0; j < entries; ++j) row[j] = gamma(i * entries + j, 0);
        per_concept.push_back({{"concept", out.entities[i]}, {"gamma", row}});
      }
      steps.push_back(std::move(per_concept));
    }
    return steps;
  };
  const Neighborhood fact_nb = [&] {
    std::vector<FactTriplet> facts;
    for (const auto& f : out.kept_facts) facts.push_back(f.fact);
    return neighborhood(build_fact_graph(facts, li.table), li.state.config.model.neighbor_mode,
                        PairOrientation::kNeighborToReceiver);
  }();
  ModalGraph fact_graph;
  fact_graph.node_labels = out.entities;
  finish_single(
      a.common, "inspect.json",
      {{"id", li.bundle.id},
       {"entities", out.entities},
       {"probs", column(out.probs.value())},
       {"selection",
        {{"visual", graph_json(inst.visual, out.trace.visual_alpha, out.trace.visual_beta,
                               inst.visual_select)},
         {"semantic", graph_json(inst.semantic, out.trace.semantic_alpha,
                                 out.trace.semantic_beta, inst.semantic_select)},
         {"fact", graph_json(fact_graph, out.trace.fact_alpha, out.trace.fact_beta, fact_nb)}}},
       {"read_attention",
        {{"visual", stream_json(out.trace.visual_stream, inst.visual.num_nodes())},
         {"semantic", stream_json(out.trace.semantic_stream, inst.semantic.num_nodes())}}},
       {"gate_ratios", ratios_json(out.trace)}},
      m);
  return 0;
}

struct RetrieveArgs {
  Common common;
  std::string embeddings, instance, checkpoint;
  std::optional<std::size_t> top;
};

/// One JSON line per candidate, best score first. `stage` is the last stage
/// the fact took part in; the relation stage needs a checkpoint.
int run_retrieve(const RetrieveArgs& a, RunManifest& m) {
  TrainState st;
  if (!a.checkpoint.empty()) {
    st = load_state(a.checkpoint, m);
  } else {
    st.config = load_config(a.common, m);
  }
  ModelConfig mc = st.config.model;
  if (a.top) mc.retain_top = *a.top;
  const EmbeddingTable table = load_embeddings(a.embeddings, mc.word_dim, m);
  const fs::path p = input_path(a.instance);
  m.inputs.push_back(p.string());
  const InstanceBundle b = load_instance(p);

  const auto context = context_words(b.question, b.detections);
  const auto all = retain_top(score_facts(b.facts, context, table, mc.score_mode), b.facts.size());
  const std::size_t n_top = std::min(mc.retain_top, all.size());
  const std::vector<ScoredFact> top(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_top));
  std::vector<std::string> relations;
  const bool relation_stage = !a.checkpoint.empty();
  if (relation_stage) {
    const GrucModel model(mc, st.config.ablation, st.relations);
    relations = model.predict_relations(st.params, model.prepare(b, table), table);
  }
  std::vector<bool> kept(all.size(), false);
  const auto survivors = relation_stage && !relations.empty() ? filter_facts(top, relations) : top;
  for (const auto& s : survivors) {
    for (std::size_t k = 0; k < n_top; ++k) kept[k] = kept[k] || all[k].index == s.index;
  }
  std::string lines;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const json row = {{"fact", {all[k].fact.e1, all[k].fact.rel, all[k].fact.e2}},
                      {"score", all[k].score},
                      {"kept", static_cast<bool>(kept[k])},
                      {"stage", relation_stage && k < n_top ? "relation" : "top100"}};
    lines += row.dump() + "\n";
  }
  std::cout << lines;
  if (!a.common.out.empty()) {
    const fs::path dir = output_dir(a.common);
    write_file_atomic(dir / "retrieve.jsonl", lines);
    m.outputs.push_back((dir / "retrieve.jsonl").string());
    m.write(dir);
  }
  return 0;
}

struct SweepArgs {
  Common common;
  std::string param = "T", data, embeddings;
  std::vector<std::size_t> values;
  std::vector<std::string> splits;
};

int run_sweep(const SweepArgs& a, RunManifest& m) {
  const TrainConfig cfg = load_config(a.common, m);
  const SweepParam param = parse_sweep_param(a.param);
  const auto values = a.values.empty() ? default_sweep_values(param) : a.values;
  const auto data = load_data(a.data, m);
  std::vector<std::vector<InstanceBundle>> splits;
  for (const auto& s : a.splits) splits.push_back(load_data(s, m));
  const EmbeddingTable table = load_embeddings(a.embeddings, cfg.model.word_dim, m);
  const auto rows = sweep(param, values, data, splits, table, cfg);
  const fs::path dir = output_dir(a.common);
  write_json(dir / "sweep.json", sweep_to_json(param, rows));
  json timing = json::array();
  for (const auto& r : rows) timing.push_back({{"value", r.value}, {"train_seconds", r.train_seconds}});
  write_json(dir / "timing.json", timing);
  m.outputs.push_back((dir / "sweep.json").string());
  m.outputs.push_back((dir / "timing.json").string());
  m.write(dir);
  std::cout << sweep_to_json(param, rows).dump(2) << "\n";
  return 0;
}

struct GradArgs {
  Common common;
  std::string embeddings, instance;
  double tol = 1e-4, abs_floor = 1e-4;
  std::size_t coords = 8;
};

/// Seeded vectors for every token an instance mentions. The finite-difference
/// comparison does not depend on the embedding values.
EmbeddingTable random_table_for(const InstanceBundle& b, std::size_t dim, std::uint64_t seed) {
  std::vector<std::string> text(b.question.begin(), b.question.end());
  for (const auto& d : b.detections) text.insert(text.end(), d.label.begin(), d.label.end());
  for (const auto& t : b.semantic_tuples) text.insert(text.end(), {t.subject, t.relation, t.object});
  for (const auto& f : b.facts) {
    text.insert(text.end(), {f.e1, f.e2});
    for (const auto& w : relation_words(f.rel)) text.push_back(w);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingTable table(dim);
  for (const auto& phrase : text) {
    for (const auto& tok : tokenize(phrase)) {
      if (table.contains(tok)) continue;
      std::vector<double> v(dim);
      for (double& x : v) x = normal(rng);
      table.insert(tok, std::move(v));
    }
  }
  return table;
}

int run_gradcheck(const GradArgs& a, RunManifest& m) {
  const fs::path p = input_path(a.instance);
  m.inputs.push_back(p.string());
  const InstanceBundle b = load_instance(p);
  TrainConfig cfg = load_config(a.common, m);
  if (a.common.config.empty()) {
    // Compact widths keep a full check of a small instance to seconds.
    cfg.model.word_dim = a.embeddings.empty() ? 16 : cfg.model.word_dim;
    if (!b.detections.empty()) cfg.model.visual_dim = b.detections.front().feature.size();
    cfg.model.hidden_dim = 16;
    cfg.model.attention_dim = 8;
    cfg.model.classifier_hidden = 16;
    cfg.model.relation_hidden = 8;
    m.config = config_to_json(cfg);
  }
  const EmbeddingTable table = a.embeddings.empty()
                                   ? random_table_for(b, cfg.model.word_dim, cfg.seed)
                                   : load_embeddings(a.embeddings, cfg.model.word_dim, m);
  const GrucModel model(cfg.model, cfg.ablation, RelationVocab::from_corpus({b}));
  ParameterSet params;
  model.init_params(params, cfg.seed);
  const PreparedInstance inst = model.prepare(b, table);
  const LossAndGrad loss = [&](ParameterSet& ps, bool want_grad) {
    std::mt19937_64 rng(cfg.seed);  // one dropout mask for every evaluation
    ad::Tape tape;
    const ForwardResult out = model.forward(tape, ps, inst, table, {true, &rng, false});
    if (!out.loss) throw DataError("gradcheck: the answer is not among the candidates");
    if (want_grad) {
      tape.backward(*out.loss);
      tape.accumulate_param_grads(ps);
    }
    return out.loss->value()[0];
  };
  GradCheckOptions o;
  o.tol = a.tol;
  o.abs_floor = a.abs_floor;
  o.max_coords_per_param = a.coords;
  o.seed = cfg.seed;
  const GradCheckReport r = grad_check(loss, params, o);
  finish_single(a.common, "gradcheck.json",
                {{"passed", r.passed},
                 {"max_rel_error", r.max_rel_error},
                 {"tol", a.tol},
                 {"worst_param", r.worst_param},
                 {"worst_index", r.worst_index},
                 {"coords_checked", r.coords_checked}},
                m);
  std::cerr << (r.passed ? "PASS" : "FAIL") << " max rel error " << r.max_rel_error << "\n";
  return r.passed ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-based VQA with graph read-update-control reasoning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GRUC_VERSION);
  RunManifest manifest;
  manifest.argv.assign(argv, argv + argc);
  std::function<int()> action;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-gen", "generate a synthetic corpus with planted answers");
  add_common(c_synth, synth.common, false);
  c_synth->add_option("--n", synth.n, "training instances");
  c_synth->add_option("--splits", synth.splits, "test splits");
  c_synth->add_option("--test-n", synth.test_n, "instances per test split");
  c_synth->add_option("--difficulty", synth.difficulty, "visual | semantic | both | fact-only");
  c_synth->add_option("--word-dim", synth.world.word_dim, "embedding and visual width");
  c_synth->add_option("--objects", synth.world.objects, "object vocabulary size");
  c_synth->add_option("--topics", synth.world.topics, "topic vocabulary size");
  c_synth->add_option("--detections", synth.world.detections, "detections per image");
  c_synth->add_option("--tuples", synth.world.tuples, "semantic tuples per image");
  c_synth->add_option("--noise-facts", synth.world.noise_facts, "unrelated facts per instance");
  c_synth->add_option("--distractors", synth.world.distractors, "wrong candidates per question");
  c_synth->callback([&] { action = [&] { return run_synth(synth, manifest); }; });

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a model and write checkpoints");
  add_common(c_train, tr.common);
  c_train->add_option("--data", tr.data, "training instances (JSON lines)")->required();
  c_train->add_option("--embeddings", tr.embeddings, "word vectors (text format)")->required();
  c_train->callback([&] { action = [&] { return run_train(tr, manifest); }; });

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "top-1 / top-3 accuracy averaged over splits");
  add_common(c_eval, ev.common, false);
  c_eval->add_option("--checkpoint", ev.checkpoint)->required();
  c_eval->add_option("--embeddings", ev.embeddings)->required();
  c_eval->add_option("--split", ev.splits, "test split (repeatable)")->required();
  c_eval->callback([&] { action = [&] { return run_eval(ev, manifest); }; });

  InstanceArgs inf, ins;
  for (auto [name, args, help] :
       {std::tuple{"infer", &inf, "answer one instance"},
        std::tuple{"inspect", &ins, "dump attention weights and gate ratios for one instance"}}) {
    auto* c = app.add_subcommand(name, help);
    add_common(c, args->common, false);
    c->add_option("--checkpoint", args->checkpoint)->required();
    c->add_option("--embeddings", args->embeddings)->required();
    c->add_option("--instance", args->instance, "instance JSON")->required();
  }
  app.get_subcommand("infer")->callback([&] { action = [&] { return run_infer(inf, manifest); }; });
  app.get_subcommand("inspect")->callback([&] { action = [&] { return run_inspect(ins, manifest); }; });

  RetrieveArgs ret;
  auto* c_ret = app.add_subcommand("retrieve", "score and rank an instance's candidate facts");
  add_common(c_ret, ret.common);
  c_ret->add_option("--embeddings", ret.embeddings)->required();
  c_ret->add_option("--instance", ret.instance)->required();
  c_ret->add_option("--top", ret.top, "facts kept by the score stage (default 100)")
      ->check(CLI::PositiveNumber);
  c_ret->add_option("--checkpoint", ret.checkpoint, "trained model; enables the relation stage");
  c_ret->callback([&] { action = [&] { return run_retrieve(ret, manifest); }; });

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "accuracy across reasoning steps or caption counts");
  add_common(c_sweep, sw.common);
  c_sweep->add_option("--param", sw.param, "T | captions");
  c_sweep->add_option("--values", sw.values, "override the default values");
  c_sweep->add_option("--data", sw.data)->required();
  c_sweep->add_option("--split", sw.splits, "test split (repeatable)")->required();
  c_sweep->add_option("--embeddings", sw.embeddings)->required();
  c_sweep->callback([&] { action = [&] { return run_sweep(sw, manifest); }; });

  GradArgs gc;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of the full pipeline");
  add_common(c_grad, gc.common);
  c_grad->add_option("--instance", gc.instance)->required();
  c_grad->add_option("--embeddings", gc.embeddings, "word vectors (default: seeded random)");
  c_grad->add_option("--tol", gc.tol, "maximum relative error");
  c_grad->add_option("--abs-floor", gc.abs_floor, "relative error denominator floor");
  c_grad->add_option("--coords", gc.coords, "coordinates per parameter (0 = all)");
  c_grad->callback([&] { action = [&] { return run_gradcheck(gc, manifest); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  manifest.command = app.get_subcommands().front()->get_name();
  try {
    return action();
  } catch (const CLI::Error& e) {
    std::cerr << "usage: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const NoCandidates& e) {
    std::cout << "no-candidates\n";
    std::cerr << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
