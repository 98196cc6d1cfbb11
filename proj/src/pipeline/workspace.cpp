#include "mcqf/pipeline/workspace.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/format.hpp"
#include "mcqf/core/hash.hpp"
#include "mcqf/core/random.hpp"
#include "mcqf/corpus/jsonl.hpp"
#include "mcqf/text/lm_io.hpp"

namespace mcqf::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
}

bool all_exist(std::initializer_list<fs::path> paths) {
  return std::all_of(paths.begin(), paths.end(), [](const fs::path& p) { return fs::exists(p); });
}

}  // namespace

struct Workspace::State {
  std::shared_ptr<const corpus::Corpus> corpus;
  std::shared_ptr<const text::Vocab> vocab;
  std::shared_ptr<const text::MaskedLm> mlm;
  std::optional<model::McqBert> retention;
  std::size_t retention_epoch = 0;
  bool exp1_ready = false, embeddings_ready = false;
  std::map<std::uint64_t, corpus::DatasetSplit> splits;
  std::map<std::uint64_t, std::unique_ptr<EmbeddingFactory>> factories;
};

void apply_environment(RunConfig& cfg) {
  if (const char* dir = std::getenv("MCQF_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
}

Workspace::Workspace(RunConfig cfg, std::ostream* log)
    : cfg_(std::move(cfg)), hash_(config_hash(cfg_)), log_(log), st_(std::make_unique<State>()) {
  dir_ = fs::path(cfg_.output_dir) / ("run-" + hash_);
  fs::create_directories(dir_);
  json j = to_json(cfg_);
  j.erase("output_dir");
  spit(dir_ / "config.json", j.dump(2) + "\n");
}

Workspace::~Workspace() = default;

template <typename Fn>
auto Workspace::stage(const char* name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      note(std::string("[") + name + "] done in " +
           format_double(std::round(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() * 10) / 10) +
           " s");
    } else {
      return fn();
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void Workspace::note(const std::string& line) const {
  if (log_) *log_ << line << std::endl;
}

fs::path Workspace::seed_dir(std::uint64_t seed) const { return dir_ / ("seed-" + std::to_string(seed)); }

void Workspace::simulate() {
  if (st_->corpus) return;
  stage("simulate", [&] {
    const auto cdir = dir_ / "corpus";
    const auto q = cdir / "questions.jsonl", i = cdir / "interactions.jsonl", t = cdir / "topics.jsonl";
    const auto vpath = dir_ / "vocab.txt";
    if (!all_exist({q, i, t})) {
      fs::create_directories(cdir);
      if (cfg_.corpus.source == "simulate") {
        note("[simulate] generating " + std::to_string(cfg_.corpus.simulator.n_students) + " students");
        corpus::save_corpus(cdir, corpus::simulate_population(cfg_.corpus.simulator).corpus);
      } else {
        note("[simulate] importing " + cfg_.corpus.questions.string());
        corpus::save_corpus(cdir, corpus::load_corpus(cfg_.corpus.questions, cfg_.corpus.interactions, cfg_.corpus.topics));
      }
      fs::remove(vpath);
    }
    // Always read back from disk so a fresh run and a resumed one see the
    // same objects.
    st_->corpus = std::make_shared<const corpus::Corpus>(corpus::load_corpus(q, i, t));
    if (!fs::exists(vpath)) {
      std::vector<std::string> docs;
      if (cfg_.corpus.source == "simulate" && cfg_.corpus.worked_examples)
        docs = corpus::worked_examples(cfg_.corpus.simulator);
      build_vocab(*st_->corpus, docs, cfg_.min_freq).save(vpath);
    }
    st_->vocab = std::make_shared<const text::Vocab>(text::Vocab::load(vpath));
  });
}

void Workspace::pretrain_mlm() {
  if (st_->mlm) return;
  simulate();
  stage("pretrain-mlm", [&] {
    const auto path = dir_ / "mlm" / "mlm.ckpt";
    if (fs::exists(path)) {
      st_->mlm = std::make_shared<const text::MaskedLm>(text::load_masked_lm(path, *st_->vocab));
      return;
    }
    auto enc = cfg_.encoder;
    enc.vocab_size = st_->vocab->size();
    auto lm = std::make_shared<text::MaskedLm>(enc, derive_seed(cfg_.model_seed, 1));
    auto pcfg = cfg_.mlm;
    pcfg.seed = derive_seed(cfg_.model_seed, 2);
    std::vector<std::string> docs;
    if (cfg_.corpus.source == "simulate" && cfg_.corpus.worked_examples)
      docs = corpus::worked_examples(cfg_.corpus.simulator);
    note("[pretrain-mlm] " + std::to_string(pcfg.epochs) + " epochs");
    const auto report = text::mlm_pretrain(*lm, *st_->vocab, mlm_texts(*st_->corpus, docs), pcfg);
    std::string curve = "epoch,loss\n";
    for (std::size_t e = 0; e < report.loss_curve.size(); ++e)
      curve += std::to_string(e) + ',' + format_double(report.loss_curve[e]) + '\n';
    spit(dir_ / "mlm" / "loss.csv", curve);
    text::save_lm(path, *lm, *st_->vocab);
    st_->mlm = lm;
  });
}

void Workspace::ensure_retention() {
  if (st_->retention) return;
  pretrain_mlm();
  stage("train-mcqbert", [&] {
    const auto mdir = dir_ / "mcqbert";
    const auto ckpt = mdir / "retention.ckpt", meta = mdir / "retention.json", results = dir_ / "results" / "exp2.csv";
    if (all_exist({ckpt, meta, results})) {
      st_->retention = model::load_mcqbert(ckpt, *st_->vocab);
      st_->retention_epoch = json::parse(slurp(meta)).at("chosen_epoch").get<std::size_t>();
      return;
    }
    note("[train-mcqbert] retention model, " + std::to_string(cfg_.experiments.retention.epochs) + " epochs");
    auto out = eval::run_experiment_2(*st_->corpus, *st_->vocab, *st_->mlm, cfg_.experiments, cfg_.model_seed);
    fs::create_directories(mdir);
    fs::create_directories(results.parent_path());
    model::save_model(ckpt, out.model, *st_->vocab);
    out.report.write_csv(mdir / "retention_log.csv");
    spit(meta, json{{"chosen_epoch", out.report.chosen_epoch}}.dump() + "\n");
    eval::write_results_csv(results, out.rows);
    st_->retention = std::move(out.model);
    st_->retention_epoch = out.report.chosen_epoch;
  });
}

void Workspace::ensure_exp1(std::uint64_t seed) {
  pretrain_mlm();
  stage("train-mcqbert", [&] {
    const auto edir = seed_dir(seed) / "exp1";
    if (all_exist({edir / "mcqbert.ckpt", edir / "results.csv"})) return;
    note("[train-mcqbert] question-exclusive model, seed " + std::to_string(seed));
    auto out = eval::run_experiment_1(*st_->corpus, *st_->vocab, *st_->mlm, cfg_.experiments, seed);
    fs::create_directories(edir);
    model::save_model(edir / "mcqbert.ckpt", out.model, *st_->vocab);
    out.report.write_csv(edir / "train_log.csv");
    eval::write_results_csv(edir / "results.csv", out.rows);
  });
}

void Workspace::train_mcqbert() {
  ensure_retention();
  if (st_->exp1_ready) return;
  for (auto s : cfg_.seeds) ensure_exp1(s);
  st_->exp1_ready = true;
}

EmbedderTraining embedder_training(const RunConfig& cfg, std::uint64_t seed) {
  auto t = cfg.embedders;
  t.decoder = cfg.decoder;
  t.clm = cfg.clm;
  t.seed = derive_seed(cfg.embedders.seed, seed);
  return t;
}

const corpus::DatasetSplit& Workspace::split_for(std::uint64_t seed) {
  auto it = st_->splits.find(seed);
  if (it == st_->splits.end())
    it = st_->splits.emplace(seed, eval::forecasting_split(*st_->corpus, cfg_.experiments, seed)).first;
  return it->second;
}

EmbeddingFactory& Workspace::factory_for(std::uint64_t seed) {
  auto& slot = st_->factories[seed];
  if (!slot) {
    slot = std::make_unique<EmbeddingFactory>(st_->corpus, st_->vocab, st_->mlm, embedder_training(cfg_, seed));
    slot->set_cache_dir(seed_dir(seed) / "embeddings");
  }
  return *slot;
}

void Workspace::pretrain_clm() {
  pretrain_mlm();
  stage("pretrain-clm", [&] {
    for (auto s : cfg_.seeds) {
      note("[pretrain-clm] seed " + std::to_string(s));
      factory_for(s).prepare("clm_pool_L10", split_for(s));
    }
  });
}

void Workspace::train_embeddings() {
  if (st_->embeddings_ready) return;
  pretrain_mlm();
  stage("train-embeddings", [&] {
    for (auto s : cfg_.seeds) {
      for (const auto& id : cfg_.grid_embedders) {
        note("[train-embeddings] " + id + ", seed " + std::to_string(s));
        factory_for(s).prepare(id, split_for(s));
      }
    }
  });
  st_->embeddings_ready = true;
}

void Workspace::ensure_grid(std::uint64_t seed) {
  const auto sdir = seed_dir(seed);
  if (fs::exists(sdir / "grid.csv")) return;
  ensure_retention();
  train_embeddings();
  stage("train-forecaster", [&] {
    note("[train-forecaster] grid for seed " + std::to_string(seed));
    auto& factory = factory_for(seed);
    const auto fdir = sdir / "forecasters";
    fs::create_directories(fdir);
    auto provider = [&](const std::string& id, const corpus::DatasetSplit& split) { return factory(id, split); };
    auto observer = [&](const eval::EvalResult& row, const model::StudentForecaster& f, const model::TrainReport& report) {
      const std::string stem = row.strategy + "_" + row.embedder;
      model::save_model(fdir / (stem + ".ckpt"), f, *st_->vocab, row.embedder);
      report.write_csv(fdir / (stem + "_log.csv"));
    };
    const auto out = eval::run_forecasting_grid(*st_->corpus, *st_->vocab, *st_->retention, st_->retention_epoch,
                                                cfg_.grid_embedders, cfg_.grid_strategies, provider, cfg_.experiments,
                                                seed, observer);
    std::string failures;
    for (const auto& r : out.rows)
      if (r.failure) failures += r.strategy + "," + r.embedder + ": " + *r.failure + "\n";
    if (!failures.empty()) {
      spit(sdir / "failures.txt", failures);
      note("[train-forecaster] some cells failed, see " + (sdir / "failures.txt").string());
    }
    eval::write_results_csv(sdir / "grid.csv", out.rows);
  });
}

void Workspace::train_forecasters() {
  for (auto s : cfg_.seeds) ensure_grid(s);
}

fs::path Workspace::evaluate_exp1() {
  train_mcqbert();
  return stage("evaluate", [&] {
    std::vector<eval::EvalResult> rows;
    for (auto s : cfg_.seeds) {
      auto part = eval::read_results_csv(seed_dir(s) / "exp1" / "results.csv");
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const auto path = dir_ / "results" / "exp1.csv";
    fs::create_directories(path.parent_path());
    eval::write_results_csv(path, rows);
    note("[evaluate] " + path.string());
    return path;
  });
}

fs::path Workspace::evaluate_exp2() {
  ensure_retention();
  const auto path = dir_ / "results" / "exp2.csv";
  note("[evaluate] " + path.string());
  return path;
}

fs::path Workspace::evaluate_grid() {
  train_forecasters();
  return stage("evaluate", [&] {
    std::vector<eval::EvalResult> rows;
    for (auto s : cfg_.seeds) {
      auto part = eval::read_results_csv(seed_dir(s) / "grid.csv");
      rows.insert(rows.end(), part.begin(), part.end());
    }
    eval::sort_results(rows);
    const auto path = dir_ / "results" / "grid.csv";
    fs::create_directories(path.parent_path());
    eval::write_results_csv(path, rows);
    note("[evaluate] " + path.string());
    return path;
  });
}

fs::path Workspace::export_embeddings(const std::string& config_id, std::uint64_t seed) {
  pretrain_mlm();
  return stage("export-embeddings", [&] {
    const auto id = embed::find_config(config_id).id();
    const auto table = factory_for(seed)(id, split_for(seed));
    const auto edir = dir_ / "exports";
    fs::create_directories(edir);
    const std::string stem = id + "_seed" + std::to_string(seed);
    embed::export_embeddings(table, edir / (stem + ".csv"), edir / (stem + "_projection.csv"));
    note("[export-embeddings] " + (edir / (stem + ".csv")).string());
    return edir / (stem + ".csv");
  });
}

void Workspace::run_all() {
  simulate();
  pretrain_mlm();
  pretrain_clm();
  train_mcqbert();
  train_embeddings();
  train_forecasters();
  evaluate_exp1();
  evaluate_exp2();
  evaluate_grid();
}

void Workspace::write_manifest() const {
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir_)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir_).generic_string();
    if (rel != "manifest.json") names.push_back(rel);
  }
  std::sort(names.begin(), names.end());
  json files = json::array();
  for (const auto& n : names) {
    const std::string body = slurp(dir_ / n);
    files.push_back({{"path", n}, {"bytes", body.size()}, {"fnv1a64", hex64(fnv1a64(body))}});
  }
  json j{{"config_hash", hash_}, {"files", files}};
  spit(dir_ / "manifest.json", j.dump(2) + "\n");
}

}  // namespace mcqf::pipeline
