#include "mcqf/pipeline/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/hash.hpp"
#include "mcqf/embed/registry.hpp"

namespace mcqf::pipeline {

using nlohmann::json;

namespace {

// Parsed files give unsigned numbers; documents built in code give signed ones.
bool non_negative(const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }

// Walks one JSON object, recording type errors and unknown keys under a
// dotted key path instead of stopping at the first problem.
class Reader {
 public:
  Reader(const json* obj, std::string path, std::vector<ConfigIssue>* errs)
      : obj_(obj), path_(std::move(path)), errs_(errs) {
    if (obj_ && !obj_->is_object()) {
      fail("", "must be an object");
      obj_ = nullptr;
    }
  }

  std::string key_path(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }
  void fail(const std::string& key, const std::string& msg) const { errs_->push_back({key_path(key), msg}); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  Reader child(const std::string& key) { return Reader(raw(key), key_path(key), errs_); }

  void size(const std::string& key, std::size_t& out) {
    const json* v = raw(key);
    if (!v) return;
    if (non_negative(*v)) {
      out = v->get<std::size_t>();
    } else if (v->is_number_integer()) {
      fail(key, "must be a non-negative integer, got " + v->dump());
    } else {
      fail(key, "must be a non-negative integer");
    }
  }

  void seed(const std::string& key, std::uint64_t& out) {
    std::size_t v = out;
    size(key, v);
    out = v;
  }

  void integer(const std::string& key, int& out) {
    const json* v = raw(key);
    if (!v) return;
    if (v->is_number_integer()) {
      out = v->get<int>();
    } else {
      fail(key, "must be an integer");
    }
  }

  void real(const std::string& key, double& out) {
    const json* v = raw(key);
    if (!v) return;
    if (v->is_number() && std::isfinite(v->get<double>())) {
      out = v->get<double>();
    } else {
      fail(key, "must be a finite number");
    }
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = raw(key);
    if (!v) return;
    if (v->is_boolean()) {
      out = v->get<bool>();
    } else {
      fail(key, "must be true or false");
    }
  }

  void string(const std::string& key, std::string& out) {
    const json* v = raw(key);
    if (!v) return;
    if (v->is_string()) {
      out = v->get<std::string>();
    } else {
      fail(key, "must be a string");
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items())
      if (!seen_.count(k)) fail(k, "unknown key");
  }

 private:
  const json* obj_;
  std::string path_;
  std::vector<ConfigIssue>* errs_;
  std::set<std::string> seen_;
};

void read_encoder(Reader r, text::EncoderConfig& c) {
  r.size("hidden", c.hidden);
  r.size("layers", c.layers);
  r.size("heads", c.heads);
  r.size("ffn", c.ffn);
  r.size("max_positions", c.max_positions);
  r.real("dropout", c.dropout);
  r.finish();
}

void read_pretrain(Reader r, text::PretrainConfig& c, bool masked) {
  r.size("epochs", c.epochs);
  r.size("batch_size", c.batch_size);
  r.size("max_len", c.max_len);
  r.real("lr", c.lr);
  r.real("clip_norm", c.clip_norm);
  if (masked) r.real("mask_prob", c.mask_prob);
  r.finish();
}

void read_train(Reader r, model::TrainConfig& c) {
  r.size("epochs", c.epochs);
  r.size("batch_size", c.batch_size);
  r.size("max_len", c.max_len);
  r.real("lr", c.lr);
  r.real("clip_norm", c.clip_norm);
  r.real("pos_weight", c.pos_weight);
  r.boolean("freeze_encoder", c.freeze_encoder);
  r.finish();
}

void read_simulator(Reader r, corpus::SimulatorConfig& s) {
  r.size("n_students", s.n_students);
  r.size("n_questions", s.n_questions);
  r.size("choices_per_question", s.choices_per_question);
  r.integer("operand_min", s.operand_min);
  r.integer("operand_max", s.operand_max);
  r.size("interactions_min", s.interactions_min);
  r.size("interactions_max", s.interactions_max);
  r.size("session_length", s.session_length);
  r.real("repeat_rate", s.repeat_rate);
  r.real("guess_rate", s.guess_rate);
  r.seed("seed", s.seed);
  r.finish();
}

std::string registry_hint() {
  return "valid families: mlp_ae, lstm_ae (sequence_length 10/20/30/40, lstm_layers 1-4), encoder_pool "
         "(sequence_length 10), clm_pool (sequence_length 10/20/30/40)";
}

// An entry is a registry id or {family, sequence_length, lstm_layers}.
std::optional<std::string> read_embedder(const json& v, const std::string& path, std::vector<ConfigIssue>& errs) {
  if (v.is_string()) {
    try {
      return embed::find_config(v.get<std::string>()).id();
    } catch (const ConfigError&) {
      errs.push_back({path, "unknown embedder '" + v.get<std::string>() + "'; " + registry_hint()});
      return std::nullopt;
    }
  }
  const std::size_t before = errs.size();
  Reader r(&v, path, &errs);
  std::string family;
  std::size_t seq_len = 10, layers = 1;
  r.string("family", family);
  r.size("sequence_length", seq_len);
  r.size("lstm_layers", layers);
  r.finish();
  if (errs.size() != before) return std::nullopt;
  const auto fam = embed::parse_family(family);
  if (!fam) {
    errs.push_back({path + ".family", "unknown family '" + family + "'; " + registry_hint()});
    return std::nullopt;
  }
  embed::EmbedderConfig cfg{*fam, 0, 0, embed::kDefaultEmbeddingDim};
  if (*fam == embed::Family::lstm_ae || *fam == embed::Family::clm_pool || *fam == embed::Family::encoder_pool)
    cfg.seq_len = seq_len;
  if (*fam == embed::Family::lstm_ae) cfg.lstm_layers = layers;
  for (const auto& c : embed::registry())
    if (c.id() == cfg.id()) return c.id();
  errs.push_back({path, "configuration " + cfg.id() + " is not in the 22-entry registry; " + registry_hint()});
  return std::nullopt;
}

void check(std::vector<ConfigIssue>& errs, bool ok, std::string key, std::string msg) {
  if (!ok) errs.push_back({std::move(key), std::move(msg)});
}

void validate_encoder(const text::EncoderConfig& c, const std::string& p, std::vector<ConfigIssue>& errs) {
  check(errs, c.hidden > 0, p + ".hidden", "must be positive");
  check(errs, c.layers > 0, p + ".layers", "must be positive");
  check(errs, c.heads > 0 && c.hidden % std::max<std::size_t>(c.heads, 1) == 0, p + ".heads",
        "must be positive and divide " + p + ".hidden");
  check(errs, c.ffn > 0, p + ".ffn", "must be positive");
  check(errs, c.max_positions >= 4, p + ".max_positions", "must be at least 4");
  check(errs, c.dropout >= 0.0 && c.dropout < 1.0, p + ".dropout", "must lie in [0, 1)");
}

void validate_pretrain(const text::PretrainConfig& c, const std::string& p, std::size_t positions,
                       std::vector<ConfigIssue>& errs, bool masked) {
  check(errs, c.epochs > 0, p + ".epochs", "must be positive");
  check(errs, c.batch_size > 0, p + ".batch_size", "must be positive");
  check(errs, c.lr > 0.0, p + ".lr", "must be positive");
  check(errs, c.max_len >= 3 && c.max_len <= positions, p + ".max_len",
        "must lie in [3, " + std::to_string(positions) + "] (the model's max_positions)");
  if (masked) check(errs, c.mask_prob > 0.0 && c.mask_prob < 1.0, p + ".mask_prob", "must lie in (0, 1)");
}

void validate_train(const model::TrainConfig& c, const std::string& p, std::size_t positions,
                    std::vector<ConfigIssue>& errs) {
  check(errs, c.epochs > 0, p + ".epochs", "must be positive");
  check(errs, c.batch_size > 0, p + ".batch_size", "must be positive");
  check(errs, c.lr > 0.0, p + ".lr", "must be positive");
  check(errs, c.pos_weight > 0.0, p + ".pos_weight", "must be positive");
  check(errs, c.max_len >= 4 && c.max_len <= positions, p + ".max_len",
        "must lie in [4, " + std::to_string(positions) + "] (encoder.max_positions)");
}

void validate(const RunConfig& c, std::vector<ConfigIssue>& errs) {
  const auto& src = c.corpus;
  if (src.source == "simulate") {
    try {
      corpus::validate(src.simulator);
    } catch (const ConfigError& e) {
      errs.push_back({"corpus.simulator", e.what()});
    }
  } else if (src.source == "files") {
    for (const auto& [key, path] : {std::pair{"questions", src.questions}, std::pair{"interactions", src.interactions}}) {
      if (path.empty()) {
        errs.push_back({std::string("corpus.") + key, "is required when corpus.source is \"files\""});
      } else if (!std::filesystem::exists(path)) {
        errs.push_back({std::string("corpus.") + key, "file not found: " + path.string()});
      }
    }
    if (!src.topics.empty() && !std::filesystem::exists(src.topics))
      errs.push_back({"corpus.topics", "file not found: " + src.topics.string()});
  } else {
    errs.push_back({"corpus.source", "must be \"simulate\" or \"files\", got \"" + src.source + "\""});
  }
  check(errs, c.min_freq >= 1, "vocab.min_freq", "must be at least 1");
  validate_encoder(c.encoder, "encoder", errs);
  validate_encoder(c.decoder, "decoder", errs);
  validate_pretrain(c.mlm, "pretrain.mlm", c.encoder.max_positions, errs, true);
  validate_pretrain(c.clm, "pretrain.clm", c.decoder.max_positions, errs, false);
  const auto& ae = c.embedders.autoencoder;
  check(errs, c.embedders.mlp_hidden > 0, "embedders.mlp_hidden", "must be positive");
  check(errs, ae.epochs > 0, "embedders.autoencoder.epochs", "must be positive");
  check(errs, ae.batch_size > 0, "embedders.autoencoder.batch_size", "must be positive");
  check(errs, ae.lr > 0.0, "embedders.autoencoder.lr", "must be positive");
  check(errs, ae.val_fraction >= 0.0 && ae.val_fraction < 1.0, "embedders.autoencoder.val_fraction",
        "must lie in [0, 1)");
  const auto& r = c.experiments.ratios;
  check(errs, r.train > 0 && r.val > 0 && r.test > 0, "split", "train, val and test must all be positive");
  check(errs, std::abs(r.train + r.val + r.test - 1.0) < 1e-9, "split", "train + val + test must equal 1");
  validate_train(c.experiments.exp1, "train.exp1", c.encoder.max_positions, errs);
  validate_train(c.experiments.retention, "train.retention", c.encoder.max_positions, errs);
  validate_train(c.experiments.student, "train.student", c.encoder.max_positions, errs);
  check(errs, !c.seeds.empty(), "seeds", "must list at least one seed");
  check(errs, !c.grid_strategies.empty(), "grid.strategies", "must list at least one strategy");
  check(errs, !c.output_dir.empty(), "output_dir", "must not be empty");
}

json encoder_json(const text::EncoderConfig& c) {
  return {{"hidden", c.hidden}, {"layers", c.layers},  {"heads", c.heads},
          {"ffn", c.ffn},       {"max_positions", c.max_positions}, {"dropout", c.dropout}};
}

json pretrain_json(const text::PretrainConfig& c, bool masked) {
  json j{{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"max_len", c.max_len}, {"lr", c.lr},
         {"clip_norm", c.clip_norm}};
  if (masked) j["mask_prob"] = c.mask_prob;
  return j;
}

json train_json(const model::TrainConfig& c) {
  return {{"epochs", c.epochs},        {"batch_size", c.batch_size}, {"max_len", c.max_len},
          {"lr", c.lr},                {"clip_norm", c.clip_norm},   {"pos_weight", c.pos_weight},
          {"freeze_encoder", c.freeze_encoder}};
}

}  // namespace

RunConfig::RunConfig() {
  mlm.epochs = 10;
  mlm.max_len = 64;
  decoder.max_positions = 512;
  clm.epochs = 5;
  clm.batch_size = 16;
  clm.max_len = 512;
  experiments.exp1.epochs = 1;
  experiments.retention.epochs = 20;
  experiments.student.epochs = 3;
}

ConfigResult parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ConfigResult res;
  auto& errs = res.errors;
  RunConfig c;
  Reader root(&doc, "", &errs);

  Reader corpus = root.child("corpus");
  corpus.string("source", c.corpus.source);
  corpus.boolean("worked_examples", c.corpus.worked_examples);
  read_simulator(corpus.child("simulator"), c.corpus.simulator);
  for (auto [key, target] : {std::pair{"questions", &c.corpus.questions}, std::pair{"interactions", &c.corpus.interactions},
                             std::pair{"topics", &c.corpus.topics}}) {
    std::string s;
    corpus.string(key, s);
    if (!s.empty()) *target = std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base_dir / s;
  }
  corpus.finish();

  Reader vocab = root.child("vocab");
  vocab.size("min_freq", c.min_freq);
  vocab.finish();
  read_encoder(root.child("encoder"), c.encoder);
  read_encoder(root.child("decoder"), c.decoder);

  Reader pre = root.child("pretrain");
  pre.seed("seed", c.model_seed);
  read_pretrain(pre.child("mlm"), c.mlm, true);
  read_pretrain(pre.child("clm"), c.clm, false);
  pre.finish();

  Reader emb = root.child("embedders");
  emb.seed("seed", c.embedders.seed);
  emb.size("mlp_hidden", c.embedders.mlp_hidden);
  {
    Reader ae = emb.child("autoencoder");
    auto& a = c.embedders.autoencoder;
    ae.size("epochs", a.epochs);
    ae.size("batch_size", a.batch_size);
    ae.real("lr", a.lr);
    ae.real("clip_norm", a.clip_norm);
    ae.real("val_fraction", a.val_fraction);
    ae.finish();
  }
  emb.finish();

  Reader split = root.child("split");
  split.real("train", c.experiments.ratios.train);
  split.real("val", c.experiments.ratios.val);
  split.real("test", c.experiments.ratios.test);
  split.finish();

  Reader train = root.child("train");
  read_train(train.child("exp1"), c.experiments.exp1);
  read_train(train.child("retention"), c.experiments.retention);
  read_train(train.child("student"), c.experiments.student);
  train.finish();

  Reader grid = root.child("grid");
  if (const json* list = grid.raw("embedders")) {
    if (!list->is_array()) {
      grid.fail("embedders", "must be an array");
    } else {
      c.grid_embedders.clear();
      for (std::size_t i = 0; i < list->size(); ++i)
        if (auto id = read_embedder((*list)[i], "grid.embedders[" + std::to_string(i) + "]", errs))
          c.grid_embedders.push_back(*id);
    }
  }
  if (const json* list = grid.raw("strategies")) {
    if (!list->is_array()) {
      grid.fail("strategies", "must be an array");
    } else {
      c.grid_strategies.clear();
      for (std::size_t i = 0; i < list->size(); ++i) {
        const auto& v = (*list)[i];
        const auto s = v.is_string() ? model::parse_strategy(v.get<std::string>()) : std::nullopt;
        if (s) {
          c.grid_strategies.push_back(*s);
        } else {
          errs.push_back({"grid.strategies[" + std::to_string(i) + "]", "must be \"cat\" or \"sum\""});
        }
      }
    }
  }
  grid.finish();

  if (const json* list = root.raw("seeds")) {
    if (!list->is_array()) {
      root.fail("seeds", "must be an array of non-negative integers");
    } else {
      c.seeds.clear();
      for (std::size_t i = 0; i < list->size(); ++i) {
        const auto& v = (*list)[i];
        if (non_negative(v)) {
          c.seeds.push_back(v.get<std::uint64_t>());
        } else {
          errs.push_back({"seeds[" + std::to_string(i) + "]", "must be a non-negative integer"});
        }
      }
    }
  }
  root.string("output_dir", c.output_dir);
  root.finish();

  validate(c, errs);
  if (errs.empty()) res.config = std::move(c);
  return res;
}

ConfigResult load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {std::nullopt, {{"", "cannot read config file '" + path.string() + "'"}}};
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    return {std::nullopt, {{"", path.string() + ": " + e.what()}}};
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  const auto& s = c.corpus.simulator;
  json strategies = json::array();
  for (auto st : c.grid_strategies) strategies.push_back(model::to_string(st));
  const auto& a = c.embedders.autoencoder;
  return {
      {"corpus",
       {{"source", c.corpus.source},
        {"worked_examples", c.corpus.worked_examples},
        {"simulator",
         {{"n_students", s.n_students},
          {"n_questions", s.n_questions},
          {"choices_per_question", s.choices_per_question},
          {"operand_min", s.operand_min},
          {"operand_max", s.operand_max},
          {"interactions_min", s.interactions_min},
          {"interactions_max", s.interactions_max},
          {"session_length", s.session_length},
          {"repeat_rate", s.repeat_rate},
          {"guess_rate", s.guess_rate},
          {"seed", s.seed}}},
        {"questions", c.corpus.questions.string()},
        {"interactions", c.corpus.interactions.string()},
        {"topics", c.corpus.topics.string()}}},
      {"vocab", {{"min_freq", c.min_freq}}},
      {"encoder", encoder_json(c.encoder)},
      {"decoder", encoder_json(c.decoder)},
      {"pretrain", {{"seed", c.model_seed}, {"mlm", pretrain_json(c.mlm, true)}, {"clm", pretrain_json(c.clm, false)}}},
      {"embedders",
       {{"seed", c.embedders.seed},
        {"mlp_hidden", c.embedders.mlp_hidden},
        {"autoencoder",
         {{"epochs", a.epochs},
          {"batch_size", a.batch_size},
          {"lr", a.lr},
          {"clip_norm", a.clip_norm},
          {"val_fraction", a.val_fraction}}}}},
      {"split",
       {{"train", c.experiments.ratios.train}, {"val", c.experiments.ratios.val}, {"test", c.experiments.ratios.test}}},
      {"train",
       {{"exp1", train_json(c.experiments.exp1)},
        {"retention", train_json(c.experiments.retention)},
        {"student", train_json(c.experiments.student)}}},
      {"grid", {{"embedders", c.grid_embedders}, {"strategies", strategies}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
  };
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  return hex64(fnv1a64(j.dump()));
}

std::string format_issues(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  for (const auto& i : issues) os << (i.key.empty() ? std::string("<config>") : i.key) << ": " << i.message << '\n';
  return os.str();
}

}  // namespace mcqf::pipeline
