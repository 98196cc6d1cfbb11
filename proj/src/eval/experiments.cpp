#include "mcqf/eval/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/format.hpp"
#include "mcqf/core/random.hpp"

namespace mcqf::eval {

namespace {

enum : std::uint64_t { kSplitStream = 1, kTrainStream = 2, kCellStream = 3 };

EvalResult dummy_row(const std::vector<corpus::BinaryInstance>& train, const std::vector<corpus::BinaryInstance>& test,
                     std::uint64_t seed) {
  EvalResult r;
  r.model = "Dummy";
  r.metrics = dummy_baseline(model::labels_of(train), model::labels_of(test));
  r.seed = seed;
  return r;
}

ExperimentOutcome fit_mcqbert(const corpus::DatasetSplit& split, const text::Vocab& vocab, const text::MaskedLm& mlm,
                              model::TrainConfig cfg, std::uint64_t seed) {
  cfg.seed = derive_seed(seed, kTrainStream);
  ExperimentOutcome out;
  out.model = model::McqBert::from_mlm(mlm, derive_seed(seed, kTrainStream + 100));
  out.report = model::train_mcqbert(out.model, vocab, split, cfg);
  EvalResult r;
  r.model = "MCQBert";
  r.epoch = out.report.chosen_epoch;
  r.metrics = model::score(split.test, model::predict(out.model, vocab, split.test, cfg.max_len));
  r.seed = seed;
  out.rows = {r, dummy_row(split.train, split.test, seed)};
  return out;
}

}  // namespace

std::string forecaster_name(model::Strategy s) {
  return s == model::Strategy::cat ? "MCQStudentBertCat" : "MCQStudentBertSum";
}

std::string results_csv(const std::vector<EvalResult>& rows) {
  std::ostringstream os;
  os << kResultsHeader << '\n';
  for (const auto& r : rows) {
    os << r.model << ',' << r.strategy << ',' << r.embedder << ',';
    if (r.failure) {
      os << "failed,,,,,," << r.seed << '\n';
      continue;
    }
    const auto& m = r.metrics;
    os << r.epoch << ',' << format_double(m.mcc) << ',' << format_double(m.f1_macro) << ','
       << format_double(m.f1_class0) << ',' << format_double(m.f1_class1) << ',' << format_double(m.accuracy) << ','
       << r.seed << '\n';
  }
  return os.str();
}

void write_results_csv(const std::filesystem::path& path, const std::vector<EvalResult>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write results '" + path.string() + "'");
  out << results_csv(rows);
}

std::vector<EvalResult> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw IngestionError("results table has an unexpected header");
  std::vector<EvalResult> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw IngestionError("results line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    EvalResult r;
    r.model = f[0];
    r.strategy = f[1];
    r.embedder = f[2];
    try {
      r.seed = std::stoull(f[9]);
      if (f[3] == "failed") {
        r.failure = "failed";
      } else {
        r.epoch = std::stoull(f[3]);
        r.metrics = {std::stod(f[4]), std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8])};
      }
    } catch (const std::logic_error&) {
      throw IngestionError("results line " + std::to_string(lineno) + " has a non-numeric field");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<EvalResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read results '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_results_csv(os.str());
}

void sort_results(std::vector<EvalResult>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const EvalResult& a, const EvalResult& b) {
    const auto key = [](const EvalResult& r) {
      return std::make_tuple(r.strategy, r.failure.has_value(), r.failure ? 0.0 : -r.metrics.mcc, r.model, r.embedder,
                             r.seed);
    };
    return key(a) < key(b);
  });
}

ExperimentOutcome run_experiment_1(const corpus::Corpus& corpus, const text::Vocab& vocab, const text::MaskedLm& mlm,
                                   const ExperimentSettings& settings, std::uint64_t seed) {
  const auto split = corpus::split_question_exclusive(corpus::decompose(corpus, corpus::Task::correct_answer),
                                                      settings.ratios, derive_seed(seed, kSplitStream));
  return fit_mcqbert(split, vocab, mlm, settings.exp1, seed);
}

ExperimentOutcome run_experiment_2(const corpus::Corpus& corpus, const text::Vocab& vocab, const text::MaskedLm& mlm,
                                   const ExperimentSettings& settings, std::uint64_t seed) {
  const auto split = corpus::full_split(corpus::decompose(corpus, corpus::Task::correct_answer));
  return fit_mcqbert(split, vocab, mlm, settings.retention, seed);
}

corpus::DatasetSplit forecasting_split(const corpus::Corpus& corpus, const ExperimentSettings& settings,
                                       std::uint64_t seed) {
  return corpus::split_student_task(corpus::decompose(corpus, corpus::Task::student_answer), settings.ratios,
                                    derive_seed(seed, kSplitStream));
}

GridOutcome run_forecasting_grid(const corpus::Corpus& corpus, const text::Vocab& vocab, const model::McqBert& base,
                                 std::size_t base_epoch, const std::vector<std::string>& config_ids,
                                 const std::vector<model::Strategy>& strategies, const EmbeddingProvider& embeddings,
                                 const ExperimentSettings& settings, std::uint64_t seed,
                                 const CellObserver& observer) {
  GridOutcome out;
  out.split = forecasting_split(corpus, settings, seed);
  const auto& split = out.split;
  const std::size_t max_len = settings.student.max_len;

  EvalResult base_row;
  base_row.model = "MCQBert";
  base_row.epoch = base_epoch;
  base_row.metrics = model::score(split.test, model::predict(base, vocab, split.test, max_len));
  base_row.seed = seed;
  out.rows.push_back(base_row);
  out.rows.push_back(dummy_row(split.train, split.test, seed));

  std::uint64_t cell = 0;
  for (const auto& id : config_ids) {
    std::optional<embed::EmbeddingTable> table;
    std::string table_error;
    try {
      table = embeddings(id, split);
    } catch (const std::exception& e) {
      table_error = e.what();
    }
    for (auto s : strategies) {
      EvalResult r;
      r.model = forecaster_name(s);
      r.strategy = model::to_string(s);
      r.embedder = id;
      r.seed = seed;
      const std::uint64_t cell_seed = derive_seed(seed, kCellStream * 1000 + cell++);
      if (!table) {
        r.failure = table_error;
        out.rows.push_back(r);
        continue;
      }
      try {
        model::StudentForecaster f(base, s, table->dim(), cell_seed);
        auto cfg = settings.student;
        cfg.seed = derive_seed(cell_seed, kTrainStream);
        const auto report = model::train_student_forecaster(f, vocab, split, *table, cfg);
        r.epoch = report.chosen_epoch;
        r.metrics = model::score(split.test, model::predict(f, vocab, split.test, *table, max_len));
        if (observer) observer(r, f, report);
      } catch (const std::exception& e) {
        r.failure = e.what();
      }
      out.rows.push_back(r);
    }
  }
  sort_results(out.rows);
  return out;
}

}  // namespace mcqf::eval
