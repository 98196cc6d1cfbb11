#include "mcqf/corpus/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/random.hpp"

namespace mcqf::corpus {

namespace {

constexpr Timestamp kEpochStart = 1'700'000'000'000;  // Nov 2023
constexpr Timestamp kSecond = 1000;
constexpr Timestamp kDay = 86'400 * kSecond;

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

bool known_behaviour(const std::string& name) {
  if (name == "correct") return true;
  const auto& rules = distractor_rules();
  return std::find(rules.begin(), rules.end(), name) != rules.end();
}

struct Draft {
  int a, b;
  std::vector<std::pair<std::string, std::string>> options;  // (behaviour, text)
};

// Correct answer plus the first k-1 rules giving distinct, defined values.
bool build_options(int a, int b, std::size_t k, Draft& d) {
  d = Draft{a, b, {{"correct", std::to_string(a + b)}}};
  std::set<std::string> used{d.options[0].second};
  for (const auto& rule : distractor_rules()) {
    if (d.options.size() == k) break;
    const long long v = apply_rule(rule, a, b);
    if (v < 0) continue;
    std::string text = std::to_string(v);
    if (used.insert(text).second) d.options.emplace_back(rule, std::move(text));
  }
  return d.options.size() == k;
}

std::size_t sample_index(const std::vector<double>& weights, Rng& rng) {
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  return dist(rng);
}

}  // namespace

std::vector<MisconceptionProfile> SimulatorConfig::default_profiles() {
  return {
      {"solid", 0.4, {{"correct", 0.9}, {"plus_one", 0.1}}},
      {"off_by_one", 0.2, {{"plus_one", 0.75}, {"correct", 0.25}}},
      {"subtractor", 0.2, {{"subtract", 0.75}, {"correct", 0.25}}},
      {"concatenator", 0.2, {{"concat", 0.75}, {"correct", 0.25}}},
  };
}

long long apply_rule(const std::string& rule, int a, int b) {
  const long long c = static_cast<long long>(a) + b;
  if (rule == "plus_one") return c + 1;
  if (rule == "minus_one") return c - 1;
  if (rule == "subtract") return a > b ? a - b : b - a;
  if (rule == "concat") return std::stoll(std::to_string(a) + std::to_string(b));
  if (rule == "digit_swap") {
    if (c < 10) return -1;
    std::string s = std::to_string(c);
    std::reverse(s.begin(), s.end());
    return std::stoll(s);
  }
  throw ConfigError("unknown distractor rule '" + rule + "'");
}

void validate(const SimulatorConfig& cfg) {
  if (cfg.n_students == 0) throw ConfigError("simulator.n_students must be positive");
  if (cfg.n_questions < 10) throw ConfigError("simulator.n_questions must be at least 10");
  if (cfg.choices_per_question < 2) throw ConfigError("simulator.choices_per_question must be at least 2");
  if (cfg.choices_per_question > distractor_rules().size() + 1) {
    throw ConfigError("simulator.choices_per_question = " + std::to_string(cfg.choices_per_question) +
                      " is infeasible: only " + std::to_string(distractor_rules().size()) +
                      " distinct distractor rules exist");
  }
  if (cfg.operand_min < 0 || cfg.operand_max < cfg.operand_min) {
    throw ConfigError("simulator operand range must satisfy 0 <= operand_min <= operand_max");
  }
  if (cfg.interactions_min == 0 || cfg.interactions_max < cfg.interactions_min) {
    throw ConfigError("simulator interaction range must satisfy 1 <= interactions_min <= interactions_max");
  }
  if (cfg.session_length == 0) throw ConfigError("simulator.session_length must be positive");
  auto prob = [](double p, const std::string& key) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(key + " must lie in [0, 1]");
  };
  prob(cfg.guess_rate, "simulator.guess_rate");
  prob(cfg.repeat_rate, "simulator.repeat_rate");
  if (cfg.profiles.empty()) throw ConfigError("simulator.profiles must not be empty");
  double total = 0.0;
  for (const auto& p : cfg.profiles) {
    const std::string key = "simulator.profiles." + p.name;
    if (!(p.weight >= 0.0)) throw ConfigError(key + ".weight must be non-negative");
    total += p.weight;
    if (p.behaviour.empty()) throw ConfigError(key + ".behaviour must not be empty");
    double mass = 0.0;
    for (const auto& [name, w] : p.behaviour) {
      if (!known_behaviour(name)) throw ConfigError(key + ".behaviour." + name + " is not a known behaviour");
      prob(w, key + ".behaviour." + name);
      mass += w;
    }
    if (mass <= 0.0) throw ConfigError(key + ".behaviour has zero total mass");
  }
  if (total <= 0.0) throw ConfigError("simulator.profiles weights sum to zero");
}

SimulatedCorpus simulate_population(const SimulatorConfig& cfg) {
  validate(cfg);

  // Questions: a seeded walk over all operand pairs, keeping pairs whose rules
  // yield enough distinct distractors.
  Rng qrng(derive_seed(cfg.seed, 1));
  std::vector<std::pair<int, int>> pairs;
  for (int a = cfg.operand_min; a <= cfg.operand_max; ++a)
    for (int b = cfg.operand_min; b <= cfg.operand_max; ++b) pairs.emplace_back(a, b);
  const auto order = permutation(pairs.size(), qrng);

  std::vector<Question> questions;
  std::vector<std::map<std::string, std::string>> behaviour_choice;
  const int width = cfg.n_questions >= 1000 ? 5 : 4;
  for (auto idx : order) {
    if (questions.size() == cfg.n_questions) break;
    Draft d;
    if (!build_options(pairs[idx].first, pairs[idx].second, cfg.choices_per_question, d)) continue;
    Question q;
    q.id = padded("q", questions.size() + 1, width);
    const bool carry = (d.a % 10) + (d.b % 10) >= 10;
    q.topic_id = carry ? "arith.add.carry" : "arith.add.nocarry";
    q.text = "Compute " + std::to_string(d.a) + " + " + std::to_string(d.b);
    const auto shuffle = permutation(d.options.size(), qrng);
    std::map<std::string, std::string> by_behaviour;
    for (std::size_t pos = 0; pos < shuffle.size(); ++pos) {
      const auto& [behaviour, text] = d.options[shuffle[pos]];
      const std::string cid = "c" + std::to_string(pos);
      q.choices.push_back({cid, text});
      by_behaviour[behaviour] = cid;
      if (behaviour == "correct") q.correct_choice_ids = {cid};
    }
    questions.push_back(std::move(q));
    behaviour_choice.push_back(std::move(by_behaviour));
  }
  if (questions.size() < cfg.n_questions) {
    throw ConfigError("simulator: operand range yields only " + std::to_string(questions.size()) +
                      " questions with " + std::to_string(cfg.choices_per_question) + " distinct choices, " +
                      std::to_string(cfg.n_questions) + " requested");
  }

  std::vector<Topic> topics{{"arith", "Arithmetic", std::nullopt},
                            {"arith.add", "Addition", "arith"},
                            {"arith.add.nocarry", "Addition without carry", "arith.add"},
                            {"arith.add.carry", "Addition with carry", "arith.add"}};

  std::vector<double> profile_weights;
  for (const auto& p : cfg.profiles) profile_weights.push_back(p.weight);

  std::vector<StudentRecord> students;
  std::vector<std::string> student_profiles;
  const int uwidth = cfg.n_students >= 10000 ? 6 : 5;
  for (std::size_t s = 0; s < cfg.n_students; ++s) {
    Rng rng(derive_seed(cfg.seed, 1000 + s));
    const auto& profile = cfg.profiles[sample_index(profile_weights, rng)];
    std::vector<std::string> names;
    std::vector<double> mass;
    for (const auto& [name, w] : profile.behaviour) {
      names.push_back(name);
      mass.push_back(w);
    }

    StudentRecord rec{padded("u", s + 1, uwidth), {}};
    std::uniform_int_distribution<std::size_t> n_dist(cfg.interactions_min, cfg.interactions_max);
    const std::size_t n = n_dist(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_q(0, questions.size() - 1);
    std::uniform_int_distribution<Timestamp> start(0, 30 * kDay);
    std::uniform_int_distribution<Timestamp> step_gap(15 * kSecond, 120 * kSecond);
    std::uniform_int_distribution<Timestamp> session_gap(kDay, 4 * kDay);

    Timestamp t = kEpochStart + start(rng);
    std::vector<std::size_t> attempted;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) t += (k % cfg.session_length == 0) ? session_gap(rng) : step_gap(rng);
      std::size_t qi;
      if (!attempted.empty() && unit(rng) < cfg.repeat_rate) {
        qi = attempted[std::uniform_int_distribution<std::size_t>(0, attempted.size() - 1)(rng)];
      } else {
        do {
          qi = pick_q(rng);
        } while (std::find(attempted.begin(), attempted.end(), qi) != attempted.end() &&
                 attempted.size() < questions.size());
        attempted.push_back(qi);
      }
      const Question& q = questions[qi];
      std::string chosen;
      if (unit(rng) < cfg.guess_rate) {
        chosen = q.choices[std::uniform_int_distribution<std::size_t>(0, q.choices.size() - 1)(rng)].id;
      } else {
        const std::string& behaviour = names[sample_index(mass, rng)];
        auto it = behaviour_choice[qi].find(behaviour);
        chosen = it != behaviour_choice[qi].end() ? it->second : q.correct_choice_ids.front();
      }
      Interaction in;
      in.user_id = rec.user_id;
      in.session_id = rec.user_id + "-s" + std::to_string(k / cfg.session_length + 1);
      in.question_id = q.id;
      in.selected_choice_ids = {chosen};
      in.timestamp = t;
      in.is_correct = in.selected_choice_ids == q.correct_choice_ids;
      rec.interactions.push_back(std::move(in));
    }
    students.push_back(std::move(rec));
    student_profiles.push_back(profile.name);
  }

  return {Corpus(std::move(topics), std::move(questions), std::move(students)), std::move(student_profiles),
          std::move(behaviour_choice)};
}

std::vector<std::string> worked_examples(const SimulatorConfig& cfg) {
  std::vector<std::string> out;
  for (int a = cfg.operand_min; a <= cfg.operand_max; ++a)
    for (int b = cfg.operand_min; b <= cfg.operand_max; ++b)
      out.push_back(std::to_string(a) + " + " + std::to_string(b) + " = " + std::to_string(a + b));
  return out;
}

}  // namespace mcqf::corpus
