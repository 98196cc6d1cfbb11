#include "mcqf/corpus/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/random.hpp"

namespace mcqf::corpus {

std::vector<BinaryInstance> decompose(const Corpus& corpus, Task task) {
  std::vector<BinaryInstance> out;
  if (task == Task::correct_answer) {
    const auto& qs = corpus.questions();
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      const auto& q = qs[qi];
      for (const auto& c : q.choices) {
        out.push_back({std::nullopt, q.id, c.id, q.text, c.text, q.is_correct_choice(c.id) ? 1 : 0, 0, qi});
      }
    }
    return out;
  }
  std::size_t group = 0;
  for (const auto& s : corpus.students()) {
    for (const auto& it : s.interactions) {
      const Question& q = corpus.question(it.question_id);
      for (const auto& c : q.choices) {
        const bool selected =
            std::binary_search(it.selected_choice_ids.begin(), it.selected_choice_ids.end(), c.id);
        out.push_back({s.user_id, q.id, c.id, q.text, c.text, selected ? 1 : 0, it.timestamp, group});
      }
      ++group;
    }
  }
  return out;
}

const char* to_string(SplitPolicy p) {
  switch (p) {
    case SplitPolicy::question_exclusive:
      return "question_exclusive";
    case SplitPolicy::student_task:
      return "student_task";
    case SplitPolicy::full:
      return "full";
  }
  return "unknown";
}

std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
  for (double x : r)
    if (!(x >= 0.0)) throw ConfigError("split ratios must be non-negative");
  const double total = r[0] + r[1] + r[2];
  if (total <= 0.0) throw ConfigError("split ratios must not all be zero");

  std::array<std::size_t, 3> count{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * r[i] / total;
    count[i] = static_cast<std::size_t>(std::floor(exact));
    frac[i] = exact - static_cast<double>(count[i]);
    assigned += count[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++count[order[k % 3]];

  if (n >= 3) {
    for (int i = 0; i < 3; ++i) {
      if (r[i] > 0.0 && count[i] == 0) {
        auto big = std::max_element(count.begin(), count.end()) - count.begin();
        --count[big];
        ++count[i];
      }
    }
  }
  return count;
}

namespace {

// Assigns whole groups to subsets in a seeded order, preserving the input
// order of instances inside each subset.
DatasetSplit split_by(const std::vector<BinaryInstance>& instances, const SplitRatios& ratios, std::uint64_t seed,
                      SplitPolicy policy, const std::vector<std::string>& keys) {
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::string> groups;
  for (const auto& k : keys)
    if (group_of.emplace(k, groups.size()).second) groups.push_back(k);

  const auto sizes = apportion(groups.size(), ratios);
  Rng rng(seed);
  const auto perm = permutation(groups.size(), rng);
  std::vector<int> subset(groups.size());
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    subset[perm[pos]] = pos < sizes[0] ? 0 : (pos < sizes[0] + sizes[1] ? 1 : 2);
  }
  DatasetSplit out;
  out.policy = policy;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    switch (subset[group_of.at(keys[i])]) {
      case 0:
        out.train.push_back(instances[i]);
        break;
      case 1:
        out.val.push_back(instances[i]);
        break;
      default:
        out.test.push_back(instances[i]);
    }
  }
  return out;
}

}  // namespace

DatasetSplit split_question_exclusive(const std::vector<BinaryInstance>& instances, const SplitRatios& ratios,
                                      std::uint64_t seed) {
  std::vector<std::string> keys;
  keys.reserve(instances.size());
  for (const auto& in : instances) {
    if (in.user_id) throw ContractError("question-exclusive split expects correct-answer instances");
    keys.push_back(in.question_id);
  }
  std::vector<std::string> distinct = keys;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw SplitError("question-exclusive split needs at least 3 questions, got " + std::to_string(distinct.size()));
  }
  return split_by(instances, ratios, seed, SplitPolicy::question_exclusive, keys);
}

DatasetSplit split_student_task(const std::vector<BinaryInstance>& instances, const SplitRatios& ratios,
                                std::uint64_t seed) {
  std::vector<std::string> keys;
  keys.reserve(instances.size());
  for (const auto& in : instances) {
    if (!in.user_id) throw ContractError("student-task split expects student-answer instances");
    keys.push_back(std::to_string(in.group));
  }
  const std::size_t interactions = std::unordered_set<std::string>(keys.begin(), keys.end()).size();
  if (interactions < 3) {
    throw SplitError("student-task split needs at least 3 interactions, got " + std::to_string(interactions));
  }
  return split_by(instances, ratios, seed, SplitPolicy::student_task, keys);
}

DatasetSplit full_split(const std::vector<BinaryInstance>& instances) {
  return {SplitPolicy::full, instances, instances, instances};
}

}  // namespace mcqf::corpus
