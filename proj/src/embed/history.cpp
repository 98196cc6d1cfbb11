#include "mcqf/embed/history.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mcqf/core/errors.hpp"

namespace mcqf::embed {

namespace {

constexpr Timestamp kMinute = 60'000;
constexpr Timestamp kHour = 60 * kMinute;
constexpr Timestamp kDay = 24 * kHour;

void check_cutoff(Timestamp cutoff) {
  if (cutoff < 0) throw ContractError("history cutoff must be non-negative, got " + std::to_string(cutoff));
}

std::size_t choice_position(const FeatureSchema::QuestionSlot& slot, const std::string& choice_id,
                            const std::string& question_id) {
  auto it = std::find(slot.choice_ids.begin(), slot.choice_ids.end(), choice_id);
  if (it == slot.choice_ids.end()) {
    throw ReferentialError("choice '" + choice_id + "' is not part of question '" + question_id + "'");
  }
  return static_cast<std::size_t>(it - slot.choice_ids.begin());
}

}  // namespace

std::span<const corpus::Interaction> history_before(const corpus::StudentRecord& record, Timestamp cutoff) {
  const auto& xs = record.interactions;
  auto end = std::partition_point(xs.begin(), xs.end(), [&](const corpus::Interaction& i) { return i.timestamp < cutoff; });
  return {xs.data(), static_cast<std::size_t>(end - xs.begin())};
}

std::size_t time_bucket(Timestamp previous, Timestamp current, bool first) {
  if (first) return 0;
  const Timestamp gap = current - previous;
  if (gap < 5 * kMinute) return 1;
  if (gap < kHour) return 2;
  if (gap < kDay) return 3;
  return 4;
}

FeatureSchema::FeatureSchema(const corpus::Corpus& bank) {
  std::set<std::string> topic_set;
  for (const auto& q : bank.questions()) topic_set.insert(q.topic_id);
  topics_.assign(topic_set.begin(), topic_set.end());

  std::size_t offset = 0;
  for (const auto& q : bank.questions()) {
    QuestionSlot s;
    s.offset = offset;
    s.topic = static_cast<std::size_t>(std::lower_bound(topics_.begin(), topics_.end(), q.topic_id) - topics_.begin());
    for (const auto& c : q.choices) s.choice_ids.push_back(c.id);
    max_choices_ = std::max(max_choices_, q.choices.size());
    offset += 2 + q.choices.size();
    slots_.emplace(q.id, std::move(s));
  }
  aggregate_offset_ = offset;
  width_ = offset + 2 + topics_.size();
}

const FeatureSchema::QuestionSlot& FeatureSchema::slot(const std::string& question_id) const {
  auto it = slots_.find(question_id);
  if (it == slots_.end()) throw ReferentialError("history references unknown question '" + question_id + "'");
  return it->second;
}

std::vector<double> history_feature_vector(const corpus::StudentRecord& record, Timestamp cutoff,
                                           const FeatureSchema& schema) {
  check_cutoff(cutoff);
  std::vector<double> f(schema.width(), 0.0);
  const auto hist = history_before(record, cutoff);
  if (hist.empty()) return f;

  std::vector<double> topic_hits(schema.topics().size(), 0.0), topic_total(schema.topics().size(), 0.0);
  double correct = 0.0;
  for (const auto& in : hist) {
    const auto& s = schema.slot(in.question_id);
    // later attempts overwrite earlier ones
    f[s.offset] = 1.0;
    f[s.offset + 1] = in.is_correct ? 1.0 : 0.0;
    std::fill_n(f.begin() + static_cast<long>(s.offset + 2), s.choice_ids.size(), 0.0);
    for (const auto& c : in.selected_choice_ids) f[s.offset + 2 + choice_position(s, c, in.question_id)] = 1.0;
    correct += in.is_correct;
    topic_total[s.topic] += 1.0;
    topic_hits[s.topic] += in.is_correct;
  }
  const std::size_t a = schema.aggregate_offset();
  const auto n = static_cast<double>(hist.size());
  f[a] = std::log1p(n);
  f[a + 1] = correct / n;
  for (std::size_t t = 0; t < topic_total.size(); ++t)
    f[a + 2 + t] = topic_total[t] > 0 ? topic_hits[t] / topic_total[t] : 0.0;
  return f;
}

std::vector<double> interaction_rows(const corpus::StudentRecord& record, Timestamp cutoff, std::size_t seq_len,
                                     const FeatureSchema& schema) {
  check_cutoff(cutoff);
  if (seq_len == 0) throw ContractError("sequence length must be at least 1");
  const std::size_t w = schema.row_width();
  std::vector<double> rows(seq_len * w, 0.0);
  const auto hist = history_before(record, cutoff);
  const std::size_t n = std::min(seq_len, hist.size());
  const std::size_t first = hist.size() - n;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& in = hist[first + k];
    const auto& s = schema.slot(in.question_id);
    double* row = rows.data() + (seq_len - n + k) * w;
    row[0] = in.is_correct ? 1.0 : 0.0;
    for (const auto& c : in.selected_choice_ids) row[1 + choice_position(s, c, in.question_id)] = 1.0;
    row[1 + schema.max_choices() + s.topic] = 1.0;
    const std::size_t i = first + k;
    const std::size_t bucket = time_bucket(i > 0 ? hist[i - 1].timestamp : 0, in.timestamp, i == 0);
    row[1 + schema.max_choices() + schema.topics().size() + bucket] = 1.0;
  }
  return rows;
}

std::string serialize_history(const corpus::StudentRecord& record, Timestamp cutoff, std::size_t seq_len,
                              const corpus::Corpus& bank) {
  check_cutoff(cutoff);
  if (seq_len == 0) throw ContractError("sequence length must be at least 1");
  const auto hist = history_before(record, cutoff);
  const std::size_t first = hist.size() - std::min(seq_len, hist.size());
  std::string out;
  for (std::size_t i = first; i < hist.size(); ++i) {
    const auto& in = hist[i];
    const auto& q = bank.question(in.question_id);
    if (!out.empty()) out += " [SEP] ";
    out += "Q: " + q.text + " A: ";
    for (std::size_t c = 0; c < in.selected_choice_ids.size(); ++c) {
      if (c) out += " , ";
      out += q.choice(in.selected_choice_ids[c]).text;
    }
    out += in.is_correct ? " CORRECT" : " WRONG";
  }
  return out;
}

}  // namespace mcqf::embed
