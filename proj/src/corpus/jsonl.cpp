#include "mcqf/corpus/jsonl.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "mcqf/core/errors.hpp"

namespace mcqf::corpus {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct LineCtx {
  std::string path;
  std::size_t line;

  [[noreturn]] void fail(const std::string& field, const std::string& reason) const {
    throw IngestionError(path + ":" + std::to_string(line) + ": field '" + field + "': " + reason);
  }
};

const json& require(const json& obj, const char* field, const LineCtx& ctx) {
  auto it = obj.find(field);
  if (it == obj.end()) ctx.fail(field, "missing");
  return *it;
}

std::string get_string(const json& obj, const char* field, const LineCtx& ctx) {
  const json& v = require(obj, field, ctx);
  if (!v.is_string()) ctx.fail(field, "expected string");
  return v.get<std::string>();
}

std::vector<std::string> get_string_list(const json& obj, const char* field, const LineCtx& ctx) {
  const json& v = require(obj, field, ctx);
  if (!v.is_array()) ctx.fail(field, "expected array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) ctx.fail(field, "expected array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream f(path);
  if (!f) throw IngestionError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LineCtx ctx{path.string(), n};
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      ctx.fail("<line>", std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) ctx.fail("<line>", "expected a JSON object");
    fn(obj, ctx);
  }
}

void write_lines(const fs::path& path, const std::vector<json>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IngestionError("cannot open '" + path.string() + "' for writing");
  for (const auto& r : rows) f << r.dump() << '\n';
  if (!f) throw IngestionError("write failed for '" + path.string() + "'");
}

}  // namespace

void save_questions(const fs::path& path, const std::vector<Question>& questions) {
  std::vector<json> rows;
  for (const auto& q : questions) {
    json choices = json::array();
    for (const auto& c : q.choices) choices.push_back({{"id", c.id}, {"text", c.text}});
    rows.push_back({{"id", q.id},
                    {"topic_id", q.topic_id},
                    {"text", q.text},
                    {"choices", choices},
                    {"correct_choice_ids", q.correct_choice_ids}});
  }
  write_lines(path, rows);
}

void save_interactions(const fs::path& path, const std::vector<StudentRecord>& students) {
  std::vector<json> rows;
  for (const auto& s : students)
    for (const auto& it : s.interactions) {
      rows.push_back({{"user_id", it.user_id},
                      {"session_id", it.session_id},
                      {"question_id", it.question_id},
                      {"selected_choice_ids", it.selected_choice_ids},
                      {"timestamp", it.timestamp},
                      {"is_correct", it.is_correct}});
    }
  write_lines(path, rows);
}

void save_topics(const fs::path& path, const std::vector<Topic>& topics) {
  std::vector<json> rows;
  for (const auto& t : topics) {
    json row{{"id", t.id}, {"name", t.name}};
    row["parent_id"] = t.parent_id ? json(*t.parent_id) : json(nullptr);
    rows.push_back(std::move(row));
  }
  write_lines(path, rows);
}

std::vector<Question> load_questions(const fs::path& path) {
  std::vector<Question> out;
  for_each_line(path, [&](const json& obj, const LineCtx& ctx) {
    Question q;
    q.id = get_string(obj, "id", ctx);
    q.topic_id = get_string(obj, "topic_id", ctx);
    q.text = get_string(obj, "text", ctx);
    const json& choices = require(obj, "choices", ctx);
    if (!choices.is_array()) ctx.fail("choices", "expected array");
    for (const auto& c : choices) {
      if (!c.is_object()) ctx.fail("choices", "expected array of objects");
      q.choices.push_back({get_string(c, "id", ctx), get_string(c, "text", ctx)});
    }
    q.correct_choice_ids = get_string_list(obj, "correct_choice_ids", ctx);
    normalize_ids(q.correct_choice_ids);
    try {
      validate_question(q);
    } catch (const std::exception& e) {
      ctx.fail("choices", e.what());
    }
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<Topic> load_topics(const fs::path& path) {
  std::vector<Topic> out;
  for_each_line(path, [&](const json& obj, const LineCtx& ctx) {
    Topic t{get_string(obj, "id", ctx), get_string(obj, "name", ctx), std::nullopt};
    if (auto it = obj.find("parent_id"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) ctx.fail("parent_id", "expected string or null");
      t.parent_id = it->get<std::string>();
    }
    out.push_back(std::move(t));
  });
  return out;
}

namespace {

struct RawInteraction {
  Interaction it;
  bool has_is_correct = false;
  LineCtx ctx;
};

std::vector<RawInteraction> read_interactions(const fs::path& path) {
  std::vector<RawInteraction> out;
  for_each_line(path, [&](const json& obj, const LineCtx& ctx) {
    RawInteraction r{{}, false, ctx};
    r.it.user_id = get_string(obj, "user_id", ctx);
    r.it.session_id = get_string(obj, "session_id", ctx);
    r.it.question_id = get_string(obj, "question_id", ctx);
    r.it.selected_choice_ids = get_string_list(obj, "selected_choice_ids", ctx);
    normalize_ids(r.it.selected_choice_ids);
    if (r.it.selected_choice_ids.empty()) ctx.fail("selected_choice_ids", "must be non-empty");
    const json& ts = require(obj, "timestamp", ctx);
    if (!ts.is_number_integer()) ctx.fail("timestamp", "expected integer epoch milliseconds");
    r.it.timestamp = ts.get<Timestamp>();
    if (auto c = obj.find("is_correct"); c != obj.end()) {
      if (!c->is_boolean()) ctx.fail("is_correct", "expected boolean");
      r.it.is_correct = c->get<bool>();
      r.has_is_correct = true;
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<StudentRecord> group_by_user(std::vector<RawInteraction>& raw) {
  std::vector<StudentRecord> students;
  std::unordered_map<std::string, std::size_t> slot;
  for (auto& r : raw) {
    auto [pos, fresh] = slot.emplace(r.it.user_id, students.size());
    if (fresh) students.push_back({r.it.user_id, {}});
    students[pos->second].interactions.push_back(std::move(r.it));
  }
  for (auto& s : students) {
    std::stable_sort(s.interactions.begin(), s.interactions.end(),
                     [](const Interaction& a, const Interaction& b) { return a.timestamp < b.timestamp; });
  }
  return students;
}

}  // namespace

std::vector<StudentRecord> load_interactions(const fs::path& path) {
  auto raw = read_interactions(path);
  return group_by_user(raw);
}

Corpus load_corpus(const fs::path& questions_path, const fs::path& interactions_path, const fs::path& topics_path) {
  auto questions = load_questions(questions_path);
  std::vector<Topic> topics;
  if (!topics_path.empty()) topics = load_topics(topics_path);
  std::unordered_map<std::string, const Question*> by_id;
  for (const auto& q : questions) by_id.emplace(q.id, &q);

  auto raw = read_interactions(interactions_path);
  for (auto& r : raw) {
    auto q = by_id.find(r.it.question_id);
    if (q == by_id.end()) {
      throw ReferentialError(r.ctx.path + ":" + std::to_string(r.ctx.line) + ": unknown question_id '" +
                             r.it.question_id + "'");
    }
    for (const auto& c : r.it.selected_choice_ids) {
      if (!q->second->has_choice(c)) {
        throw ReferentialError(r.ctx.path + ":" + std::to_string(r.ctx.line) + ": choice id '" + c +
                               "' is not a choice of question '" + r.it.question_id + "'");
      }
    }
    const bool correct = r.it.selected_choice_ids == q->second->correct_choice_ids;
    if (r.has_is_correct && r.it.is_correct != correct) {
      r.ctx.fail("is_correct", "disagrees with the question's correct_choice_ids");
    }
    r.it.is_correct = correct;
  }
  return Corpus(std::move(topics), std::move(questions), group_by_user(raw));
}

void save_corpus(const fs::path& dir, const Corpus& corpus) {
  save_questions(dir / "questions.jsonl", corpus.questions());
  save_interactions(dir / "interactions.jsonl", corpus.students());
  save_topics(dir / "topics.jsonl", corpus.topics());
}

}  // namespace mcqf::corpus
