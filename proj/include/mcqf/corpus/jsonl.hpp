#pragma once

#include <filesystem>
#include <vector>

#include "mcqf/corpus/types.hpp"

// JSONL schemas, one object per line, UTF-8:
//
//   questions.jsonl
//     {"id": str, "topic_id": str, "text": str,
//      "choices": [{"id": str, "text": str}, ...],
//      "correct_choice_ids": [str, ...]}
//
//   interactions.jsonl
//     {"user_id": str, "session_id": str, "question_id": str,
//      "selected_choice_ids": [str, ...], "timestamp": int (epoch ms),
//      "is_correct": bool (optional on input; recomputed and checked)}
//
//   topics.jsonl
//     {"id": str, "name": str, "parent_id": str | null (optional)}
//
// Blank lines are skipped. Interactions are grouped per user in order of
// first appearance and stably sorted by timestamp.

namespace mcqf::corpus {

void save_questions(const std::filesystem::path& path, const std::vector<Question>& questions);
void save_interactions(const std::filesystem::path& path, const std::vector<StudentRecord>& students);
void save_topics(const std::filesystem::path& path, const std::vector<Topic>& topics);

/// Throws IngestionError naming line, field and reason on schema violations.
std::vector<Question> load_questions(const std::filesystem::path& path);
std::vector<Topic> load_topics(const std::filesystem::path& path);
/// Schema-level validation only; is_correct is taken from the file when present.
std::vector<StudentRecord> load_interactions(const std::filesystem::path& path);

/// Loads and cross-validates a corpus. Unknown question or choice ids raise
/// ReferentialError; is_correct is recomputed from the question bank and a
/// stored value that disagrees is an IngestionError. topics_path may be empty.
Corpus load_corpus(const std::filesystem::path& questions_path, const std::filesystem::path& interactions_path,
                   const std::filesystem::path& topics_path = {});

/// Writes questions.jsonl, interactions.jsonl and topics.jsonl into dir.
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);

}  // namespace mcqf::corpus
