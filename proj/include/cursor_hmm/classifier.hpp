#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cursor_hmm/hmm.hpp"

namespace cursor_hmm {

// Per-task models sharing one alphabet (same symbol names, same order).
class TaskModelRegistry {
 public:
  // Throws AlphabetMismatch if the model's alphabet differs from the models
  // already registered, std::invalid_argument on a duplicate name or an
  // invalid model.
  void add(const std::string& task, HmmModel model);

  const std::map<std::string, HmmModel>& entries() const { return entries_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, HmmModel> entries_;
  std::vector<std::string> alphabet_;
};

using TaskScores = std::map<std::string, double>;

struct Decision {
  std::string winner;
  // Winner minus runner-up. +inf when every other task scored -inf, 0 for a
  // single task.
  double margin = 0.0;
  bool tie = false;
};

struct TaskScoreReport {
  TaskScores scores;
  std::string winner;
  double margin = 0.0;
  bool tie = false;
  // Set when a threshold was supplied: margin >= threshold.
  std::optional<double> threshold;
  std::optional<bool> above_threshold;

  bool operator==(const TaskScoreReport&) const = default;
};

// Every model gives the sequence zero probability.
class NoDecision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TaskScores score_all(const TaskModelRegistry& registry, const SymbolSequence& seq);

/// Argmax over scores. Exact ties set the flag and pick the lexicographically
/// smallest task name.
Decision decide(const TaskScores& scores);

TaskScoreReport classify(const TaskModelRegistry& registry, const SymbolSequence& seq,
                         std::optional<double> margin_threshold = std::nullopt);

}  // namespace cursor_hmm
