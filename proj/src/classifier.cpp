#include "cursor_hmm/classifier.hpp"

#include <cmath>
#include <limits>

namespace cursor_hmm {

void TaskModelRegistry::add(const std::string& task, HmmModel model) {
  if (task.empty()) throw std::invalid_argument("task name must not be empty");
  require_valid(model);
  if (entries_.contains(task)) throw std::invalid_argument("task '" + task + "' registered twice");
  if (entries_.empty()) {
    alphabet_ = model.symbol_names;
  } else if (model.symbol_names != alphabet_) {
    throw AlphabetMismatch("model for task '" + task + "' uses a different alphabet");
  }
  entries_.emplace(task, std::move(model));
}

TaskScores score_all(const TaskModelRegistry& registry, const SymbolSequence& seq) {
  if (registry.empty()) throw std::invalid_argument("task registry is empty");
  TaskScores scores;
  for (const auto& [task, model] : registry.entries()) {
    scores.emplace(task, log_likelihood(model, seq));
  }
  return scores;
}

Decision decide(const TaskScores& scores) {
  if (scores.empty()) throw std::invalid_argument("no scores to decide between");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // std::map iterates in name order, so a strict comparison keeps the
  // smallest name among equal scores.
  const std::string* best_name = nullptr;
  double best = kNegInf;
  for (const auto& [task, score] : scores) {
    if (score > best) {
      best = score;
      best_name = &task;
    }
  }
  if (best_name == nullptr) {
    throw NoDecision("sequence is impossible under every task model");
  }

  Decision out;
  out.winner = *best_name;
  if (scores.size() == 1) return out;

  double runner_up = kNegInf;
  for (const auto& [task, score] : scores) {
    if (task == *best_name) continue;
    if (score > runner_up) runner_up = score;
  }
  out.tie = runner_up == best;
  out.margin = std::isinf(runner_up) ? std::numeric_limits<double>::infinity() : best - runner_up;
  return out;
}

TaskScoreReport classify(const TaskModelRegistry& registry, const SymbolSequence& seq,
                         std::optional<double> margin_threshold) {
  TaskScoreReport report;
  report.scores = score_all(registry, seq);
  const Decision d = decide(report.scores);
  report.winner = d.winner;
  report.margin = d.margin;
  report.tie = d.tie;
  if (margin_threshold) {
    report.threshold = margin_threshold;
    report.above_threshold = d.margin >= *margin_threshold;
  }
  return report;
}

}  // namespace cursor_hmm
