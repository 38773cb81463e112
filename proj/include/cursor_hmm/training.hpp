#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cursor_hmm/hmm.hpp"

namespace cursor_hmm {

struct TrainingConfig {
  int max_iters = 100;
  // Stop once (ll_new - ll_old) / |ll_old| drops below this.
  double ll_tolerance = 1e-6;
  // Re-estimated rows are clamped to at least this value, then renormalised.
  // Must satisfy 0 <= prob_floor < 1 / max(N, M).
  double prob_floor = 1e-6;
  // Keep model0's initial distribution instead of re-estimating it.
  bool freeze_pi = false;
};

struct TrainingTrace {
  // log_likelihoods[0] is the pooled log-likelihood of model0; entry k is the
  // value after k re-estimation steps.
  std::vector<double> log_likelihoods;
  int iterations_run = 0;
  bool converged = false;
};

struct TrainingResult {
  HmmModel model;
  TrainingTrace trace;
};

// A training sequence has zero probability under the current model.
class TrainingDegeneracy : public std::runtime_error {
 public:
  TrainingDegeneracy(std::size_t sequence_index, const std::string& what)
      : std::runtime_error(what), sequence_index_(sequence_index) {}
  std::size_t sequence_index() const { return sequence_index_; }

 private:
  std::size_t sequence_index_;
};

/// Pooled expected counts over a set of sequences.
struct ExpectedCounts {
  std::vector<double> initial;  // sum over sequences of gamma_0(i)
  Matrix transitions;           // sum of xi_t(i, j)
  Matrix emissions;             // sum of gamma_t(j) where O_t = k
  double log_likelihood = 0.0;

  ExpectedCounts(std::size_t n_states, std::size_t n_symbols)
      : initial(n_states, 0.0),
        transitions(n_states, n_states),
        emissions(n_states, n_symbols) {}
};

/// E-step: accumulates expected counts sequence by sequence in input order.
/// Throws TrainingDegeneracy naming the first impossible sequence.
ExpectedCounts expected_counts(const HmmModel& model, const std::vector<SymbolSequence>& sequences);

/// M-step: ratio-of-sums re-estimation from pooled counts.
HmmModel reestimate(const HmmModel& model, const ExpectedCounts& counts,
                    const TrainingConfig& config);

/// Multi-sequence Baum-Welch. Returns model0 unchanged when max_iters == 0.
TrainingResult baum_welch(const HmmModel& model0, const std::vector<SymbolSequence>& sequences,
                          const TrainingConfig& config = {});

}  // namespace cursor_hmm
