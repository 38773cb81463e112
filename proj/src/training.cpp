#include "cursor_hmm/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cursor_hmm {

namespace {

void check_config(const TrainingConfig& config, std::size_t n, std::size_t m) {
  if (config.max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(config.ll_tolerance >= 0.0)) throw std::invalid_argument("ll_tolerance must be >= 0");
  const double bound = 1.0 / static_cast<double>(std::max(n, m));
  if (!(config.prob_floor >= 0.0 && config.prob_floor < bound)) {
    throw std::invalid_argument("prob_floor must lie in [0, 1/max(N, M))");
  }
}

// Normalises counts into a probability row. A row with no mass keeps the
// previous parameters, since nothing in the data informs it.
void normalise_row(std::span<const double> counts, std::span<const double> previous,
                   double floor, std::span<double> out) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total > 0.0) {
    for (std::size_t k = 0; k < counts.size(); ++k) out[k] = counts[k] / total;
  } else {
    std::copy(previous.begin(), previous.end(), out.begin());
  }
  if (floor > 0.0) {
    for (double& v : out) v = std::max(v, floor);
  }
  double sum = 0.0;
  for (double v : out) sum += v;
  for (double& v : out) v /= sum;
}

}  // namespace

ExpectedCounts expected_counts(const HmmModel& model, const std::vector<SymbolSequence>& sequences) {
  const std::size_t n = model.n_states();
  ExpectedCounts counts(n, model.n_symbols());

  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const SymbolSequence& seq = sequences[s];
    const ForwardResult fwd = forward(model, seq);
    if (std::isinf(fwd.log_likelihood)) {
      std::string name = "sequence #" + std::to_string(s);
      if (!seq.meta.source.empty()) name += " (" + seq.meta.source + ")";
      throw TrainingDegeneracy(s, name + " has zero probability under the current model");
    }
    const Matrix beta = backward(model, seq, fwd);
    counts.log_likelihood += fwd.log_likelihood;

    const std::size_t len = seq.size();
    for (std::size_t i = 0; i < n; ++i) counts.initial[i] += fwd.alpha(0, i) * beta(0, i);
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t o = seq.symbols[t];
      for (std::size_t i = 0; i < n; ++i) {
        counts.emissions(i, o) += fwd.alpha(t, i) * beta(t, i);
      }
      if (t + 1 == len) continue;
      const std::size_t next = seq.symbols[t + 1];
      const double c = fwd.scale[t + 1];
      for (std::size_t i = 0; i < n; ++i) {
        const double lead = fwd.alpha(t, i) / c;
        for (std::size_t j = 0; j < n; ++j) {
          counts.transitions(i, j) += lead * model.a(i, j) * model.b(j, next) * beta(t + 1, j);
        }
      }
    }
  }
  return counts;
}

HmmModel reestimate(const HmmModel& model, const ExpectedCounts& counts,
                    const TrainingConfig& config) {
  HmmModel out = model;
  const std::size_t n = model.n_states();
  if (!config.freeze_pi) {
    normalise_row(counts.initial, model.pi, config.prob_floor, out.pi);
  }
  for (std::size_t i = 0; i < n; ++i) {
    normalise_row(counts.transitions.row(i), model.a.row(i), config.prob_floor, out.a.row(i));
    normalise_row(counts.emissions.row(i), model.b.row(i), config.prob_floor, out.b.row(i));
  }
  return out;
}

TrainingResult baum_welch(const HmmModel& model0, const std::vector<SymbolSequence>& sequences,
                          const TrainingConfig& config) {
  require_valid(model0);
  check_config(config, model0.n_states(), model0.n_symbols());
  if (sequences.empty()) throw std::invalid_argument("baum_welch needs at least one sequence");
  for (const auto& seq : sequences) check_alphabet(model0, seq);

  TrainingResult result{model0, {}};
  TrainingTrace& trace = result.trace;

  ExpectedCounts counts = expected_counts(model0, sequences);
  trace.log_likelihoods.push_back(counts.log_likelihood);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    HmmModel next = reestimate(result.model, counts, config);
    const double previous_ll = counts.log_likelihood;
    counts = expected_counts(next, sequences);
    result.model = std::move(next);
    trace.log_likelihoods.push_back(counts.log_likelihood);
    trace.iterations_run = iter + 1;

    const double improvement = counts.log_likelihood - previous_ll;
    const double scale = std::abs(previous_ll);
    if (improvement <= config.ll_tolerance * scale) {
      trace.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace cursor_hmm
