#include "cursor_hmm/hmm.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace cursor_hmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void check_probability_row(std::span<const double> row, const std::string& where,
                           std::vector<Violation>& out) {
  double sum = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double v = row[k];
    if (!(v >= 0.0 && v <= 1.0)) {
      std::ostringstream msg;
      msg << "entry " << v << " outside [0, 1]";
      out.push_back({where + "[" + std::to_string(k) + "]", msg.str()});
    }
    sum += v;
  }
  if (!(std::abs(sum - 1.0) <= kStochasticTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "row sums to " << sum << ", expected 1";
    out.push_back({where, msg.str()});
  }
}

// Draws an index from a probability row by inverse CDF. Uses 53 random bits so
// results do not depend on the standard library's distribution classes.
std::size_t draw(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    cumulative += probs[k];
    last_positive = k;
    if (u < cumulative) return k;
  }
  return last_positive;
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw std::invalid_argument("ragged matrix rows");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<Violation> validate(const HmmModel& model) {
  std::vector<Violation> out;
  const std::size_t n = model.n_states();
  if (n == 0) out.push_back({"pi", "model has no states"});
  if (model.a.rows() != n || model.a.cols() != n) {
    out.push_back({"a", "transition matrix must be " + std::to_string(n) + "x" +
                            std::to_string(n)});
  }
  if (model.b.rows() != n) {
    out.push_back({"b", "emission matrix must have " + std::to_string(n) + " rows"});
  }
  if (model.b.cols() == 0) out.push_back({"b", "alphabet is empty"});
  if (model.symbol_names.size() != model.b.cols()) {
    out.push_back({"symbol_names", "expected " + std::to_string(model.b.cols()) + " names, got " +
                                       std::to_string(model.symbol_names.size())});
  }
  if (!model.state_names.empty() && model.state_names.size() != n) {
    out.push_back({"state_names", "expected " + std::to_string(n) + " names, got " +
                                      std::to_string(model.state_names.size())});
  }
  std::set<std::string> seen;
  for (const auto& name : model.symbol_names) {
    if (!seen.insert(name).second) out.push_back({"symbol_names", "duplicate symbol '" + name + "'"});
  }
  if (!out.empty()) return out;  // shape errors make the entry checks meaningless

  check_probability_row(model.pi, "pi", out);
  for (std::size_t i = 0; i < n; ++i) {
    check_probability_row(model.a.row(i), "a[" + std::to_string(i) + "]", out);
  }
  for (std::size_t i = 0; i < n; ++i) {
    check_probability_row(model.b.row(i), "b[" + std::to_string(i) + "]", out);
  }
  return out;
}

void require_valid(const HmmModel& model) {
  const auto violations = validate(model);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid model:";
  for (const auto& v : violations) msg << "\n  " << v.where << ": " << v.message;
  throw std::invalid_argument(msg.str());
}

void check_alphabet(const HmmModel& model, const SymbolSequence& seq) {
  if (seq.symbols.empty()) throw std::invalid_argument("observation sequence is empty");
  if (!seq.meta.alphabet.empty() && seq.meta.alphabet != model.symbol_names) {
    throw AlphabetMismatch("sequence was encoded against a different alphabet");
  }
  const std::size_t m = model.n_symbols();
  for (std::size_t t = 0; t < seq.symbols.size(); ++t) {
    if (seq.symbols[t] >= m) {
      throw AlphabetMismatch("symbol index " + std::to_string(seq.symbols[t]) + " at t=" +
                             std::to_string(t) + " exceeds alphabet size " + std::to_string(m));
    }
  }
}

ForwardResult forward(const HmmModel& model, const SymbolSequence& seq) {
  check_alphabet(model, seq);
  const std::size_t n = model.n_states();
  const std::size_t len = seq.size();

  ForwardResult out;
  out.alpha = Matrix(len, n);
  out.scale.assign(len, 0.0);
  out.log_likelihood = 0.0;

  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t o = seq.symbols[t];
    auto cur = out.alpha.row(t);
    double c = 0.0;
    if (t == 0) {
      for (std::size_t i = 0; i < n; ++i) {
        cur[i] = model.pi[i] * model.b(i, o);
        c += cur[i];
      }
    } else {
      auto prev = out.alpha.row(t - 1);
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += prev[i] * model.a(i, j);
        cur[j] = acc * model.b(j, o);
        c += cur[j];
      }
    }
    if (!(c > 0.0)) {
      for (std::size_t i = 0; i < n; ++i) cur[i] = 0.0;
      out.log_likelihood = kNegInf;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) cur[i] /= c;
    out.scale[t] = c;
    out.log_likelihood += std::log(c);
  }
  return out;
}

Matrix backward(const HmmModel& model, const SymbolSequence& seq) {
  return backward(model, seq, forward(model, seq));
}

Matrix backward(const HmmModel& model, const SymbolSequence& seq, const ForwardResult& fwd) {
  check_alphabet(model, seq);
  if (std::isinf(fwd.log_likelihood)) {
    throw DegeneratePosterior("sequence has zero probability under the model");
  }
  const std::size_t n = model.n_states();
  const std::size_t len = seq.size();
  Matrix beta(len, n, 1.0);
  for (std::size_t t = len - 1; t-- > 0;) {
    const std::size_t o = seq.symbols[t + 1];
    const double c = fwd.scale[t + 1];
    auto next = beta.row(t + 1);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += model.a(i, j) * model.b(j, o) * next[j];
      beta(t, i) = acc / c;
    }
  }
  return beta;
}

double log_likelihood(const HmmModel& model, const SymbolSequence& seq) {
  return forward(model, seq).log_likelihood;
}

Posteriors posteriors(const HmmModel& model, const SymbolSequence& seq) {
  const ForwardResult fwd = forward(model, seq);
  if (std::isinf(fwd.log_likelihood)) {
    throw DegeneratePosterior("posteriors undefined: sequence has zero probability under the model");
  }
  const Matrix beta = backward(model, seq, fwd);
  const std::size_t n = model.n_states();
  const std::size_t len = seq.size();

  Posteriors out;
  out.gamma = Matrix(len, n);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < n; ++i) out.gamma(t, i) = fwd.alpha(t, i) * beta(t, i);
  }
  out.xi.reserve(len > 0 ? len - 1 : 0);
  for (std::size_t t = 0; t + 1 < len; ++t) {
    const std::size_t o = seq.symbols[t + 1];
    const double c = fwd.scale[t + 1];
    Matrix slice(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        slice(i, j) = fwd.alpha(t, i) * model.a(i, j) * model.b(j, o) * beta(t + 1, j) / c;
      }
    }
    out.xi.push_back(std::move(slice));
  }
  return out;
}

StatePath viterbi(const HmmModel& model, const SymbolSequence& seq) {
  check_alphabet(model, seq);
  const std::size_t n = model.n_states();
  const std::size_t len = seq.size();

  std::vector<double> delta(n);
  std::vector<double> next(n);
  std::vector<std::size_t> backptr(len * n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    delta[i] = safe_log(model.pi[i]) + safe_log(model.b(i, seq.symbols[0]));
  }
  for (std::size_t t = 1; t < len; ++t) {
    const std::size_t o = seq.symbols[t];
    for (std::size_t j = 0; j < n; ++j) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double cand = delta[i] + safe_log(model.a(i, j));
        if (cand > best) {  // strict: lower index keeps ties
          best = cand;
          arg = i;
        }
      }
      next[j] = best + safe_log(model.b(j, o));
      backptr[t * n + j] = arg;
    }
    delta.swap(next);
  }

  StatePath path;
  path.states.assign(len, 0);
  double best = kNegInf;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (delta[i] > best) {
      best = delta[i];
      arg = i;
    }
  }
  path.log_prob = best;
  if (std::isinf(best)) {
    path.feasible = false;
    return path;
  }
  path.states[len - 1] = arg;
  for (std::size_t t = len - 1; t > 0; --t) {
    path.states[t - 1] = backptr[t * n + path.states[t]];
  }
  return path;
}

Sample sample(const HmmModel& model, std::size_t length, std::uint64_t seed) {
  require_valid(model);
  if (length == 0) throw std::invalid_argument("sample length must be at least 1");
  std::mt19937_64 rng(seed);
  Sample out;
  out.path.states.resize(length);
  out.sequence.symbols.resize(length);
  out.sequence.meta.alphabet = model.symbol_names;

  std::size_t state = draw(model.pi, rng);
  double log_prob = safe_log(model.pi[state]);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) {
      const std::size_t prev = state;
      state = draw(model.a.row(prev), rng);
      log_prob += safe_log(model.a(prev, state));
    }
    const std::size_t symbol = draw(model.b.row(state), rng);
    log_prob += safe_log(model.b(state, symbol));
    out.path.states[t] = state;
    out.sequence.symbols[t] = symbol;
  }
  out.path.log_prob = log_prob;
  return out;
}

}  // namespace cursor_hmm
