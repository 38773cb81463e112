#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cursor_hmm {

// Dense row-major matrix of doubles. Only what the recursions need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Discrete HMM lambda = (pi, A, B).
//   a(i, j) = P(q_t = j | q_{t-1} = i)
//   b(j, k) = P(symbol k | q_t = j)
struct HmmModel {
  std::vector<double> pi;
  Matrix a;
  Matrix b;
  std::vector<std::string> symbol_names;
  std::vector<std::string> state_names;  // empty or one per state

  std::size_t n_states() const { return pi.size(); }
  std::size_t n_symbols() const { return b.cols(); }

  bool operator==(const HmmModel&) const = default;
};

struct SequenceMeta {
  std::string source;
  std::optional<double> ds_ms;
  // When non-empty, the alphabet the indices were produced against.
  std::vector<std::string> alphabet;

  bool operator==(const SequenceMeta&) const = default;
};

struct SymbolSequence {
  std::vector<std::size_t> symbols;
  SequenceMeta meta;

  std::size_t size() const { return symbols.size(); }
  bool operator==(const SymbolSequence&) const = default;
};

struct StatePath {
  std::vector<std::size_t> states;
  double log_prob = 0.0;
  // False when every path has zero probability; log_prob is then -inf.
  bool feasible = true;
};

// Thrown when a sequence uses symbols the model's alphabet does not have.
class AlphabetMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when posterior quantities are requested for a sequence the model
// assigns zero probability.
class DegeneratePosterior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Violation {
  std::string where;    // e.g. "a[1]" or "b[0][3]"
  std::string message;
};

inline constexpr double kStochasticTolerance = 1e-9;

/// Lists every broken model invariant. An empty result means the model is valid.
std::vector<Violation> validate(const HmmModel& model);

/// Throws std::invalid_argument with all violations when the model is invalid.
void require_valid(const HmmModel& model);

// Scaled forward pass. alpha is T x N, time-major, each row normalised to 1;
// scale[t] is the normaliser c_t so that P(O | lambda) = prod_t c_t.
// For an impossible sequence the rows from the failing step onward are zero,
// their scale factors are 0 and log_likelihood is -inf.
struct ForwardResult {
  Matrix alpha;
  std::vector<double> scale;
  double log_likelihood = 0.0;
};

ForwardResult forward(const HmmModel& model, const SymbolSequence& seq);

// Backward pass sharing the forward scale factors: beta(T-1, i) = 1 and
// sum_i alpha(t, i) * beta(t, i) = 1 for every t.
// Throws DegeneratePosterior for an impossible sequence.
Matrix backward(const HmmModel& model, const SymbolSequence& seq);
Matrix backward(const HmmModel& model, const SymbolSequence& seq, const ForwardResult& fwd);

/// Natural-log P(O | lambda); -inf when the sequence is impossible.
double log_likelihood(const HmmModel& model, const SymbolSequence& seq);

struct Posteriors {
  Matrix gamma;             // T x N, P(q_t = i | O)
  std::vector<Matrix> xi;   // T-1 slices of N x N, P(q_t = i, q_{t+1} = j | O)
};

Posteriors posteriors(const HmmModel& model, const SymbolSequence& seq);

/// Most probable state path, computed in log space. Ties go to the lower
/// state index.
StatePath viterbi(const HmmModel& model, const SymbolSequence& seq);

struct Sample {
  StatePath path;
  SymbolSequence sequence;
};

/// Draws a length-T state path and emission sequence. Output depends only on
/// the model, length and seed.
Sample sample(const HmmModel& model, std::size_t length, std::uint64_t seed);

// Throws AlphabetMismatch unless the sequence is non-empty and every symbol is
// below the model's alphabet size (and any recorded alphabet matches).
void check_alphabet(const HmmModel& model, const SymbolSequence& seq);

}  // namespace cursor_hmm
