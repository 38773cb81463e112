#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cursor_hmm/aoi.hpp"
#include "cursor_hmm/classifier.hpp"
#include "cursor_hmm/hmm.hpp"
#include "json.hpp"

namespace cursor_hmm::io {

inline constexpr int kFormatVersion = 1;

// Malformed input, unsupported version, or a model that fails validation.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file carries no data at all (e.g. a trace with only a header).
class EmptyInput : public FormatError {
 public:
  using FormatError::FormatError;
};

// ---------------------------------------------------------------------------
// Models
//
// {
//   "format_version": 1,
//   "log_base": "e",
//   "description": "...", "provenance": "...",
//   "n_states": N, "n_symbols": M,
//   "symbol_names": [...], "state_names": [...],
//   "pi": ["1", "0"], "a": [["0.5", "0.5"], ...], "b": [[...], ...],
//   "row_sum_tolerance": "0.0005"          (optional)
// }
//
// Probabilities are decimal strings. When row_sum_tolerance is present, rows
// whose sum is off by more than 1e-9 but within the tolerance are
// renormalised on load and a note is recorded; anything further off fails
// validation.
// ---------------------------------------------------------------------------

struct ModelFile {
  HmmModel model;
  std::string description;
  std::string provenance;
  std::optional<std::string> row_sum_tolerance;
  // Filled on load: one entry per renormalised row.
  std::vector<std::string> load_notes;
};

ModelFile parse_model(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelFile& file);

ModelFile read_model_file(const std::filesystem::path& path);
void write_model_file(const ModelFile& file, const std::filesystem::path& path);

HmmModel load_model(const std::filesystem::path& path);
void save_model(const HmmModel& model, const std::filesystem::path& path);

// Loads every *.json file in a directory; the file stem is the task name.
TaskModelRegistry load_registry(const std::filesystem::path& dir);

// Shortest decimal text that parses back to the same double.
std::string format_decimal(double value);
double parse_decimal(std::string_view text);

// ---------------------------------------------------------------------------
// Layouts: {"catch_all": "R", "regions": [{"name", "x", "y", "w", "h"}, ...]}
// ---------------------------------------------------------------------------

AoiLayout parse_layout(const nlohmann::json& doc);
nlohmann::json layout_to_json(const AoiLayout& layout);
AoiLayout load_layout(const std::filesystem::path& path);
void save_layout(const AoiLayout& layout, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Traces: CSV with header "t_ms,x,y", one sample per row.
// ---------------------------------------------------------------------------

CursorTrace parse_trace(std::istream& in);
void write_trace(const CursorTrace& trace, std::ostream& out);
CursorTrace load_trace(const std::filesystem::path& path);
void save_trace(const CursorTrace& trace, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sequences: whitespace-separated symbol names. Lines starting with '#' hold
// "key=value" metadata (source, ds_ms).
// ---------------------------------------------------------------------------

SymbolSequence parse_sequence(std::istream& in, const std::vector<std::string>& alphabet);
void write_sequence(const SymbolSequence& seq, const std::vector<std::string>& alphabet,
                    std::ostream& out);
SymbolSequence load_sequence(const std::filesystem::path& path,
                             const std::vector<std::string>& alphabet);
void save_sequence(const SymbolSequence& seq, const std::vector<std::string>& alphabet,
                   const std::filesystem::path& path);

// Sorted *.seq files in a directory.
std::vector<std::filesystem::path> sequence_files(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Reports. -inf scores are encoded as the string "-inf", an infinite margin
// as "inf".
// ---------------------------------------------------------------------------

nlohmann::json report_to_json(const TaskScoreReport& report);
TaskScoreReport report_from_json(const nlohmann::json& doc);
std::string report_table(const TaskScoreReport& report, int precision = 4);

void save_report(const TaskScoreReport& report, const std::filesystem::path& path);
TaskScoreReport load_report(const std::filesystem::path& path);

nlohmann::json encode_number(double value);
double decode_number(const nlohmann::json& value);

// ---------------------------------------------------------------------------
// Bundled fixtures
// ---------------------------------------------------------------------------

// $CURSOR_HMM_FIXTURES when set, otherwise the directory shipped with the
// source tree.
std::filesystem::path fixture_dir();

// name is one of "initial_model", "lambda1", "lambda2".
ModelFile load_fixture_model(std::string_view name);

struct Table2Row {
  std::string id;
  std::string task_time;
  std::string declared_type;
  std::vector<std::string> fixation_pct;  // A..F, R as printed
  double hmm1 = 0.0;                      // model trained on REP
  double hmm2 = 0.0;                      // model trained on INT
  std::string decision;
  std::optional<double> quoted_margin;    // margin quoted in the discussion text
};

struct Table2 {
  std::string hmm1_task;
  std::string hmm2_task;
  std::vector<std::string> aoi_names;
  std::vector<Table2Row> rows;
  std::vector<std::string> notes;
};

Table2 load_table2();
Table2 load_table2(const std::filesystem::path& path);

}  // namespace cursor_hmm::io
