#include "cursor_hmm/model_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

#ifndef CURSOR_HMM_DEFAULT_FIXTURES
#define CURSOR_HMM_DEFAULT_FIXTURES "fixtures"
#endif

namespace cursor_hmm::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const json& doc, const fs::path& path) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  return doc.at(key);
}

std::string string_field(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double probability(const json& v, const std::string& where) {
  try {
    if (v.is_string()) return parse_decimal(v.get<std::string>());
    if (v.is_number()) return v.get<double>();
  } catch (const FormatError& e) {
    throw FormatError(where + ": " + e.what());
  }
  throw FormatError(where + ": expected a decimal string");
}

std::vector<double> probability_row(const json& v, std::size_t expected, const std::string& where) {
  if (!v.is_array() || v.size() != expected) {
    throw FormatError(where + ": expected an array of " + std::to_string(expected) + " values");
  }
  std::vector<double> row;
  row.reserve(expected);
  for (std::size_t k = 0; k < expected; ++k) {
    row.push_back(probability(v[k], where + "[" + std::to_string(k) + "]"));
  }
  return row;
}

std::vector<std::string> string_list(const json& v, const char* key) {
  if (!v.is_array()) throw FormatError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw FormatError(std::string("field '") + key + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

void check_version(const json& doc) {
  const json& v = field(doc, "format_version");
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
    throw FormatError("unsupported format_version " + v.dump() + " (expected " +
                      std::to_string(kFormatVersion) + ")");
  }
}

json decimal_row(std::span<const double> row) {
  json out = json::array();
  for (double v : row) out.push_back(format_decimal(v));
  return out;
}

// Renormalises a row whose sum is off by more than the strict tolerance but
// within the declared rounding tolerance.
void absorb_rounding(std::span<double> row, double tolerance, const std::string& where,
                     std::vector<std::string>& notes) {
  double sum = 0.0;
  for (double v : row) sum += v;
  const double off = std::abs(sum - 1.0);
  if (off <= kStochasticTolerance || off > tolerance) return;
  if (std::any_of(row.begin(), row.end(), [](double v) { return v < 0.0; })) return;
  for (double& v : row) v /= sum;
  notes.push_back(where + " renormalised from printed sum " + format_decimal(sum));
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string format_decimal(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

double parse_decimal(std::string_view text) {
  const std::string s = trim(text);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw FormatError("'" + s + "' is not a decimal number");
  }
  return value;
}

// ---------------------------------------------------------------------------
// Models

ModelFile parse_model(const json& doc) {
  check_version(doc);
  ModelFile file;
  if (doc.contains("description")) file.description = string_field(doc, "description");
  if (doc.contains("provenance")) file.provenance = string_field(doc, "provenance");
  if (doc.contains("log_base") && string_field(doc, "log_base") != "e") {
    throw FormatError("only natural-log models (log_base \"e\") are supported");
  }

  const json& n_json = field(doc, "n_states");
  const json& m_json = field(doc, "n_symbols");
  if (!n_json.is_number_unsigned() || !m_json.is_number_unsigned()) {
    throw FormatError("n_states and n_symbols must be positive integers");
  }
  const auto n = n_json.get<std::size_t>();
  const auto m = m_json.get<std::size_t>();
  if (n == 0 || m == 0) throw FormatError("n_states and n_symbols must be positive integers");

  HmmModel& model = file.model;
  model.symbol_names = string_list(field(doc, "symbol_names"), "symbol_names");
  if (doc.contains("state_names")) model.state_names = string_list(doc.at("state_names"), "state_names");
  model.pi = probability_row(field(doc, "pi"), n, "pi");

  const json& a = field(doc, "a");
  const json& b = field(doc, "b");
  if (!a.is_array() || a.size() != n) throw FormatError("a: expected " + std::to_string(n) + " rows");
  if (!b.is_array() || b.size() != n) throw FormatError("b: expected " + std::to_string(n) + " rows");
  model.a = Matrix(n, n);
  model.b = Matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto arow = probability_row(a[i], n, "a[" + std::to_string(i) + "]");
    const auto brow = probability_row(b[i], m, "b[" + std::to_string(i) + "]");
    std::copy(arow.begin(), arow.end(), model.a.row(i).begin());
    std::copy(brow.begin(), brow.end(), model.b.row(i).begin());
  }

  if (doc.contains("row_sum_tolerance")) {
    file.row_sum_tolerance = string_field(doc, "row_sum_tolerance");
    const double tol = parse_decimal(*file.row_sum_tolerance);
    absorb_rounding(model.pi, tol, "pi", file.load_notes);
    for (std::size_t i = 0; i < n; ++i) {
      absorb_rounding(model.a.row(i), tol, "a[" + std::to_string(i) + "]", file.load_notes);
    }
    for (std::size_t i = 0; i < n; ++i) {
      absorb_rounding(model.b.row(i), tol, "b[" + std::to_string(i) + "]", file.load_notes);
    }
  }

  const auto violations = validate(model);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "model failed validation:";
    for (const auto& v : violations) msg << "\n  " << v.where << ": " << v.message;
    throw FormatError(msg.str());
  }
  return file;
}

json model_to_json(const ModelFile& file) {
  const HmmModel& model = file.model;
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["log_base"] = "e";
  if (!file.description.empty()) doc["description"] = file.description;
  if (!file.provenance.empty()) doc["provenance"] = file.provenance;
  doc["n_states"] = model.n_states();
  doc["n_symbols"] = model.n_symbols();
  doc["symbol_names"] = model.symbol_names;
  if (!model.state_names.empty()) doc["state_names"] = model.state_names;
  doc["pi"] = decimal_row(model.pi);
  doc["a"] = json::array();
  doc["b"] = json::array();
  for (std::size_t i = 0; i < model.n_states(); ++i) {
    doc["a"].push_back(decimal_row(model.a.row(i)));
    doc["b"].push_back(decimal_row(model.b.row(i)));
  }
  if (file.row_sum_tolerance) doc["row_sum_tolerance"] = *file.row_sum_tolerance;
  return doc;
}

ModelFile read_model_file(const fs::path& path) {
  const json doc = read_json(path);
  try {
    return parse_model(doc);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_model_file(const ModelFile& file, const fs::path& path) {
  require_valid(file.model);
  write_json(model_to_json(file), path);
}

HmmModel load_model(const fs::path& path) { return read_model_file(path).model; }

void save_model(const HmmModel& model, const fs::path& path) {
  write_model_file(ModelFile{model, {}, {}, {}, {}}, path);
}

TaskModelRegistry load_registry(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError(dir.string() + " contains no model files");
  TaskModelRegistry registry;
  for (const auto& path : files) {
    try {
      registry.add(path.stem().string(), load_model(path));
    } catch (const AlphabetMismatch& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  return registry;
}

// ---------------------------------------------------------------------------
// Layouts

AoiLayout parse_layout(const json& doc) {
  std::string catch_all = "R";
  if (doc.contains("catch_all")) catch_all = string_field(doc, "catch_all");
  const json& regions_json = field(doc, "regions");
  if (!regions_json.is_array()) throw FormatError("'regions' must be an array");
  std::vector<Region> regions;
  for (const auto& r : regions_json) {
    const auto num = [&](const char* key) {
      const json& v = field(r, key);
      if (!v.is_number()) throw FormatError(std::string("region field '") + key + "' must be a number");
      return v.get<double>();
    };
    regions.push_back({string_field(r, "name"), num("x"), num("y"), num("w"), num("h")});
  }
  try {
    return AoiLayout(std::move(regions), catch_all);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

json layout_to_json(const AoiLayout& layout) {
  json doc;
  doc["catch_all"] = layout.catch_all_name();
  doc["regions"] = json::array();
  for (const auto& r : layout.regions()) {
    doc["regions"].push_back({{"name", r.name}, {"x", r.x}, {"y", r.y}, {"w", r.width}, {"h", r.height}});
  }
  return doc;
}

AoiLayout load_layout(const fs::path& path) {
  const json doc = read_json(path);
  try {
    return parse_layout(doc);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_layout(const AoiLayout& layout, const fs::path& path) {
  write_json(layout_to_json(layout), path);
}

// ---------------------------------------------------------------------------
// Traces

CursorTrace parse_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInput("trace file is empty");
  if (trim(line) != "t_ms,x,y") throw FormatError("trace header must be 't_ms,x,y'");

  std::vector<CursorSample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::array<double, 3> values{};
    std::size_t start = 0;
    for (std::size_t col = 0; col < 3; ++col) {
      const auto comma = line.find(',', start);
      const bool last = col == 2;
      if (last != (comma == std::string::npos)) {
        throw FormatError("trace line " + std::to_string(line_no) + ": expected 3 columns");
      }
      const auto field_text = std::string_view(line).substr(start, last ? std::string::npos : comma - start);
      try {
        values[col] = parse_decimal(field_text);
      } catch (const FormatError& e) {
        throw FormatError("trace line " + std::to_string(line_no) + ": " + e.what());
      }
      start = comma + 1;
    }
    samples.push_back({values[0], values[1], values[2]});
  }
  if (samples.empty()) throw EmptyInput("trace file has no samples");
  try {
    return CursorTrace(std::move(samples));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

void write_trace(const CursorTrace& trace, std::ostream& out) {
  out << "t_ms,x,y\n";
  for (const auto& s : trace.samples()) {
    out << format_decimal(s.t_ms) << ',' << format_decimal(s.x) << ',' << format_decimal(s.y) << '\n';
  }
}

CursorTrace load_trace(const fs::path& path) {
  auto in = open_in(path);
  try {
    return parse_trace(in);
  } catch (const EmptyInput& e) {
    throw EmptyInput(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_trace(const CursorTrace& trace, const fs::path& path) {
  auto out = open_out(path);
  write_trace(trace, out);
}

// ---------------------------------------------------------------------------
// Sequences

SymbolSequence parse_sequence(std::istream& in, const std::vector<std::string>& alphabet) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < alphabet.size(); ++k) index.emplace(alphabet[k], k);

  SymbolSequence seq;
  seq.meta.alphabet = alphabet;
  std::string line;
  while (std::getline(in, line)) {
    const std::string content = trim(line);
    if (content.empty()) continue;
    if (content.front() == '#') {
      const std::string kv = trim(std::string_view(content).substr(1));
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(std::string_view(kv).substr(0, eq));
      const std::string value = trim(std::string_view(kv).substr(eq + 1));
      if (key == "source") seq.meta.source = value;
      if (key == "ds_ms") seq.meta.ds_ms = parse_decimal(value);
      continue;
    }
    std::istringstream tokens(content);
    std::string tok;
    while (tokens >> tok) {
      const auto it = index.find(tok);
      if (it == index.end()) throw AlphabetMismatch("symbol '" + tok + "' is not in the alphabet");
      seq.symbols.push_back(it->second);
    }
  }
  if (seq.symbols.empty()) throw EmptyInput("sequence file holds no symbols");
  return seq;
}

void write_sequence(const SymbolSequence& seq, const std::vector<std::string>& alphabet,
                    std::ostream& out) {
  if (!seq.meta.source.empty()) out << "# source=" << seq.meta.source << '\n';
  if (seq.meta.ds_ms) out << "# ds_ms=" << format_decimal(*seq.meta.ds_ms) << '\n';
  constexpr std::size_t kPerLine = 40;
  for (std::size_t t = 0; t < seq.symbols.size(); ++t) {
    const std::size_t s = seq.symbols[t];
    if (s >= alphabet.size()) {
      throw AlphabetMismatch("symbol index " + std::to_string(s) + " exceeds alphabet size " +
                             std::to_string(alphabet.size()));
    }
    out << alphabet[s];
    out << ((t + 1) % kPerLine == 0 || t + 1 == seq.symbols.size() ? '\n' : ' ');
  }
}

SymbolSequence load_sequence(const fs::path& path, const std::vector<std::string>& alphabet) {
  auto in = open_in(path);
  try {
    return parse_sequence(in, alphabet);
  } catch (const EmptyInput& e) {
    throw EmptyInput(path.string() + ": " + e.what());
  } catch (const AlphabetMismatch& e) {
    throw AlphabetMismatch(path.string() + ": " + e.what());
  }
}

void save_sequence(const SymbolSequence& seq, const std::vector<std::string>& alphabet,
                   const fs::path& path) {
  auto out = open_out(path);
  write_sequence(seq, alphabet, out);
}

std::vector<fs::path> sequence_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".seq") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// Reports

json encode_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

double decode_number(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return parse_decimal(value.get<std::string>());
  throw FormatError("expected a number, \"inf\" or \"-inf\"");
}

json report_to_json(const TaskScoreReport& report) {
  json doc;
  doc["log_base"] = "e";
  json scores = json::object();
  for (const auto& [task, ll] : report.scores) scores[task] = encode_number(ll);
  doc["scores"] = std::move(scores);
  doc["winner"] = report.winner;
  doc["margin"] = encode_number(report.margin);
  doc["tie"] = report.tie;
  if (report.threshold) doc["threshold"] = encode_number(*report.threshold);
  if (report.above_threshold) doc["above_threshold"] = *report.above_threshold;
  return doc;
}

TaskScoreReport report_from_json(const json& doc) {
  TaskScoreReport report;
  const json& scores = field(doc, "scores");
  if (!scores.is_object()) throw FormatError("'scores' must be an object");
  for (const auto& [task, value] : scores.items()) report.scores.emplace(task, decode_number(value));
  report.winner = string_field(doc, "winner");
  report.margin = decode_number(field(doc, "margin"));
  const json& tie = field(doc, "tie");
  if (!tie.is_boolean()) throw FormatError("'tie' must be a boolean");
  report.tie = tie.get<bool>();
  if (doc.contains("threshold")) report.threshold = decode_number(doc.at("threshold"));
  if (doc.contains("above_threshold")) report.above_threshold = doc.at("above_threshold").get<bool>();
  return report;
}

std::string report_table(const TaskScoreReport& report, int precision) {
  const auto fmt = [precision](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
  };
  std::size_t name_width = std::string("task").size();
  std::size_t value_width = std::string("log-likelihood (ln)").size();
  for (const auto& [task, ll] : report.scores) {
    name_width = std::max(name_width, task.size());
    value_width = std::max(value_width, fmt(ll).size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "task" << "  " << std::right
      << std::setw(static_cast<int>(value_width)) << "log-likelihood (ln)" << '\n';
  for (const auto& [task, ll] : report.scores) {
    out << std::left << std::setw(static_cast<int>(name_width)) << task << "  " << std::right
        << std::setw(static_cast<int>(value_width)) << fmt(ll)
        << (task == report.winner ? "  *" : "") << '\n';
  }
  out << "winner: " << report.winner << '\n';
  out << "margin: " << fmt(report.margin) << '\n';
  out << "tie:    " << (report.tie ? "yes" : "no") << '\n';
  if (report.threshold && report.above_threshold) {
    out << "margin " << (*report.above_threshold ? ">=" : "<") << " threshold " << fmt(*report.threshold)
        << '\n';
  }
  return out.str();
}

void save_report(const TaskScoreReport& report, const fs::path& path) {
  write_json(report_to_json(report), path);
}

TaskScoreReport load_report(const fs::path& path) {
  const json doc = read_json(path);
  try {
    return report_from_json(doc);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Fixtures

fs::path fixture_dir() {
  if (const char* env = std::getenv("CURSOR_HMM_FIXTURES"); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return fs::path(CURSOR_HMM_DEFAULT_FIXTURES);
}

ModelFile load_fixture_model(std::string_view name) {
  if (name != "initial_model" && name != "lambda1" && name != "lambda2") {
    throw FormatError("unknown fixture model '" + std::string(name) + "'");
  }
  return read_model_file(fixture_dir() / (std::string(name) + ".json"));
}

Table2 load_table2() { return load_table2(fixture_dir() / "table2.json"); }

Table2 load_table2(const fs::path& path) {
  const json doc = read_json(path);
  try {
    check_version(doc);
    Table2 table;
    const json& tasks = field(doc, "models");
    table.hmm1_task = string_field(tasks, "hmm1");
    table.hmm2_task = string_field(tasks, "hmm2");
    table.aoi_names = string_list(field(doc, "aoi_names"), "aoi_names");
    if (doc.contains("notes")) table.notes = string_list(doc.at("notes"), "notes");
    for (const auto& r : field(doc, "rows")) {
      Table2Row row;
      row.id = string_field(r, "id");
      row.task_time = string_field(r, "task_time");
      row.declared_type = string_field(r, "declared_type");
      row.fixation_pct = string_list(field(r, "fixation_pct"), "fixation_pct");
      if (row.fixation_pct.size() != table.aoi_names.size()) {
        throw FormatError("row " + row.id + ": fixation_pct length does not match aoi_names");
      }
      row.hmm1 = parse_decimal(string_field(r, "hmm1"));
      row.hmm2 = parse_decimal(string_field(r, "hmm2"));
      row.decision = string_field(r, "decision");
      if (r.contains("quoted_margin")) row.quoted_margin = parse_decimal(string_field(r, "quoted_margin"));
      table.rows.push_back(std::move(row));
    }
    return table;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cursor_hmm::io
