// cursor-hmm: mouse-trace vectorisation, HMM training and task classification.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cursor_hmm/aoi.hpp"
#include "cursor_hmm/classifier.hpp"
#include "cursor_hmm/hmm.hpp"
#include "cursor_hmm/model_io.hpp"
#include "cursor_hmm/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cursor_hmm;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int precision = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

struct VectorizeArgs {
  std::string trace, layout, out;
  double ds = kDefaultDsMs;
};

int cmd_vectorize(const VectorizeArgs& args) {
  const CursorTrace trace = io::load_trace(args.trace);
  const AoiLayout layout = io::load_layout(args.layout);
  SymbolSequence seq = vectorize(trace, layout, args.ds);
  seq.meta.source = fs::path(args.trace).filename().string();
  const auto alphabet = layout.alphabet();
  io::save_sequence(seq, alphabet, args.out);

  std::vector<std::size_t> counts(alphabet.size(), 0);
  for (std::size_t s : seq.symbols) ++counts[s];
  std::cout << "T=" << seq.size() << " ds_ms=" << io::format_decimal(args.ds) << '\n';
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    std::cout << std::left << std::setw(8) << alphabet[k] << std::right << std::setw(10) << counts[k]
              << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string init, data, out;
  bool freeze_pi = false;
  int max_iters = TrainingConfig{}.max_iters;
  double tol = TrainingConfig{}.ll_tolerance;
  double floor = TrainingConfig{}.prob_floor;
};

int cmd_train(const TrainArgs& args) {
  const io::ModelFile init = io::read_model_file(args.init);
  const auto files = io::sequence_files(args.data);
  if (files.empty()) throw std::runtime_error("no .seq files in " + args.data);

  std::vector<SymbolSequence> sequences;
  for (const auto& f : files) {
    SymbolSequence seq = io::load_sequence(f, init.model.symbol_names);
    if (seq.meta.source.empty()) seq.meta.source = f.filename().string();
    sequences.push_back(std::move(seq));
  }

  TrainingConfig config;
  config.max_iters = args.max_iters;
  config.ll_tolerance = args.tol;
  config.prob_floor = args.floor;
  config.freeze_pi = args.freeze_pi;
  const TrainingResult result = baum_welch(init.model, sequences, config);

  io::ModelFile trained;
  trained.model = result.model;
  trained.description = "Baum-Welch estimate from " + fs::path(args.init).filename().string() +
                        " on " + std::to_string(sequences.size()) + " sequences in " + args.data;
  trained.provenance = init.provenance;
  io::write_model_file(trained, args.out);

  nlohmann::json trace;
  trace["log_base"] = "e";
  trace["log_likelihoods"] = nlohmann::json::array();
  for (double ll : result.trace.log_likelihoods) trace["log_likelihoods"].push_back(io::encode_number(ll));
  trace["iterations_run"] = result.trace.iterations_run;
  trace["converged"] = result.trace.converged;
  trace["freeze_pi"] = config.freeze_pi;
  trace["sequences"] = nlohmann::json::array();
  for (const auto& f : files) trace["sequences"].push_back(f.filename().string());
  const std::string trace_path = args.out + ".trace.json";
  {
    std::ofstream sidecar(trace_path);
    if (!sidecar) throw std::runtime_error("cannot write " + trace_path);
    sidecar << trace.dump(2) << '\n';
  }

  const auto& lls = result.trace.log_likelihoods;
  std::cout << "sequences: " << sequences.size() << '\n'
            << "iterations: " << result.trace.iterations_run
            << (result.trace.converged ? " (converged)" : "") << '\n'
            << "log-likelihood: " << fixed(lls.front()) << " -> " << fixed(lls.back()) << '\n'
            << "model: " << args.out << '\n'
            << "trace: " << trace_path << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string models, seq;
  bool json = false;
  std::optional<double> threshold;
};

int cmd_classify(const ClassifyArgs& args) {
  const TaskModelRegistry registry = io::load_registry(args.models);
  const SymbolSequence seq = io::load_sequence(args.seq, registry.alphabet());
  const TaskScoreReport report = classify(registry, seq, args.threshold);
  if (args.json) {
    std::cout << io::report_to_json(report).dump(2) << '\n';
  } else {
    std::cout << "T=" << seq.size() << '\n' << io::report_table(report);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string model, out;
  std::size_t length = 0;
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& args) {
  const HmmModel model = io::load_model(args.model);
  Sample s = sample(model, args.length, args.seed);
  s.sequence.meta.source = "sample of " + fs::path(args.model).filename().string() + " seed " +
                           std::to_string(args.seed);
  io::save_sequence(s.sequence, model.symbol_names, args.out);
  std::cout << "T=" << s.sequence.size() << " seed=" << args.seed << '\n'
            << "log-likelihood: " << fixed(log_likelihood(model, s.sequence)) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string seq, aggregate, layout;
  bool json = false;
};

void print_rates(const std::vector<std::string>& alphabet,
                 const std::map<std::string, std::vector<double>>& rows, bool json) {
  if (json) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [group, pct] : rows) {
      nlohmann::json entry = nlohmann::json::object();
      for (std::size_t k = 0; k < alphabet.size(); ++k) entry[alphabet[k]] = pct[k];
      doc[group] = std::move(entry);
    }
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::size_t width = 5;
  for (const auto& [group, pct] : rows) width = std::max(width, group.size());
  std::cout << std::left << std::setw(static_cast<int>(width)) << "" << std::right;
  for (const auto& name : alphabet) std::cout << std::setw(10) << name;
  std::cout << std::setw(10) << "sum" << '\n';
  for (const auto& [group, pct] : rows) {
    std::cout << std::left << std::setw(static_cast<int>(width)) << group << std::right;
    double sum = 0.0;
    for (double p : pct) {
      std::cout << std::setw(10) << fixed(p);
      sum += p;
    }
    std::cout << std::setw(10) << fixed(sum) << '\n';
  }
}

std::vector<double> mean_rates(const std::vector<fs::path>& files, const AoiLayout& layout) {
  std::vector<double> mean(layout.alphabet_size(), 0.0);
  for (const auto& f : files) {
    const auto pct = fixation_report(io::load_sequence(f, layout.alphabet()), layout);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += pct[k];
  }
  for (double& v : mean) v /= static_cast<double>(files.size());
  return mean;
}

int cmd_report(const ReportArgs& args) {
  const AoiLayout layout = io::load_layout(args.layout);
  const auto alphabet = layout.alphabet();
  std::map<std::string, std::vector<double>> rows;

  if (!args.seq.empty()) {
    const SymbolSequence seq = io::load_sequence(args.seq, alphabet);
    rows.emplace(fs::path(args.seq).stem().string(), fixation_report(seq, layout));
    if (!args.json) std::cout << "T=" << seq.size() << '\n';
  } else {
    // Either a directory of .seq files (one group) or a directory of task
    // subdirectories, each holding .seq files.
    const fs::path dir(args.aggregate);
    if (!fs::is_directory(dir)) throw std::runtime_error(args.aggregate + " is not a directory");
    const auto direct = io::sequence_files(dir);
    if (!direct.empty()) {
      rows.emplace(fs::absolute(dir).filename().string(), mean_rates(direct, layout));
    } else {
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        const auto files = io::sequence_files(entry.path());
        if (!files.empty()) rows.emplace(entry.path().filename().string(), mean_rates(files, layout));
      }
    }
    if (rows.empty()) throw std::runtime_error("no .seq files found under " + args.aggregate);
  }
  print_rates(alphabet, rows, args.json);
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_verify_table2() {
  const io::Table2 table = io::load_table2();
  if (table.rows.empty()) throw std::runtime_error("table2 fixture has no rows");

  std::cout << std::left << std::setw(5) << "id" << std::right << std::setw(12) << "HMM1"
            << std::setw(12) << "HMM2" << std::setw(10) << "printed" << std::setw(10) << "decided"
            << std::setw(12) << "margin" << std::setw(7) << "match" << '\n';
  std::size_t matched = 0;
  std::vector<std::string> failures;
  std::vector<std::string> notes;
  for (const auto& row : table.rows) {
    const Decision d = decide({{table.hmm1_task, row.hmm1}, {table.hmm2_task, row.hmm2}});
    const bool ok = d.winner == row.decision && !d.tie;
    if (ok) {
      ++matched;
    } else {
      failures.push_back(row.id);
    }
    std::cout << std::left << std::setw(5) << row.id << std::right << std::setw(12)
              << fixed(row.hmm1, 1) << std::setw(12) << fixed(row.hmm2, 1) << std::setw(10)
              << row.decision << std::setw(10) << d.winner << std::setw(12) << fixed(d.margin, 1)
              << std::setw(7) << (ok ? "PASS" : "FAIL") << '\n';
    if (row.quoted_margin && std::abs(*row.quoted_margin - d.margin) > 0.05) {
      notes.push_back(row.id + ": quoted margin " + fixed(*row.quoted_margin, 1) +
                      " differs from the row's own scores (" + fixed(d.margin, 1) + ")");
    }
  }
  for (const auto& n : notes) std::cout << "note: " << n << '\n';
  std::cout << matched << "/" << table.rows.size() << " decisions reproduced\n";
  for (const auto& id : failures) std::cerr << "mismatch in row " << id << '\n';
  return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Area-of-interest HMM toolkit for mouse-cursor traces"};
  app.require_subcommand(1);

  VectorizeArgs vec;
  auto* vectorize_cmd = app.add_subcommand("vectorize", "Convert a cursor trace into an AOI symbol sequence");
  vectorize_cmd->add_option("--trace", vec.trace, "Trace CSV (t_ms,x,y)")->required();
  vectorize_cmd->add_option("--layout", vec.layout, "AOI layout JSON")->required();
  vectorize_cmd->add_option("--ds", vec.ds, "Sampling interval in milliseconds")->capture_default_str();
  vectorize_cmd->add_option("--out", vec.out, "Output sequence file")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Baum-Welch training on a directory of sequences");
  train_cmd->add_option("--init", train.init, "Initial model JSON")->required();
  train_cmd->add_option("--data", train.data, "Directory of .seq files")->required();
  train_cmd->add_option("--out", train.out, "Output model JSON")->required();
  train_cmd->add_flag("--freeze-pi", train.freeze_pi, "Keep the initial state distribution fixed");
  train_cmd->add_option("--max-iters", train.max_iters, "Maximum EM iterations")->capture_default_str();
  train_cmd->add_option("--tol", train.tol, "Relative log-likelihood tolerance")->capture_default_str();
  train_cmd->add_option("--floor", train.floor, "Probability floor for re-estimated rows")
      ->capture_default_str();

  ClassifyArgs cls;
  auto* classify_cmd = app.add_subcommand("classify", "Score a sequence under every task model");
  classify_cmd->add_option("--models", cls.models, "Directory of task model JSON files")->required();
  classify_cmd->add_option("--seq", cls.seq, "Sequence file")->required();
  classify_cmd->add_flag("--json", cls.json, "Emit the report as JSON");
  classify_cmd->add_option("--threshold", cls.threshold, "Flag whether the margin reaches this value");

  SampleArgs smp;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a synthetic sequence from a model");
  sample_cmd->add_option("--model", smp.model, "Model JSON")->required();
  sample_cmd->add_option("--length", smp.length, "Sequence length")->required();
  sample_cmd->add_option("--seed", smp.seed, "Random seed")->required();
  sample_cmd->add_option("--out", smp.out, "Output sequence file")->required();

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Fixation percentage per AOI");
  auto* seq_opt = report_cmd->add_option("--seq", rep.seq, "Sequence file");
  auto* agg_opt = report_cmd->add_option("--aggregate", rep.aggregate,
                                         "Directory of sequences, or of per-task subdirectories");
  seq_opt->excludes(agg_opt);
  report_cmd->add_option("--layout", rep.layout, "AOI layout JSON")->required();
  report_cmd->add_flag("--json", rep.json, "Emit JSON");

  auto* verify_cmd = app.add_subcommand("verify-table2", "Recompute the Table II decisions from their stored scores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*report_cmd && rep.seq.empty() && rep.aggregate.empty()) {
      throw UsageError("report needs --seq or --aggregate");
    }
    if (*vectorize_cmd) return cmd_vectorize(vec);
    if (*train_cmd) return cmd_train(train);
    if (*classify_cmd) return cmd_classify(cls);
    if (*sample_cmd) return cmd_sample(smp);
    if (*report_cmd) return cmd_report(rep);
    if (*verify_cmd) return cmd_verify_table2();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const io::EmptyInput& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
