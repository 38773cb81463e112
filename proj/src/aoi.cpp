#include "cursor_hmm/aoi.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace cursor_hmm {

AoiLayout::AoiLayout(std::vector<Region> regions, std::string catch_all_name)
    : regions_(std::move(regions)), catch_all_(std::move(catch_all_name)) {
  if (catch_all_.empty()) throw std::invalid_argument("catch-all name must not be empty");
  std::set<std::string> names{catch_all_};
  for (const auto& r : regions_) {
    if (r.name.empty()) throw std::invalid_argument("region name must not be empty");
    if (!names.insert(r.name).second) {
      throw std::invalid_argument("region name '" + r.name +
                                  "' is duplicated or clashes with the catch-all");
    }
    if (!(r.width > 0.0) || !(r.height > 0.0)) {
      throw std::invalid_argument("region '" + r.name + "' must have positive width and height");
    }
  }
}

std::vector<std::string> AoiLayout::alphabet() const {
  std::vector<std::string> out;
  out.reserve(alphabet_size());
  for (const auto& r : regions_) out.push_back(r.name);
  out.push_back(catch_all_);
  return out;
}

CursorTrace::CursorTrace(std::vector<CursorSample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw std::invalid_argument("cursor trace has no samples");
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].t_ms > samples_[i - 1].t_ms)) {
      throw std::invalid_argument("cursor trace timestamps must be strictly increasing (sample " +
                                  std::to_string(i) + ")");
    }
  }
}

std::size_t locate(const AoiLayout& layout, double x, double y) {
  const auto& regions = layout.regions();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].contains(x, y)) return i;
  }
  return layout.catch_all_index();
}

SymbolSequence vectorize(const CursorTrace& trace, const AoiLayout& layout, double ds_ms) {
  if (!(ds_ms > 0.0) || !std::isfinite(ds_ms)) {
    throw std::invalid_argument("ds must be a positive number of milliseconds");
  }
  const auto& samples = trace.samples();
  const double first = samples.front().t_ms;
  const double last = samples.back().t_ms;
  const auto ticks = static_cast<std::size_t>(std::floor((last - first) / ds_ms)) + 1;

  SymbolSequence seq;
  seq.symbols.reserve(ticks);
  seq.meta.ds_ms = ds_ms;
  seq.meta.alphabet = layout.alphabet();

  std::size_t cursor = 0;
  for (std::size_t k = 0; k < ticks; ++k) {
    const double tick = first + static_cast<double>(k) * ds_ms;
    while (cursor + 1 < samples.size() && samples[cursor + 1].t_ms <= tick) ++cursor;
    seq.symbols.push_back(locate(layout, samples[cursor].x, samples[cursor].y));
  }
  return seq;
}

std::vector<double> fixation_report(const SymbolSequence& seq, const AoiLayout& layout) {
  const std::size_t m = layout.alphabet_size();
  if (seq.symbols.empty()) throw std::invalid_argument("observation sequence is empty");
  if (!seq.meta.alphabet.empty() && seq.meta.alphabet != layout.alphabet()) {
    throw AlphabetMismatch("sequence was encoded against a different alphabet than the layout");
  }
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t s : seq.symbols) {
    if (s >= m) {
      throw AlphabetMismatch("symbol index " + std::to_string(s) + " exceeds layout alphabet size " +
                             std::to_string(m));
    }
    ++counts[s];
  }
  std::vector<double> pct(m);
  const auto total = static_cast<double>(seq.size());
  for (std::size_t k = 0; k < m; ++k) pct[k] = 100.0 * static_cast<double>(counts[k]) / total;
  return pct;
}

}  // namespace cursor_hmm
