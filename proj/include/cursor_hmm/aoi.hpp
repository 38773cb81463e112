#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cursor_hmm/hmm.hpp"

namespace cursor_hmm {

// Screen coordinates in pixels, origin top-left, y growing downward.
struct Region {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  // Half-open: [x, x + width) x [y, y + height).
  bool contains(double px, double py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
  bool operator==(const Region&) const = default;
};

// Ordered set of areas of interest plus a catch-all symbol for points outside
// every region. Declaration order matters: the first containing region wins.
class AoiLayout {
 public:
  explicit AoiLayout(std::vector<Region> regions, std::string catch_all_name = "R");

  const std::vector<Region>& regions() const { return regions_; }
  const std::string& catch_all_name() const { return catch_all_; }

  // Region names in order followed by the catch-all name.
  std::vector<std::string> alphabet() const;
  std::size_t alphabet_size() const { return regions_.size() + 1; }
  std::size_t catch_all_index() const { return regions_.size(); }

  bool operator==(const AoiLayout&) const = default;

 private:
  std::vector<Region> regions_;
  std::string catch_all_;
};

struct CursorSample {
  double t_ms = 0.0;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const CursorSample&) const = default;
};

// Timestamped cursor positions, at least one sample, strictly increasing time.
class CursorTrace {
 public:
  explicit CursorTrace(std::vector<CursorSample> samples);
  const std::vector<CursorSample>& samples() const { return samples_; }
  bool operator==(const CursorTrace&) const = default;

 private:
  std::vector<CursorSample> samples_;
};

inline constexpr double kDefaultDsMs = 10.0;

std::size_t locate(const AoiLayout& layout, double x, double y);

// One symbol per tick first_t + k * ds, k = 0 .. floor((last_t - first_t) / ds).
// The position at a tick is the latest sample at or before it.
SymbolSequence vectorize(const CursorTrace& trace, const AoiLayout& layout, double ds_ms);

// Percentage of the sequence spent on each symbol of the layout's alphabet.
std::vector<double> fixation_report(const SymbolSequence& seq, const AoiLayout& layout);

}  // namespace cursor_hmm
