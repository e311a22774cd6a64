#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "rmst/prior.hpp"

namespace rmst {

struct Observation {
  double time;
  bool event;  // true = exact, false = right-censored
  Group group;
};

/// Right-censored two-sample data with its derived order statistics.
/// Distinct times are indexed 0..k-1 here; reverse-cumulative arrays carry a
/// trailing zero sentinel at index k.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  explicit SurvivalDataset(std::vector<Observation> observations);

  const std::vector<Observation>& observations() const noexcept { return observations_; }
  std::size_t size() const noexcept { return observations_.size(); }
  bool empty() const noexcept { return observations_.empty(); }
  IntVec2 group_sizes() const noexcept { return group_sizes_; }

  const std::vector<double>& times() const noexcept { return times_; }
  IntVec2 exact_counts(std::size_t i) const { return exact_[i]; }
  IntVec2 censored_counts(std::size_t i) const { return censored_[i]; }
  IntVec2 exact_tail(std::size_t i) const { return exact_tail_[i]; }
  IntVec2 censored_tail(std::size_t i) const { return censored_tail_[i]; }

  /// Index of the first distinct time >= t (times().size() past the end).
  std::size_t interval_index(double t) const;

  /// R_j(s) = #{group j observations with time >= s}.
  IntVec2 at_risk(double s) const;

  /// Observations of one group relabelled into group 1.
  SurvivalDataset only(Group g) const;

 private:
  std::vector<Observation> observations_;
  IntVec2 group_sizes_{0, 0};
  std::vector<double> times_;
  std::vector<IntVec2> exact_, censored_;
  std::vector<IntVec2> exact_tail_, censored_tail_;
};

struct DatasetCounts {
  IntVec2 exact_tail;
  IntVec2 censored_tail;
  IntVec2 at_risk;
};

/// Reverse-cumulative counts from the first distinct time >= t, and R(t).
DatasetCounts counts_at(const SurvivalDataset& data, double t);

/// Parses `time,event,group` CSV. Both groups must be nonempty unless
/// `allow_empty_group` is set.
SurvivalDataset read_csv(std::istream& in, bool allow_empty_group = false);
SurvivalDataset load_csv(const std::filesystem::path& path, bool allow_empty_group = false);
void write_csv(std::ostream& out, const SurvivalDataset& data);

struct KMEstimate {
  Group group;
  std::vector<double> times;     // distinct exact times
  std::vector<double> survival;  // value on [times[i], times[i+1])

  double operator()(double t) const;
};

KMEstimate kaplan_meier(const SurvivalDataset& data, Group group);

/// Empirical quantile (type 7) of the pooled observation times.
double pooled_quantile(const SurvivalDataset& data, double q);

}  // namespace rmst
