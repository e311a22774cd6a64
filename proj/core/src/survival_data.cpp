#include "rmst/survival_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rmst/errors.hpp"

namespace rmst {

SurvivalDataset::SurvivalDataset(std::vector<Observation> observations)
    : observations_(std::move(observations)) {
  for (const auto& o : observations_) {
    if (!(o.time > 0.0) || !std::isfinite(o.time)) {
      throw DomainError("observation times must be positive and finite");
    }
    if (o.group != Group::one && o.group != Group::two) throw DomainError("group must be 1 or 2");
    ++group_sizes_[index_of(o.group)];
  }

  times_.reserve(observations_.size());
  for (const auto& o : observations_) times_.push_back(o.time);
  std::sort(times_.begin(), times_.end());
  times_.erase(std::unique(times_.begin(), times_.end()), times_.end());

  const std::size_t k = times_.size();
  exact_.assign(k, {0, 0});
  censored_.assign(k, {0, 0});
  for (const auto& o : observations_) {
    const auto i = static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), o.time) - times_.begin());
    auto& slot = o.event ? exact_[i] : censored_[i];
    ++slot[index_of(o.group)];
  }

  exact_tail_.assign(k + 1, {0, 0});
  censored_tail_.assign(k + 1, {0, 0});
  for (std::size_t i = k; i-- > 0;) {
    for (std::size_t j = 0; j < 2; ++j) {
      exact_tail_[i][j] = exact_tail_[i + 1][j] + exact_[i][j];
      censored_tail_[i][j] = censored_tail_[i + 1][j] + censored_[i][j];
    }
  }
}

std::size_t SurvivalDataset::interval_index(double t) const {
  return static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), t) -
                                  times_.begin());
}

IntVec2 SurvivalDataset::at_risk(double s) const {
  const std::size_t i = interval_index(s);
  if (i >= times_.size()) return {0, 0};
  return {exact_tail_[i][0] + censored_tail_[i][0], exact_tail_[i][1] + censored_tail_[i][1]};
}

SurvivalDataset SurvivalDataset::only(Group g) const {
  std::vector<Observation> kept;
  for (const auto& o : observations_) {
    if (o.group == g) kept.push_back({o.time, o.event, Group::one});
  }
  return SurvivalDataset(std::move(kept));
}

DatasetCounts counts_at(const SurvivalDataset& data, double t) {
  if (!(t >= 0.0)) throw DomainError("counts_at requires t >= 0");
  const std::size_t i = data.interval_index(t);
  DatasetCounts out{data.exact_tail(i), data.censored_tail(i), {0, 0}};
  out.at_risk = {out.exact_tail[0] + out.censored_tail[0],
                 out.exact_tail[1] + out.censored_tail[1]};
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

SurvivalDataset read_csv(std::istream& in, bool allow_empty_group) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<Observation> obs;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      if (fields != std::vector<std::string>{"time", "event", "group"}) {
        throw ParseError("expected header time,event,group", lineno);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 3) throw ParseError("expected 3 fields", lineno);
    double time = 0.0;
    int event = 0;
    int group = 0;
    if (!parse_number(fields[0], time) || !(time > 0.0) || !std::isfinite(time)) {
      throw ParseError("time must be a positive real", lineno);
    }
    if (!parse_number(fields[1], event) || (event != 0 && event != 1)) {
      throw ParseError("event must be 0 or 1", lineno);
    }
    if (!parse_number(fields[2], group) || (group != 1 && group != 2)) {
      throw ParseError("group must be 1 or 2", lineno);
    }
    obs.push_back({time, event == 1, group == 1 ? Group::one : Group::two});
  }
  if (!have_header) throw ParseError("empty input", lineno);
  SurvivalDataset data(std::move(obs));
  if (!allow_empty_group && (data.group_sizes()[0] == 0 || data.group_sizes()[1] == 0)) {
    throw ConfigError("both groups need at least one observation");
  }
  return data;
}

SurvivalDataset load_csv(const std::filesystem::path& path, bool allow_empty_group) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_csv(in, allow_empty_group);
}

void write_csv(std::ostream& out, const SurvivalDataset& data) {
  out << "time,event,group\n";
  const auto old_precision = out.precision(17);
  for (const auto& o : data.observations()) {
    out << o.time << ',' << (o.event ? 1 : 0) << ',' << static_cast<int>(o.group) << '\n';
  }
  out.precision(old_precision);
}

double KMEstimate::operator()(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KMEstimate kaplan_meier(const SurvivalDataset& data, Group group) {
  const std::size_t g = index_of(group);
  if (data.group_sizes()[g] == 0) throw ConfigError("Kaplan-Meier needs a nonempty group");
  KMEstimate km{group, {}, {}};
  double s = 1.0;
  for (std::size_t i = 0; i < data.times().size(); ++i) {
    const int d = data.exact_counts(i)[g];
    if (d == 0) continue;
    const int r = data.exact_tail(i)[g] + data.censored_tail(i)[g];
    s *= 1.0 - static_cast<double>(d) / r;
    km.times.push_back(data.times()[i]);
    km.survival.push_back(s);
  }
  return km;
}

double pooled_quantile(const SurvivalDataset& data, double q) {
  if (data.empty()) throw ConfigError("quantile of an empty dataset");
  if (!(q > 0.0) || q > 1.0) throw DomainError("quantile level must lie in (0, 1]");
  std::vector<double> t;
  t.reserve(data.size());
  for (const auto& o : data.observations()) t.push_back(o.time);
  std::sort(t.begin(), t.end());
  const double h = q * static_cast<double>(t.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= t.size()) return t.back();
  return t[lo] + (h - static_cast<double>(lo)) * (t[lo + 1] - t[lo]);
}

}  // namespace rmst
