#include "qac/scoring.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <map>

namespace qac {

double score(const QueryStats& stats, const Weights& w) {
  return w.atc * static_cast<double>(stats.atc) +
         w.clicks * static_cast<double>(stats.clicks) +
         w.impressions * static_cast<double>(stats.impressions);
}

std::vector<ScoredQuery> score_all(const std::vector<QueryStats>& stats, const Weights& w) {
  std::vector<ScoredQuery> out;
  out.reserve(stats.size());
  for (const auto& s : stats) out.push_back({s.query, s, score(s, w)});
  return out;
}

std::vector<TrainingRow> build_training_rows(const std::vector<RawEvent>& events,
                                             const FitOptions& options) {
  if (options.history_days <= 0 || options.target_days <= 0) {
    throw std::invalid_argument("fit_weights: window lengths must be positive");
  }
  if (events.empty()) throw InsufficientSignal("fit_weights: no events");

  const auto [lo_it, hi_it] = std::minmax_element(
      events.begin(), events.end(),
      [](const RawEvent& a, const RawEvent& b) { return a.day < b.day; });
  const std::int64_t first = lo_it->day;
  const std::int64_t last = hi_it->day;
  if (last - first + 1 < options.history_days + options.target_days) {
    throw std::invalid_argument("fit_weights: events span " +
                                std::to_string(last - first + 1) + " days, need " +
                                std::to_string(options.history_days + options.target_days));
  }

  const std::int64_t split = last - options.target_days;
  const std::int64_t history_lo = split - options.history_days + 1;

  std::map<std::string, TrainingRow, std::less<>> rows;
  for (const auto& e : events) {
    if (e.day < history_lo || e.day > last) continue;
    auto& row = rows[e.query];
    if (e.day <= split) {
      switch (e.kind) {
        case EventKind::kAtc: row.atc += 1.0; break;
        case EventKind::kClick: row.clicks += 1.0; break;
        case EventKind::kImpression: row.impressions += 1.0; break;
      }
    } else if (e.kind == EventKind::kAtc) {
      row.target += 1.0;
    }
  }
  std::vector<TrainingRow> out;
  out.reserve(rows.size());
  for (const auto& [_, row] : rows) out.push_back(row);
  return out;
}

Weights solve_least_squares(const std::vector<TrainingRow>& rows) {
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& r : rows) {
    const Eigen::Vector3d x(r.atc, r.clicks, r.impressions);
    normal.noalias() += x * x.transpose();
    rhs.noalias() += x * r.target;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw InsufficientSignal("fit_weights: normal matrix is singular (rank " +
                             std::to_string(lu.rank()) + " of 3)");
  }
  const Eigen::Vector3d w = lu.solve(rhs);
  return {w(0), w(1), w(2)};
}

Weights fit_weights(const std::vector<RawEvent>& events, const FitOptions& options) {
  Weights w = solve_least_squares(build_training_rows(events, options));
  if (options.clamp_nonnegative) {
    w.atc = std::max(w.atc, 0.0);
    w.clicks = std::max(w.clicks, 0.0);
    w.impressions = std::max(w.impressions, 0.0);
  }
  return w;
}

}  // namespace qac
