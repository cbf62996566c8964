#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qac/ingestion.hpp"

namespace qac {

/// Behavioral score weights: score = atc * w.atc + clicks * w.clicks +
/// impressions * w.impressions.
struct Weights {
  double atc = 0.0;
  double clicks = 0.0;
  double impressions = 0.0;

  friend bool operator==(const Weights&, const Weights&) = default;
};

struct ScoredQuery {
  std::string query;
  QueryStats stats;
  double score = 0.0;
};

double score(const QueryStats& stats, const Weights& w);

std::vector<ScoredQuery> score_all(const std::vector<QueryStats>& stats, const Weights& w);

class InsufficientSignal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  std::int64_t history_days = 350;  // ~50 weeks
  std::int64_t target_days = 14;
  bool clamp_nonnegative = false;
};

/// One training row per query seen around the split day T = last day -
/// target_days: features are (atc, clicks, impressions) over
/// [T - history_days + 1, T], the target is the atc count over
/// (T, T + target_days]. Returns the no-intercept least-squares weights.
///
/// Throws std::invalid_argument if the events span fewer than
/// history_days + target_days days, and InsufficientSignal when the normal
/// matrix is singular.
Weights fit_weights(const std::vector<RawEvent>& events, const FitOptions& options = {});

struct TrainingRow {
  double atc = 0.0;
  double clicks = 0.0;
  double impressions = 0.0;
  double target = 0.0;
};

std::vector<TrainingRow> build_training_rows(const std::vector<RawEvent>& events,
                                             const FitOptions& options);

/// Least squares over prepared rows. Throws InsufficientSignal when singular.
Weights solve_least_squares(const std::vector<TrainingRow>& rows);

}  // namespace qac
