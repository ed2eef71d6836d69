#pragma once

// Sample-based CRPS and cumulative model comparison.

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cssm {

/// (1/R) sum |x_r - y| - 1/(2R^2) sum_{r,s} |x_r - x_s|, evaluated by sorting.
double crps_from_samples(std::span<const double> samples, double y);

struct EvalCell {
  int margin = 0;  // 0-based
  int t = 0;       // 0-based
  double truth = 0.0;
};

struct ModelPredictions {
  std::string label;
  std::map<std::pair<int, int>, std::vector<double>> samples;  // (margin, t) -> predictive samples
};

struct CellScore {
  std::string model;
  int margin = 0;
  int t = 0;
  double crps = 0.0;
};

struct ScoreReport {
  std::vector<std::string> models;
  std::vector<int> margins;  // sorted margins present among the evaluation cells
  Eigen::MatrixXd cumulative;  // models x margins
  std::vector<int> best;       // per margin, row index of the minimum (first on ties)
  std::vector<CellScore> cells;
};

/// Throws CompletenessError when there are no cells or a model lacks a prediction for a cell.
ScoreReport cumulative_crps(const std::vector<EvalCell>& cells, const std::vector<ModelPredictions>& models);

}  // namespace cssm
