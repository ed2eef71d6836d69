#include "cssm/score.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cssm/errors.hpp"

namespace cssm {

double crps_from_samples(std::span<const double> samples, double y) {
  if (samples.empty()) throw DomainError("CRPS needs at least one sample");
  if (!std::isfinite(y)) throw DomainError("CRPS observation is not finite");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double abs_err = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw DomainError("CRPS sample is not finite");
    abs_err += std::abs(x[i] - y);
    spread += (2.0 * (i + 1) - n - 1.0) * x[i];
  }
  return std::max(0.0, abs_err / n - spread / (n * n));
}

ScoreReport cumulative_crps(const std::vector<EvalCell>& cells, const std::vector<ModelPredictions>& models) {
  if (cells.empty()) throw CompletenessError("no evaluation cells to score");
  if (models.empty()) throw CompletenessError("no model predictions to score");

  ScoreReport rep;
  std::set<int> margins;
  for (const auto& c : cells) margins.insert(c.margin);
  rep.margins.assign(margins.begin(), margins.end());
  rep.cumulative = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(models.size()),
                                         static_cast<Eigen::Index>(rep.margins.size()));

  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& mp = models[m];
    rep.models.push_back(mp.label);
    std::vector<std::string> missing;
    for (const auto& c : cells) {
      const auto it = mp.samples.find({c.margin, c.t});
      if (it == mp.samples.end() || it->second.empty()) {
        missing.push_back("(margin " + std::to_string(c.margin + 1) + ", t " + std::to_string(c.t + 1) + ")");
        continue;
      }
      const double s = crps_from_samples(it->second, c.truth);
      rep.cells.push_back({mp.label, c.margin, c.t, s});
      const auto col = std::lower_bound(rep.margins.begin(), rep.margins.end(), c.margin) - rep.margins.begin();
      rep.cumulative(static_cast<Eigen::Index>(m), col) += s;
    }
    if (!missing.empty()) {
      std::string msg = "model " + mp.label + " lacks predictions for " + std::to_string(missing.size()) + " cell(s):";
      for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
      if (missing.size() > 20) msg += " ...";
      throw CompletenessError(msg);
    }
  }
  for (Eigen::Index c = 0; c < rep.cumulative.cols(); ++c) {
    Eigen::Index best = 0;
    rep.cumulative.col(c).minCoeff(&best);
    rep.best.push_back(static_cast<int>(best));
  }
  return rep;
}

}  // namespace cssm
