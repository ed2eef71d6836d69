#include "cssm/margins.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cssm/copula.hpp"
#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"

namespace cssm {

double boxcox(double y, double lambda) {
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("Box-Cox requires y > 0, got " + std::to_string(y));
  if (lambda == 0.0) return std::log(y);
  return std::expm1(lambda * std::log(y)) / lambda;
}

double inv_boxcox(double z, double lambda) {
  if (lambda == 0.0) return std::exp(z);
  const double base = lambda * z;
  if (!(base > -1.0))
    throw NumericError("inverse Box-Cox undefined: 1 + lambda * z <= 0 for lambda = " + std::to_string(lambda) +
                           ", z = " + std::to_string(z),
                       1.0 + base);
  return std::exp(std::log1p(base) / lambda);
}

// ---------------------------------------------------------------------------
// Basis

int BasisTerm::columns() const {
  switch (kind) {
    case CovariateKind::Linear:
      return 1;
    case CovariateKind::Categorical:
      return static_cast<int>(levels.size()) - 1;
    case CovariateKind::Spline:
      return static_cast<int>(knots.size()) - 4 - 1;
  }
  return 0;
}

namespace {

constexpr int kDegree = 3;

// Nonzero cubic B-spline values at x; returns the index of the last one.
int bspline_nonzero(const std::vector<double>& t, double x, double n_out[kDegree + 1]) {
  const int n_basis = static_cast<int>(t.size()) - kDegree - 1;
  x = std::clamp(x, t.front(), t.back());
  int span = kDegree;
  if (x >= t[n_basis]) {
    span = n_basis - 1;
  } else {
    span = static_cast<int>(std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
    span = std::clamp(span, kDegree, n_basis - 1);
  }
  double left[kDegree + 1], right[kDegree + 1];
  n_out[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n_out[r] / (right[r + 1] + left[j - r]);
      n_out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n_out[j] = saved;
  }
  return span;
}

const char* kind_label(CovariateKind k) {
  switch (k) {
    case CovariateKind::Spline:
      return "spline";
    case CovariateKind::Linear:
      return "linear";
    case CovariateKind::Categorical:
      return "categorical";
  }
  return "?";
}

CovariateKind parse_kind_label(const std::string& s) {
  if (s == "spline") return CovariateKind::Spline;
  if (s == "linear") return CovariateKind::Linear;
  if (s == "categorical") return CovariateKind::Categorical;
  throw ParseError("unknown covariate kind '" + s + "'", 0, 0);
}

}  // namespace

void BasisTerm::evaluate(double x, double* row) const {
  if (!std::isfinite(x)) throw DomainError("covariate " + name + " is not finite");
  const int cols = columns();
  std::fill(row, row + cols, 0.0);
  switch (kind) {
    case CovariateKind::Linear:
      row[0] = x;
      return;
    case CovariateKind::Categorical: {
      const auto it = std::find(levels.begin(), levels.end(), x);
      if (it == levels.end()) throw DomainError("covariate " + name + " has unseen level " + std::to_string(x));
      const auto k = it - levels.begin();
      if (k > 0) row[k - 1] = 1.0;
      return;
    }
    case CovariateKind::Spline: {
      double n[kDegree + 1];
      const int span = bspline_nonzero(knots, x, n);
      for (int r = 0; r <= kDegree; ++r) {
        const int idx = span - kDegree + r;  // basis index; column idx - 1 since basis 0 is dropped
        if (idx >= 1) row[idx - 1] = n[r];
      }
      return;
    }
  }
}

int MarginalModel::columns() const {
  int c = 1;
  for (const auto& b : basis) c += b.columns();
  return c;
}

Eigen::MatrixXd MarginalModel::design(const Eigen::MatrixXd& x) const {
  if (x.cols() != static_cast<Eigen::Index>(basis.size()))
    throw DomainError("expected " + std::to_string(basis.size()) + " covariates, got " + std::to_string(x.cols()));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> d(x.rows(), columns());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double* row = d.row(i).data();
    row[0] = 1.0;
    int off = 1;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      basis[k].evaluate(x(i, k), row + off);
      off += basis[k].columns();
    }
  }
  return d;
}

Eigen::VectorXd MarginalModel::fitted(const Eigen::MatrixXd& x) const { return design(x) * coef; }

double MarginalModel::fitted_at(const Eigen::VectorXd& x_row) const {
  return fitted(x_row.transpose())[0];
}

void MarginOptions::validate() const {
  if (!(lambda_step > 0.0)) throw ConfigError("margins: lambda step must be positive");
  if (!(lambda_min <= lambda_max)) throw ConfigError("margins: lambda_min must not exceed lambda_max");
  if (min_observed < 1) throw ConfigError("margins: min_observed must be >= 1");
  if (interior_knots < 0) throw ConfigError("margins: interior_knots must be >= 0");
  if (!(ridge >= 0.0)) throw ConfigError("margins: ridge must be >= 0");
}

std::vector<double> MarginOptions::lambda_grid() const {
  std::vector<double> g;
  const int n = static_cast<int>(std::floor((lambda_max - lambda_min) / lambda_step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    double l = lambda_min + i * lambda_step;
    // keep grid points exact at multiples of the step (0 in particular)
    l = std::round(l / lambda_step * 1e6) / 1e6 * lambda_step;
    if (std::abs(l) < 1e-12) l = 0.0;
    g.push_back(l);
  }
  return g;
}

namespace {

BasisTerm build_term(const CovariateSpec& spec, std::vector<double> xs, int interior_knots) {
  BasisTerm term;
  term.name = spec.name;
  term.kind = spec.kind;
  std::sort(xs.begin(), xs.end());
  const std::set<double> unique(xs.begin(), xs.end());
  if (unique.size() < 2) throw FitError("covariate " + spec.name + " is constant; the design is rank deficient");
  if (spec.kind == CovariateKind::Categorical) {
    term.levels.assign(unique.begin(), unique.end());
    return term;
  }
  if (spec.kind == CovariateKind::Linear) return term;
  const double lo = xs.front(), hi = xs.back();
  std::vector<double> interior;
  const std::size_t n = xs.size();
  for (int k = 1; k <= interior_knots; ++k) {
    const double pos = static_cast<double>(k) / (interior_knots + 1) * (n - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - i;
    const double q = i + 1 < n ? xs[i] * (1.0 - frac) + xs[i + 1] * frac : xs[i];
    if (q > lo && q < hi && (interior.empty() || q > interior.back())) interior.push_back(q);
  }
  term.knots.assign(kDegree + 1, lo);
  term.knots.insert(term.knots.end(), interior.begin(), interior.end());
  term.knots.insert(term.knots.end(), kDegree + 1, hi);
  return term;
}

Eigen::Index rank_of(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  return qr.rank();
}

}  // namespace

MarginalModel fit_margin(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                         const std::vector<CovariateSpec>& specs, const MarginOptions& opts) {
  opts.validate();
  if (x.rows() != y.size()) throw DomainError("fit_margin: covariate rows do not match the series length");
  if (x.cols() != static_cast<Eigen::Index>(specs.size()))
    throw DomainError("fit_margin: covariate columns do not match their specifications");

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (std::isfinite(y[i])) {
      if (!(y[i] > 0.0)) throw DomainError("Box-Cox requires y > 0, got " + std::to_string(y[i]) + " at row " +
                                           std::to_string(i + 1));
      rows.push_back(i);
    }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < opts.min_observed)
    throw FitError("margin has " + std::to_string(n) + " observed values, need at least " +
                   std::to_string(opts.min_observed));

  MarginalModel model;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    std::vector<double> xs;
    for (auto i : rows) {
      if (!std::isfinite(x(i, k))) throw DomainError("covariate " + specs[k].name + " is missing at row " +
                                                     std::to_string(i + 1));
      xs.push_back(x(i, k));
    }
    model.basis.push_back(build_term(specs[k], std::move(xs), opts.interior_knots));
  }

  Eigen::MatrixXd xo(n, x.cols());
  Eigen::VectorXd yo(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    xo.row(r) = x.row(rows[r]);
    yo[r] = y[rows[r]];
  }
  const Eigen::MatrixXd d = model.design(xo);
  const Eigen::Index p = d.cols();
  if (p > n) throw FitError("design has more columns than observations");
  if (rank_of(d) < p) {
    Eigen::Index off = 1;
    for (const auto& term : model.basis) {
      const Eigen::Index cols = off + term.columns();
      if (rank_of(d.leftCols(cols)) < cols)
        throw FitError("design is rank deficient at covariate " + term.name);
      off = cols;
    }
    throw FitError("design is rank deficient");
  }

  Eigen::MatrixXd gram = d.transpose() * d;
  for (Eigen::Index c = 1; c < p; ++c) gram(c, c) += opts.ridge;
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw FitError("normal equations could not be factorized");

  const double sum_log_y = yo.array().log().sum();
  double best = -std::numeric_limits<double>::infinity();
  for (double lambda : opts.lambda_grid()) {
    Eigen::VectorXd z(n);
    for (Eigen::Index r = 0; r < n; ++r) z[r] = boxcox(yo[r], lambda);
    const Eigen::VectorXd beta = solver.solve(d.transpose() * z);
    const double rss = (z - d * beta).squaredNorm();
    const double s2 = rss / n;
    if (!(s2 > 0.0) || !std::isfinite(s2)) {
      if (s2 == 0.0 && std::isfinite(best)) continue;
      if (s2 == 0.0) {
        // exact fit: likelihood unbounded, keep the first such lambda
        model.lambda = lambda;
        model.coef = beta;
        model.sigma = std::numeric_limits<double>::min();
        model.loglik = std::numeric_limits<double>::infinity();
        best = model.loglik;
      }
      continue;
    }
    const double ll = -0.5 * n * (std::log(2.0 * std::numbers::pi * s2) + 1.0) + (lambda - 1.0) * sum_log_y;
    if (ll > best) {
      best = ll;
      model.lambda = lambda;
      model.coef = beta;
      model.sigma = std::sqrt(s2);
      model.loglik = ll;
    }
  }
  if (model.coef.size() == 0) throw FitError("no lambda in the grid produced a finite likelihood");
  return model;
}

Eigen::VectorXd residuals_to_copula(const MarginalModel& model, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& x) {
  if (x.rows() != y.size()) throw DomainError("residuals_to_copula: covariate rows do not match y");
  const Eigen::VectorXd f = model.fitted(x);
  Eigen::VectorXd u(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) {
      u[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double z = (boxcox(y[i], model.lambda) - f[i]) / model.sigma;
    u[i] = clamp_uniform(normal_cdf(z));
  }
  return u;
}

double margin_to_data_scale(const MarginalModel& model, double u, const Eigen::VectorXd& x_row) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("copula-scale value must lie in (0, 1)");
  return inv_boxcox(model.fitted_at(x_row) + model.sigma * normal_quantile(u), model.lambda);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

std::vector<double> split_numbers(const std::string& s, const std::string& key) {
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw ParseError("bad number '" + tok + "' for key " + key, 0, 0);
    out.push_back(v);
  }
  return out;
}

}  // namespace

void write_margin(std::ostream& os, const MarginalModel& model) {
  os << std::setprecision(17);
  os << "lambda = " << model.lambda << "\n";
  os << "sigma = " << model.sigma << "\n";
  os << "loglik = " << model.loglik << "\n";
  os << "coef = " << join(std::vector<double>(model.coef.data(), model.coef.data() + model.coef.size())) << "\n";
  os << "terms = " << model.basis.size() << "\n";
  for (std::size_t k = 0; k < model.basis.size(); ++k) {
    const auto& b = model.basis[k];
    const std::string p = "term." + std::to_string(k + 1) + ".";
    os << p << "name = " << b.name << "\n";
    os << p << "kind = " << kind_label(b.kind) << "\n";
    os << p << "knots = " << join(b.knots) << "\n";
    os << p << "levels = " << join(b.levels) << "\n";
  }
}

MarginalModel read_margin(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno, 1);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("margin model is missing key " + key, lineno, 0);
    return it->second;
  };
  auto scalar = [&](const std::string& key) {
    const auto v = split_numbers(get(key), key);
    if (v.size() != 1) throw ParseError("expected one number for key " + key, 0, 0);
    return v[0];
  };
  MarginalModel m;
  m.lambda = scalar("lambda");
  m.sigma = scalar("sigma");
  m.loglik = scalar("loglik");
  const auto coef = split_numbers(get("coef"), "coef");
  m.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  const int terms = static_cast<int>(scalar("terms"));
  for (int k = 1; k <= terms; ++k) {
    const std::string p = "term." + std::to_string(k) + ".";
    BasisTerm b;
    b.name = get(p + "name");
    b.kind = parse_kind_label(get(p + "kind"));
    b.knots = split_numbers(get(p + "knots"), p + "knots");
    b.levels = split_numbers(get(p + "levels"), p + "levels");
    m.basis.push_back(std::move(b));
  }
  if (m.columns() != m.coef.size()) throw ParseError("coefficient count does not match the basis", 0, 0);
  if (!(m.sigma > 0.0)) throw ParseError("sigma must be positive", 0, 0);
  return m;
}

}  // namespace cssm
