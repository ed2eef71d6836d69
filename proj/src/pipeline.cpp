#include "cssm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"
#include "cssm/margins.hpp"
#include "cssm/predict.hpp"
#include "cssm/score.hpp"
#include "cssm/table_io.hpp"

namespace fs = std::filesystem;

namespace cssm {

namespace {

// rng stream ids under the run seed
constexpr std::uint64_t kStreamSimulate = 11;
constexpr std::uint64_t kStreamMask = 12;
constexpr std::uint64_t kStreamPredict = 13;

template <class F>
auto as_config_error(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(context + ": " + e.what());
  }
}

std::uint64_t run_seed(const ConfigFile& cfg) { return cfg.get_uint64("run", "seed", 1); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::string margin_name(int j) { return "u_" + std::to_string(j + 1); }

int to_index(double x, const std::string& what, int upper) {
  if (!std::isfinite(x) || x != std::floor(x) || x < 1 || x > upper)
    throw CompletenessError(what + " " + format_double(x) + " is outside 1.." + std::to_string(upper));
  return static_cast<int>(x) - 1;
}

}  // namespace

const ConfigFile::Schema& config_schema() {
  static const ConfigFile::Schema schema = {
      {"run", {"seed", "out"}},
      {"model", {"scenario", "families", "tau_obs", "latent_family", "tau_lat"}},
      {"simulate", {"T", "mask_rate", "mask_block"}},
      {"data", {"input", "scale", "covariates"}},
      {"margins",
       {"lambda_min", "lambda_max", "lambda_step", "min_observed", "interior_knots", "spline", "linear",
        "categorical"}},
      {"holdout", {"margins", "last"}},
      {"sampler",
       {"iterations", "warmup", "target_accept", "max_tree_depth", "chains", "threads", "families",
        "write_latent"}},
      {"predict", {"fit_dir", "target", "horizon"}},
      {"score", {"truth", "predictions"}},
      {"contours", {"source", "fit_dir", "grid_min", "grid_max", "grid_points", "nodes", "normal_range"}},
  };
  return schema;
}

ModelParams model_from_config(const ConfigFile& cfg) {
  return as_config_error("[model]", [&] {
    ModelParams p;
    bool have_base = false;
    if (cfg.has("model", "scenario")) {
      const auto s = cfg.get_int("model", "scenario", 1);
      if (s < 1 || s > 3) throw ConfigError("[model] scenario must be 1, 2 or 3");
      p.m_obs = {FamilyKind::Gaussian, FamilyKind::Gaussian, FamilyKind::Clayton,
                 FamilyKind::Clayton,  FamilyKind::Gumbel,   FamilyKind::Gumbel};
      p.tau_obs.resize(6);
      p.tau_obs << 0.5, 0.7, 0.5, 0.7, 0.5, 0.7;
      p.tau_lat = 0.7;
      p.m_lat = s == 1 ? FamilyKind::Gaussian : s == 2 ? FamilyKind::Clayton : FamilyKind::Gumbel;
      have_base = true;
    }
    auto require = [&](const char* key) {
      if (!have_base && !cfg.has("model", key))
        throw ConfigError(std::string("[model] needs either scenario or ") + key);
    };
    require("families");
    require("tau_obs");
    require("latent_family");
    require("tau_lat");
    if (cfg.has("model", "families")) {
      p.m_obs.clear();
      for (const auto& f : cfg.get_list("model", "families")) p.m_obs.push_back(parse_kind(f));
    }
    if (cfg.has("model", "tau_obs")) {
      const auto t = cfg.get_double_list("model", "tau_obs");
      p.tau_obs = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
    }
    if (cfg.has("model", "latent_family")) p.m_lat = parse_kind(cfg.get_string("model", "latent_family", ""));
    p.tau_lat = cfg.get_double("model", "tau_lat", p.tau_lat);
    if (p.m_obs.empty()) throw ConfigError("[model] needs at least one margin");
    if (static_cast<int>(p.m_obs.size()) != p.tau_obs.size())
      throw ConfigError("[model] families and tau_obs differ in length");
    p.validate();
    return p;
  });
}

SamplerConfig sampler_from_config(const ConfigFile& cfg) {
  SamplerConfig s;
  s.iterations = static_cast<int>(cfg.get_int("sampler", "iterations", s.iterations));
  s.warmup = static_cast<int>(cfg.get_int("sampler", "warmup", s.warmup));
  s.target_accept = cfg.get_double("sampler", "target_accept", s.target_accept);
  s.max_tree_depth = static_cast<int>(cfg.get_int("sampler", "max_tree_depth", s.max_tree_depth));
  s.chains = static_cast<int>(cfg.get_int("sampler", "chains", s.chains));
  s.threads = static_cast<int>(cfg.get_int("sampler", "threads", s.threads));
  s.seed = run_seed(cfg);
  s.validate();
  return s;
}

std::vector<FamilyKind> family_set_from_config(const ConfigFile& cfg) {
  return as_config_error("[sampler] families", [&] {
    return parse_kind_list(cfg.get_string("sampler", "families", "gaussian,t4,clayton,gumbel"));
  });
}

// ---------------------------------------------------------------------------
// Draw serialization

void write_draws(const fs::path& dir, const PosteriorDraws& draws, bool with_latent) {
  TextTable t;
  t.header = {"chain", "iter", "tau_lat"};
  for (int j = 0; j < draws.d; ++j) t.header.push_back("tau_obs_" + std::to_string(j + 1));
  t.header.push_back("m_lat");
  for (int j = 0; j < draws.d; ++j) t.header.push_back("m_obs_" + std::to_string(j + 1));
  t.header.push_back("log_post");
  for (int r = 0; r < draws.size(); ++r) {
    std::vector<std::string> row{std::to_string(draws.chain[r] + 1), std::to_string(draws.iteration[r] + 1),
                                 format_double(draws.tau_lat[r])};
    for (int j = 0; j < draws.d; ++j) row.push_back(format_double(draws.tau_obs(r, j)));
    row.emplace_back(kind_name(draws.m_lat[r]));
    for (int j = 0; j < draws.d; ++j) row.emplace_back(kind_name(draws.m_obs[r][j]));
    row.push_back(format_double(draws.log_post[r]));
    t.rows.push_back(std::move(row));
  }
  write_csv(dir / "draws.csv", t);

  TextTable fs_table;
  fs_table.header = {"family"};
  for (auto k : draws.family_set) fs_table.rows.push_back({std::string(kind_name(k))});
  write_csv(dir / "family_set.csv", fs_table);

  if (!with_latent) return;
  NumericTable lat;
  lat.header = {"chain", "iter"};
  for (int t_ = 0; t_ < draws.T; ++t_) lat.header.push_back("v_" + std::to_string(t_ + 1));
  lat.values.resize(draws.size(), draws.T + 2);
  for (int r = 0; r < draws.size(); ++r) {
    lat.values(r, 0) = draws.chain[r] + 1;
    lat.values(r, 1) = draws.iteration[r] + 1;
    lat.values.row(r).tail(draws.T) = draws.v.row(r);
  }
  write_csv(dir / "latent.csv", lat);
}

PosteriorDraws read_draws(const fs::path& dir) {
  const TextTable t = read_text_csv(dir / "draws.csv");
  const NumericTable lat = read_numeric_csv(dir / "latent.csv");
  const TextTable fam = read_text_csv(dir / "family_set.csv");
  PosteriorDraws d;
  for (const auto& row : fam.rows) d.family_set.push_back(as_config_error("family_set.csv", [&] {
    return parse_kind(row.at(0));
  }));
  int dim = 0;
  while (std::find(t.header.begin(), t.header.end(), "tau_obs_" + std::to_string(dim + 1)) != t.header.end()) ++dim;
  if (dim == 0) throw ParseError("draws.csv has no tau_obs columns", 1, 0);
  d.d = dim;
  d.T = static_cast<int>(lat.values.cols()) - 2;
  if (d.T < 1) throw ParseError("latent.csv has no latent columns", 1, 0);
  const auto R = static_cast<Eigen::Index>(t.rows.size());
  if (lat.values.rows() != R) throw CompletenessError("draws.csv and latent.csv differ in row count");
  d.tau_obs.resize(R, dim);
  d.tau_lat.resize(R);
  d.v = lat.values.rightCols(d.T);
  const auto c_chain = t.column("chain"), c_iter = t.column("iter"), c_lat = t.column("tau_lat"),
             c_mlat = t.column("m_lat"), c_lp = t.column("log_post");
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = static_cast<std::size_t>(r) + 2;
    d.chain.push_back(static_cast<int>(parse_cell(row[c_chain], line, c_chain + 1)) - 1);
    d.iteration.push_back(static_cast<int>(parse_cell(row[c_iter], line, c_iter + 1)) - 1);
    if (lat.values(r, 0) != d.chain.back() + 1 || lat.values(r, 1) != d.iteration.back() + 1)
      throw CompletenessError("latent.csv row " + std::to_string(line) + " does not match draws.csv");
    d.tau_lat[r] = parse_cell(row[c_lat], line, c_lat + 1);
    std::vector<FamilyKind> m(dim);
    for (int j = 0; j < dim; ++j) {
      const auto c = t.column("tau_obs_" + std::to_string(j + 1));
      d.tau_obs(r, j) = parse_cell(row[c], line, c + 1);
      const auto cm = t.column("m_obs_" + std::to_string(j + 1));
      try {
        m[j] = parse_kind(row[cm]);
      } catch (const DomainError&) {
        throw ParseError("unknown family '" + row[cm] + "'", line, cm + 1);
      }
    }
    d.m_obs.push_back(std::move(m));
    try {
      d.m_lat.push_back(parse_kind(row[c_mlat]));
    } catch (const DomainError&) {
      throw ParseError("unknown family '" + row[c_mlat] + "'", line, c_mlat + 1);
    }
    d.log_post.push_back(parse_cell(row[c_lp], line, c_lp + 1));
    if (!std::isfinite(d.tau_lat[r]) || !(d.tau_obs.row(r).array().isFinite().all()))
      throw ParseError("missing parameter value", line, 0);
  }
  return d;
}

// ---------------------------------------------------------------------------
// simulate

void cmd_simulate(const ConfigFile& cfg, const fs::path& out) {
  const ModelParams params = model_from_config(cfg);
  const long long T = cfg.get_int("simulate", "T", 1000);
  if (T < 1) throw ConfigError("[simulate] T must be >= 1");
  const double rate = cfg.get_double("simulate", "mask_rate", 0.0);
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("[simulate] mask_rate must lie in [0, 1)");
  const int d = params.d();

  struct Block {
    int margin, start, length;
  };
  std::vector<Block> blocks;
  for (const auto& item : cfg.get_list("simulate", "mask_block")) {
    const auto parts = split_list(item, ':');
    if (parts.size() != 3) throw ConfigError("[simulate] mask_block entries are margin:start:length, got '" + item + "'");
    Block b{};
    try {
      b = {std::stoi(parts[0]) - 1, std::stoi(parts[1]) - 1, std::stoi(parts[2])};
    } catch (const std::exception&) {
      throw ConfigError("[simulate] mask_block entry '" + item + "' is not numeric");
    }
    if (b.margin < 0 || b.margin >= d || b.start < 0 || b.length < 0 || b.start + b.length > T)
      throw ConfigError("[simulate] mask_block entry '" + item + "' is outside the data");
    blocks.push_back(b);
  }

  ensure_dir(out);
  Rng rng(derive_seed(run_seed(cfg), 0, kStreamSimulate));
  const SimulationResult sim = simulate(params, static_cast<int>(T), rng);

  Mask observed = Mask::Constant(T, d, true);
  Rng mask_rng(derive_seed(run_seed(cfg), 0, kStreamMask));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (rate > 0.0)
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < d; ++j)
        if (unif(mask_rng) < rate) observed(t, j) = false;
  for (const auto& b : blocks) observed.col(b.margin).segment(b.start, b.length).setConstant(false);
  const bool masked = !observed.all();

  NumericTable data;
  for (int j = 0; j < d; ++j) data.header.push_back(margin_name(j));
  data.values = sim.data.u;
  if (masked) write_csv(out / "data_complete.csv", data);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j)
      if (!observed(t, j)) data.values(t, j) = std::numeric_limits<double>::quiet_NaN();
  write_csv(out / "data.csv", data);

  NumericTable latent;
  latent.header = {"t", "v"};
  latent.values.resize(T, 2);
  for (int t = 0; t < T; ++t) latent.values.row(t) << t + 1, sim.v[t];
  write_csv(out / "latent.csv", latent);

  TextTable p;
  p.header = {"parameter", "family", "tau"};
  for (int j = 0; j < d; ++j)
    p.rows.push_back({"obs_" + std::to_string(j + 1), std::string(kind_name(params.m_obs[j])),
                      format_double(params.tau_obs[j])});
  p.rows.push_back({"lat", std::string(kind_name(params.m_lat)), format_double(params.tau_lat)});
  write_csv(out / "params.csv", p);
}

// ---------------------------------------------------------------------------
// fit

namespace {

struct LoadedData {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // NaN = missing
  NumericTable covariates;
  bool data_scale = false;
};

LoadedData load_input(const ConfigFile& cfg) {
  const auto input = cfg.get("data", "input");
  if (!input) throw ConfigError("[data] input is required");
  LoadedData ld;
  const NumericTable t = read_numeric_csv(*input);
  std::vector<Eigen::Index> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] != "t") {
      cols.push_back(static_cast<Eigen::Index>(c));
      ld.names.push_back(t.header[c]);
    }
  if (cols.empty()) throw ConfigError("input " + *input + " has no margin columns");
  if (t.values.rows() < 1) throw ConfigError("input " + *input + " has no data rows");
  ld.values.resize(t.values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) ld.values.col(k) = t.values.col(cols[k]);

  const std::string scale = cfg.get_string("data", "scale", "copula");
  if (scale != "copula" && scale != "data") throw ConfigError("[data] scale must be copula or data");
  ld.data_scale = scale == "data";
  if (const auto cov = cfg.get("data", "covariates")) {
    ld.covariates = read_numeric_csv(*cov);
    if (ld.covariates.values.rows() < ld.values.rows())
      throw ConfigError("covariates file " + *cov + " has fewer rows than the input");
  }
  for (Eigen::Index j = 0; j < ld.values.cols(); ++j)
    if (!ld.values.col(j).array().isFinite().any())
      throw ConfigError("margin " + ld.names[j] + " (column " + std::to_string(j + 1) + ") has no observed values");
  if (!ld.data_scale)
    for (Eigen::Index t_ = 0; t_ < ld.values.rows(); ++t_)
      for (Eigen::Index j = 0; j < ld.values.cols(); ++j) {
        const double u = ld.values(t_, j);
        if (std::isfinite(u) && !(u > 0.0 && u < 1.0))
          throw ParseError("copula-scale value outside (0, 1)", static_cast<std::size_t>(t_) + 2,
                           static_cast<std::size_t>(j) + 1);
      }
  return ld;
}

struct CovariateDesign {
  std::vector<CovariateSpec> specs;
  Eigen::MatrixXd x;  // rows x specs
};

CovariateDesign covariate_design(const ConfigFile& cfg, const NumericTable& cov) {
  CovariateDesign cd;
  auto add = [&](const char* key, CovariateKind kind) {
    for (const auto& name : cfg.get_list("margins", key)) cd.specs.push_back({name, kind});
  };
  add("spline", CovariateKind::Spline);
  add("linear", CovariateKind::Linear);
  add("categorical", CovariateKind::Categorical);
  cd.x.resize(cov.values.rows(), static_cast<Eigen::Index>(cd.specs.size()));
  for (std::size_t k = 0; k < cd.specs.size(); ++k) {
    const auto it = std::find(cov.header.begin(), cov.header.end(), cd.specs[k].name);
    if (it == cov.header.end()) throw ConfigError("covariate " + cd.specs[k].name + " not found in covariates file");
    cd.x.col(static_cast<Eigen::Index>(k)) = cov.values.col(it - cov.header.begin());
  }
  return cd;
}

MarginOptions margin_options(const ConfigFile& cfg) {
  MarginOptions o;
  o.lambda_min = cfg.get_double("margins", "lambda_min", o.lambda_min);
  o.lambda_max = cfg.get_double("margins", "lambda_max", o.lambda_max);
  o.lambda_step = cfg.get_double("margins", "lambda_step", o.lambda_step);
  o.min_observed = static_cast<int>(cfg.get_int("margins", "min_observed", o.min_observed));
  o.interior_knots = static_cast<int>(cfg.get_int("margins", "interior_knots", o.interior_knots));
  o.validate();
  return o;
}

std::vector<MarginalModel> load_margin_models(const fs::path& dir, int d) {
  std::vector<MarginalModel> out;
  for (int j = 0; j < d; ++j) {
    const fs::path p = dir / ("margin_" + std::to_string(j + 1) + ".txt");
    if (!fs::exists(p)) return {};
    std::ifstream is(p);
    if (!is) throw IoError("cannot open " + p.string());
    out.push_back(read_margin(is));
  }
  return out;
}

}  // namespace

void cmd_fit(const ConfigFile& cfg, const fs::path& out) {
  const LoadedData ld = load_input(cfg);
  const SamplerConfig scfg = sampler_from_config(cfg);
  const auto families = family_set_from_config(cfg);
  const MarginOptions mopts = margin_options(cfg);
  const auto T = static_cast<int>(ld.values.rows());
  const auto d = static_cast<int>(ld.values.cols());

  std::vector<int> holdout_margins;
  for (const auto& m : cfg.get_list("holdout", "margins")) {
    int j = 0;
    try {
      j = std::stoi(m) - 1;
    } catch (const std::exception&) {
      throw ConfigError("[holdout] margins entry '" + m + "' is not an integer");
    }
    if (j < 0 || j >= d) throw ConfigError("[holdout] margin " + m + " outside 1.." + std::to_string(d));
    holdout_margins.push_back(j);
  }
  const long long last = cfg.get_int("holdout", "last", 0);
  if (last < 0 || last >= T) throw ConfigError("[holdout] last must lie in [0, T)");
  if (last > 0 && holdout_margins.empty()) throw ConfigError("[holdout] last needs margins");

  CovariateDesign cd;
  if (ld.data_scale) {
    cd = covariate_design(cfg, ld.covariates);
    if (!cd.specs.empty() && cd.x.rows() < T) throw ConfigError("covariates are required for every data row");
    if (cd.specs.empty()) cd.x.resize(T, 0);
  } else if (cfg.has("margins", "spline") || cfg.has("margins", "linear") || cfg.has("margins", "categorical")) {
    throw ConfigError("[margins] covariates given but [data] scale is copula");
  }

  // holdout cells become missing for every later stage
  Eigen::MatrixXd values = ld.values;
  TextTable holdout;
  holdout.header = {"margin", "t", "u", "y"};
  std::vector<std::pair<int, int>> held;
  for (int j : holdout_margins)
    for (int t_ = T - static_cast<int>(last); t_ < T; ++t_)
      if (std::isfinite(values(t_, j))) {
        held.emplace_back(j, t_);
        values(t_, j) = std::numeric_limits<double>::quiet_NaN();
      }
  for (int j = 0; j < d; ++j)
    if (!values.col(j).array().isFinite().any())
      throw ConfigError("margin " + ld.names[j] + " has no observed values after the holdout");

  ensure_dir(out);
  Eigen::MatrixXd u(T, d);
  std::vector<MarginalModel> margins;
  if (ld.data_scale) {
    for (int j = 0; j < d; ++j) {
      MarginalModel m;
      try {
        m = fit_margin(values.col(j), cd.x.topRows(T), cd.specs, mopts);
      } catch (const FitError& e) {
        throw FitError("margin " + ld.names[j] + ": " + e.what());
      }
      u.col(j) = residuals_to_copula(m, values.col(j), cd.x.topRows(T));
      std::ofstream os(out / ("margin_" + std::to_string(j + 1) + ".txt"));
      if (!os) throw IoError("cannot write margin model to " + out.string());
      write_margin(os, m);
      margins.push_back(std::move(m));
    }
  } else {
    u = values;
    for (int j = 0; j < d; ++j) fs::remove(out / ("margin_" + std::to_string(j + 1) + ".txt"));
  }
  for (const auto& [j, t_] : held) {
    const double y = ld.values(t_, j);
    double uu;
    if (ld.data_scale) {
      const double f = margins[j].fitted_at(cd.x.row(t_).transpose());
      uu = clamp_uniform(normal_cdf((boxcox(y, margins[j].lambda) - f) / margins[j].sigma));
      holdout.rows.push_back({std::to_string(j + 1), std::to_string(t_ + 1), format_double(uu), format_double(y)});
    } else {
      uu = y;
      holdout.rows.push_back(
          {std::to_string(j + 1), std::to_string(t_ + 1), format_double(uu), format_double(normal_quantile(uu))});
    }
  }
  write_csv(out / "holdout.csv", holdout);

  CopulaScaleData data;
  data.u = u;
  data.observed = u.array().isFinite();
  for (int t_ = 0; t_ < T; ++t_)
    for (int j = 0; j < d; ++j)
      if (!data.observed(t_, j)) data.u(t_, j) = 0.5;
  NumericTable ut;
  ut.header = ld.names;
  ut.values = u;
  write_csv(out / "data_copula.csv", ut);

  {
    std::ofstream os(out / "fit_info.txt");
    if (!os) throw IoError("cannot write " + (out / "fit_info.txt").string());
    os << "[fit]\nscale = " << (ld.data_scale ? "data" : "copula") << "\n";
    if (const auto cov = cfg.get("data", "covariates")) os << "covariates = " << fs::absolute(*cov).string() << "\n";
    for (const char* key : {"spline", "linear", "categorical"})
      if (const auto v = cfg.get("margins", key)) os << key << " = " << *v << "\n";
  }

  const PosteriorDraws draws = fit(data, families, scfg);
  const bool with_latent = cfg.get_string("sampler", "write_latent", "true") != "false";
  write_draws(out, draws, with_latent);

  TextTable summary;
  summary.header = {"parameter", "mean", "q2.5", "q50", "q97.5", "ess", "rhat", "mode", "mode_prob"};
  const auto freqs = draws.family_frequencies();
  const auto modes = draws.family_modes();
  auto tau_row = [&](const std::string& name, const Eigen::VectorXd& x, int fam_row, const ParameterDiagnostics& pd) {
    const double p_mode = *std::max_element(freqs[fam_row].begin(), freqs[fam_row].end());
    summary.rows.push_back({name, format_double(x.mean()), format_double(empirical_quantile(x, 0.025)),
                            format_double(empirical_quantile(x, 0.5)), format_double(empirical_quantile(x, 0.975)),
                            format_double(pd.ess), format_double(pd.rhat), std::string(kind_name(modes[fam_row])),
                            format_double(p_mode)});
  };
  for (int j = 0; j < d; ++j) tau_row("tau_obs_" + std::to_string(j + 1), draws.tau_obs.col(j), j, draws.diagnostics[j]);
  tau_row("tau_lat", draws.tau_lat, d, draws.diagnostics[d]);
  write_csv(out / "summary.csv", summary);

  TextTable fam;
  fam.header = {"indicator"};
  for (auto k : families) fam.header.emplace_back(kind_name(k));
  for (int j = 0; j <= d; ++j) {
    std::vector<std::string> row{j < d ? "m_obs_" + std::to_string(j + 1) : "m_lat"};
    for (double f : freqs[j]) row.push_back(format_double(f));
    fam.rows.push_back(std::move(row));
  }
  write_csv(out / "families.csv", fam);

  TextTable diag;
  diag.header = {"parameter", "mean", "ess", "rhat"};
  for (const auto& pd : draws.diagnostics)
    diag.rows.push_back({pd.name, format_double(pd.mean), format_double(pd.ess), format_double(pd.rhat)});
  write_csv(out / "diagnostics.csv", diag);

  TextTable sampler_stats;
  sampler_stats.header = {"chain", "step_size", "divergences", "mean_accept"};
  const int keep = scfg.iterations - scfg.warmup;
  for (int c = 0; c < scfg.chains; ++c) {
    double acc = 0.0;
    for (int i = 0; i < keep; ++i) acc += draws.accept_stat[c * keep + i];
    sampler_stats.rows.push_back({std::to_string(c + 1), format_double(draws.step_size[c]),
                                  std::to_string(draws.chain_divergences[c]), format_double(acc / keep)});
  }
  write_csv(out / "sampler.csv", sampler_stats);

  for (const auto& w : draws.warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------
// predict

void cmd_predict(const ConfigFile& cfg, const fs::path& out) {
  const fs::path fit_dir = cfg.get_string("predict", "fit_dir", out.string());
  const std::string target = cfg.get_string("predict", "target", "missing");
  if (target != "missing" && target != "all" && target != "horizon")
    throw ConfigError("[predict] target must be missing, all or horizon");
  const long long horizon = cfg.get_int("predict", "horizon", target == "horizon" ? 1 : 0);
  if (target == "horizon" && horizon < 1) throw RangeError("[predict] horizon must be >= 1");

  const PosteriorDraws draws = read_draws(fit_dir);
  const NumericTable u = read_numeric_csv(fit_dir / "data_copula.csv");
  if (u.values.rows() != draws.T || u.values.cols() != draws.d)
    throw CompletenessError("data_copula.csv does not match the fitted draws");
  const auto margins = load_margin_models(fit_dir, draws.d);

  Eigen::MatrixXd cov;
  if (!margins.empty()) {
    const ConfigFile info = ConfigFile::load(fit_dir / "fit_info.txt");
    if (const auto path = info.get("fit", "covariates")) {
      const NumericTable c = read_numeric_csv(*path);
      std::vector<std::string> names;
      for (const char* key : {"spline", "linear", "categorical"})
        for (const auto& n : info.get_list("fit", key)) names.push_back(n);
      cov.resize(c.values.rows(), static_cast<Eigen::Index>(names.size()));
      for (std::size_t k = 0; k < names.size(); ++k) {
        const auto it = std::find(c.header.begin(), c.header.end(), names[k]);
        if (it == c.header.end()) throw ConfigError("covariate " + names[k] + " missing from " + *path);
        cov.col(static_cast<Eigen::Index>(k)) = c.values.col(it - c.header.begin());
      }
    } else {
      cov.resize(draws.T + std::max<long long>(horizon, 0), 0);
    }
  }

  ensure_dir(out);
  Rng rng(derive_seed(run_seed(cfg), 0, kStreamPredict));
  std::vector<PredictiveSamples> samples;
  if (target == "horizon") {
    for (auto& per_h : predict_horizon(draws, static_cast<int>(horizon), rng))
      for (auto& s : per_h) samples.push_back(std::move(s));
  } else {
    for (int t_ = 0; t_ < draws.T; ++t_)
      for (int j = 0; j < draws.d; ++j)
        if (target == "all" || !std::isfinite(u.values(t_, j))) samples.push_back(predict_insample(draws, j, t_, rng));
  }

  NumericTable pred;
  pred.header = {"margin", "t", "draw", "u", "y"};
  NumericTable bands;
  bands.header = {"margin", "t", "q05", "q50", "q95"};
  const auto R = draws.size();
  pred.values.resize(static_cast<Eigen::Index>(samples.size()) * R, 5);
  bands.values.resize(static_cast<Eigen::Index>(samples.size()), 5);
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    auto& ps = samples[s];
    Eigen::VectorXd y(R);
    if (margins.empty()) {
      for (int r = 0; r < R; ++r) y[r] = normal_quantile(ps.u[r]);
    } else {
      if (ps.t >= cov.rows())
        throw CompletenessError("covariates needed for t=" + std::to_string(ps.t + 1) + " are missing");
      y = to_data_scale(ps, margins[ps.margin], cov.row(ps.t).transpose());
    }
    ps.y = y;
    for (int r = 0; r < R; ++r, ++row) pred.values.row(row) << ps.margin + 1, ps.t + 1, r + 1, ps.u[r], y[r];
    const auto band = credible_band(y);
    bands.values.row(static_cast<Eigen::Index>(s)) << ps.margin + 1, ps.t + 1, band.lower, band.median, band.upper;
  }
  write_csv(out / "predictions.csv", pred);
  write_csv(out / "bands.csv", bands);
}

// ---------------------------------------------------------------------------
// score

void cmd_score(const ConfigFile& cfg, const fs::path& out) {
  const auto truth_path = cfg.get("score", "truth");
  if (!truth_path) throw ConfigError("[score] truth is required");
  const auto pred_items = cfg.get_list("score", "predictions");
  if (pred_items.empty()) throw ConfigError("[score] predictions is required (label=path, ...)");

  const TextTable truth = read_text_csv(*truth_path);
  const auto cm = truth.column("margin"), ct = truth.column("t"), cy = truth.column("y");
  std::vector<EvalCell> cells;
  int max_margin = 0;
  for (std::size_t r = 0; r < truth.rows.size(); ++r) {
    EvalCell c;
    c.margin = to_index(parse_cell(truth.rows[r][cm], r + 2, cm + 1), "truth margin", 1 << 20);
    c.t = to_index(parse_cell(truth.rows[r][ct], r + 2, ct + 1), "truth time", 1 << 30);
    c.truth = parse_cell(truth.rows[r][cy], r + 2, cy + 1);
    if (!std::isfinite(c.truth)) throw CompletenessError("truth value missing at row " + std::to_string(r + 2));
    max_margin = std::max(max_margin, c.margin + 1);
    cells.push_back(c);
  }
  if (cells.empty()) throw CompletenessError("no held-out cells to score in " + *truth_path);

  std::vector<ModelPredictions> models;
  std::set<std::string> labels;
  for (const auto& item : pred_items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw ConfigError("[score] predictions entries are label=path, got '" + item + "'");
    ModelPredictions mp;
    mp.label = item.substr(0, eq);
    if (!labels.insert(mp.label).second) throw ConfigError("[score] duplicate label " + mp.label);
    const NumericTable p = read_numeric_csv(item.substr(eq + 1));
    const auto idx = [&](const std::string& n) {
      const auto it = std::find(p.header.begin(), p.header.end(), n);
      if (it == p.header.end()) throw ParseError("predictions file lacks column " + n, 1, 0);
      return it - p.header.begin();
    };
    const auto pm = idx("margin"), pt = idx("t"), py = idx("y");
    for (Eigen::Index r = 0; r < p.values.rows(); ++r) {
      const int j = to_index(p.values(r, pm), "prediction margin", 1 << 20);
      const int t_ = to_index(p.values(r, pt), "prediction time", 1 << 30);
      mp.samples[{j, t_}].push_back(p.values(r, py));
    }
    models.push_back(std::move(mp));
  }

  const ScoreReport rep = cumulative_crps(cells, models);
  ensure_dir(out);
  TextTable report;
  report.header = {"model"};
  for (int m : rep.margins) report.header.push_back("margin_" + std::to_string(m + 1));
  for (std::size_t i = 0; i < rep.models.size(); ++i) {
    std::vector<std::string> row{rep.models[i]};
    for (Eigen::Index c = 0; c < rep.cumulative.cols(); ++c)
      row.push_back(format_double(rep.cumulative(static_cast<Eigen::Index>(i), c)));
    report.rows.push_back(std::move(row));
  }
  std::vector<std::string> best{"best"};
  for (int b : rep.best) best.push_back(rep.models[b]);
  report.rows.push_back(std::move(best));
  write_csv(out / "report.csv", report);

  TextTable cell_table;
  cell_table.header = {"model", "margin", "t", "crps"};
  for (const auto& c : rep.cells)
    cell_table.rows.push_back({c.model, std::to_string(c.margin + 1), std::to_string(c.t + 1), format_double(c.crps)});
  write_csv(out / "crps_cells.csv", cell_table);
}

// ---------------------------------------------------------------------------
// contours

void cmd_contours(const ConfigFile& cfg, const fs::path& out) {
  const std::string source = cfg.get_string("contours", "source", "model");
  ModelParams params;
  if (source == "model") {
    params = model_from_config(cfg);
  } else if (source == "fit") {
    const PosteriorDraws draws = read_draws(cfg.get_string("contours", "fit_dir", out.string()));
    const auto modes = draws.family_modes();
    params.m_obs.assign(modes.begin(), modes.begin() + draws.d);
    params.m_lat = modes.back();
    params.tau_obs = draws.tau_obs.colwise().mean().transpose();
    params.tau_lat = draws.tau_lat.mean();
  } else {
    throw ConfigError("[contours] source must be model or fit");
  }
  const double lo = cfg.get_double("contours", "grid_min", -3.0);
  const double hi = cfg.get_double("contours", "grid_max", 3.0);
  const long long n = cfg.get_int("contours", "grid_points", 41);
  if (!(lo < hi) || n < 2) throw ConfigError("[contours] grid needs grid_min < grid_max and grid_points >= 2");
  MarginQuadrature q;
  q.nodes = static_cast<int>(cfg.get_int("contours", "nodes", q.nodes));
  q.normal_range = cfg.get_double("contours", "normal_range", q.normal_range);
  if (q.nodes < 2 || !(q.normal_range > 0.0)) throw ConfigError("[contours] invalid quadrature settings");

  Eigen::VectorXd z(n), ug(n), phi(n);
  for (long long i = 0; i < n; ++i) {
    z[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    ug[i] = normal_cdf(z[i]);
    phi[i] = normal_pdf(z[i]);
  }
  ensure_dir(out);
  const int d = params.d();

  NumericTable cross;
  cross.header = {"margin_a", "margin_b", "z_a", "z_b", "density"};
  std::vector<Eigen::RowVectorXd> rows;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      const Eigen::MatrixXd c = bivariate_margin_density_crosssection_grid(a, b, params, ug, q);
      for (long long i = 0; i < n; ++i)
        for (long long k = 0; k < n; ++k) {
          Eigen::RowVectorXd r(5);
          r << a + 1, b + 1, z[i], z[k], c(i, k) * phi[i] * phi[k];
          rows.push_back(r);
        }
    }
  cross.values.resize(static_cast<Eigen::Index>(rows.size()), 5);
  for (std::size_t i = 0; i < rows.size(); ++i) cross.values.row(static_cast<Eigen::Index>(i)) = rows[i];
  write_csv(out / "contours_cross.csv", cross);

  NumericTable temporal;
  temporal.header = {"margin", "z_prev", "z", "density"};
  temporal.values.resize(static_cast<Eigen::Index>(d) * n * n, 4);
  Eigen::Index row = 0;
  for (int j = 0; j < d; ++j) {
    const Eigen::MatrixXd c = bivariate_margin_density_temporal_grid(j, params, ug, q);
    for (long long k = 0; k < n; ++k)    // z_prev
      for (long long i = 0; i < n; ++i)  // z
        temporal.values.row(row++) << j + 1, z[k], z[i], c(i, k) * phi[i] * phi[k];
  }
  write_csv(out / "contours_temporal.csv", temporal);
}

}  // namespace cssm
