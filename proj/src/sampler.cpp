#include "cssm/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"

namespace cssm {

void SamplerConfig::validate() const {
  nuts().validate();
  if (chains < 1) throw ConfigError("sampler: chains must be >= 1");
  if (threads < 0) throw ConfigError("sampler: threads must be >= 0");
}

NutsConfig SamplerConfig::nuts() const {
  NutsConfig n;
  n.iterations = iterations;
  n.warmup = warmup;
  n.target_accept = target_accept;
  n.max_tree_depth = max_tree_depth;
  return n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t chain, std::uint64_t stream) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = (seed ^ (chain * 0x9E3779B97F4A7C15ULL)) + stream * 0xD1B54A32D192ED03ULL;
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ModelParams PosteriorDraws::draw(int r) const {
  if (r < 0 || r >= size()) throw RangeError("draw index " + std::to_string(r) + " out of range");
  ModelParams p;
  p.v = v.row(r).transpose();
  p.tau_obs = tau_obs.row(r).transpose();
  p.tau_lat = tau_lat[r];
  p.m_obs = m_obs[r];
  p.m_lat = m_lat[r];
  return p;
}

std::vector<std::vector<double>> PosteriorDraws::family_frequencies() const {
  const std::size_t k = family_set.size();
  std::vector<std::vector<double>> f(d + 1, std::vector<double>(k, 0.0));
  auto index_of = [&](FamilyKind m) {
    return static_cast<std::size_t>(std::find(family_set.begin(), family_set.end(), m) - family_set.begin());
  };
  for (int r = 0; r < size(); ++r) {
    for (int j = 0; j < d; ++j) f[j][index_of(m_obs[r][j])] += 1.0;
    f[d][index_of(m_lat[r])] += 1.0;
  }
  if (size() > 0)
    for (auto& row : f)
      for (auto& x : row) x /= size();
  return f;
}

std::vector<FamilyKind> PosteriorDraws::family_modes() const {
  std::vector<FamilyKind> out;
  for (const auto& row : family_frequencies())
    out.push_back(family_set[std::max_element(row.begin(), row.end()) - row.begin()]);
  return out;
}

namespace {

// Initial latent scores: average normal scores, each margin oriented by the
// sign of its correlation with margin 1 so the path starts in the mode where
// tau_obs,1 > 0.
Eigen::VectorXd initial_scores(const CopulaScaleData& data) {
  const int T = data.T(), d = data.d();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(T, d);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j)
      if (data.observed(t, j)) z(t, j) = normal_quantile(clamp_uniform(data.u(t, j)));
  std::vector<double> sign(d, 1.0);
  for (int j = 1; j < d; ++j) {
    double c = 0.0;
    int n = 0;
    for (int t = 0; t < T; ++t)
      if (data.observed(t, 0) && data.observed(t, j)) {
        c += z(t, 0) * z(t, j);
        ++n;
      }
    if (n >= 3 && c < 0.0) sign[j] = -1.0;
  }
  Eigen::VectorXd s = Eigen::VectorXd::Zero(T);
  for (int t = 0; t < T; ++t) {
    int n = 0;
    for (int j = 0; j < d; ++j)
      if (data.observed(t, j)) {
        s[t] += sign[j] * z(t, j);
        ++n;
      }
    if (n > 0) s[t] /= n;
  }
  const double sd = std::sqrt((s.array() - s.mean()).square().mean());
  if (sd > 0.0) s /= sd;
  return s;
}

std::size_t draw_index(const std::vector<double>& p, Rng& rng) {
  const double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double c = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c += p[i];
    if (x < c) return i;
  }
  return p.size() - 1;
}

struct ChainResult {
  NutsChain nuts;
  std::vector<ContinuousParams> cont;
  std::vector<std::vector<FamilyKind>> m_obs;
  std::vector<FamilyKind> m_lat;
  std::vector<double> log_post;
};

}  // namespace

void sample_families(const CopulaScaleData& data, ModelParams& params,
                     const std::vector<FamilyKind>& family_set, Rng& rng) {
  params.m_obs.assign(data.d(), family_set.front());
  params.m_lat = family_set.front();
  const auto probs = gibbs_family_probs(data, params, family_set);
  for (int j = 0; j < data.d(); ++j) params.m_obs[j] = family_set[draw_index(probs.obs[j], rng)];
  params.m_lat = family_set[draw_index(probs.lat, rng)];
}

PosteriorDraws fit(const CopulaScaleData& data, const std::vector<FamilyKind>& family_set,
                   const SamplerConfig& cfg) {
  cfg.validate();
  data.validate();
  if (family_set.empty()) throw ConfigError("family set must not be empty");
  if (data.T() < 1 || data.d() < 1) throw ConfigError("data must have at least one row and one margin");
  for (int j = 0; j < data.d(); ++j)
    if (data.observed_count(j) == 0)
      throw ConfigError("margin " + std::to_string(j + 1) + " has no observed values");

  const MarginalizedPosterior target(data, family_set);
  const Reparametrization& rp = target.reparam();
  ContinuousParams start;
  start.v = Eigen::VectorXd::Constant(data.T(), 0.5);
  start.tau_obs = Eigen::VectorXd::Constant(data.d(), 0.1);
  start.tau_obs[0] = 0.5;
  start.tau_lat = 0.1;
  Eigen::VectorXd init = rp.unconstrain(start);
  init.head(data.T()) = initial_scores(data);
  const NutsConfig ncfg = cfg.nuts();
  const LogDensityFn fn = [&target](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return target.value_and_gradient(x, g);
  };

  std::vector<ChainResult> results(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  auto run_chain = [&](int c) {
    try {
      Rng rng(derive_seed(cfg.seed, c, 0));
      Rng gibbs_rng(derive_seed(cfg.seed, c, 1));
      ChainResult& res = results[c];
      res.nuts = nuts_sample(fn, init, ncfg, rng);
      const Eigen::Index n = res.nuts.draws.rows();
      for (Eigen::Index r = 0; r < n; ++r) {
        ModelParams p;
        ContinuousParams cp = rp.constrain(res.nuts.draws.row(r).transpose());
        p.v = cp.v;
        p.tau_obs = cp.tau_obs;
        p.tau_lat = cp.tau_lat;
        sample_families(data, p, family_set, gibbs_rng);
        res.log_post.push_back(log_posterior(data, p));
        res.m_obs.push_back(p.m_obs);
        res.m_lat.push_back(p.m_lat);
        res.cont.push_back(std::move(cp));
      }
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  int threads = cfg.threads;
  if (threads == 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, cfg.chains);
  if (threads <= 1) {
    for (int c = 0; c < cfg.chains; ++c) run_chain(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i)
      pool.emplace_back([&] {
        for (int c = next++; c < cfg.chains; c = next++) run_chain(c);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  PosteriorDraws out;
  out.T = data.T();
  out.d = data.d();
  out.family_set = family_set;
  const int keep = cfg.iterations - cfg.warmup;
  const int R = keep * cfg.chains;
  out.tau_obs.resize(R, out.d);
  out.tau_lat.resize(R);
  out.v.resize(R, out.T);
  for (int c = 0; c < cfg.chains; ++c) {
    const ChainResult& res = results[c];
    out.step_size.push_back(res.nuts.step_size);
    out.chain_divergences.push_back(res.nuts.divergences);
    out.divergences += res.nuts.divergences;
    for (int i = 0; i < keep; ++i) {
      const int r = c * keep + i;
      out.chain.push_back(c);
      out.iteration.push_back(i);
      out.tau_obs.row(r) = res.cont[i].tau_obs.transpose();
      out.tau_lat[r] = res.cont[i].tau_lat;
      out.v.row(r) = res.cont[i].v.transpose();
      out.m_obs.push_back(res.m_obs[i]);
      out.m_lat.push_back(res.m_lat[i]);
      out.log_post.push_back(res.log_post[i]);
      out.accept_stat.push_back(res.nuts.accept_stat[i]);
    }
  }

  auto diag = [&](const std::string& name, auto getter) {
    std::vector<std::vector<double>> per_chain(cfg.chains, std::vector<double>(keep));
    double sum = 0.0;
    for (int c = 0; c < cfg.chains; ++c)
      for (int i = 0; i < keep; ++i) {
        per_chain[c][i] = getter(c * keep + i);
        sum += per_chain[c][i];
      }
    ParameterDiagnostics pd;
    pd.name = name;
    pd.mean = sum / R;
    pd.ess = effective_sample_size(per_chain);
    pd.rhat = split_rhat(per_chain);
    out.diagnostics.push_back(pd);
  };
  for (int j = 0; j < out.d; ++j)
    diag("tau_obs_" + std::to_string(j + 1), [&](int r) { return out.tau_obs(r, j); });
  diag("tau_lat", [&](int r) { return out.tau_lat[r]; });
  for (int t = 0; t < out.T; ++t) diag("v_" + std::to_string(t + 1), [&](int r) { return out.v(r, t); });

  if (out.divergences > 0.01 * R)
    out.warnings.push_back(std::to_string(out.divergences) + " of " + std::to_string(R) +
                           " post-warmup draws ended in a divergence");
  for (const auto& pd : out.diagnostics)
    if (cfg.chains > 1 && keep >= 4 && pd.rhat > 1.05) {
      out.warnings.push_back("split R-hat above 1.05 for " + pd.name);
      break;
    }
  return out;
}

}  // namespace cssm
