#include "cssm/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cssm/errors.hpp"

namespace cssm {

void NutsConfig::validate() const {
  if (iterations < 1) throw ConfigError("sampler: iterations must be >= 1");
  if (warmup < 0 || warmup >= iterations) throw ConfigError("sampler: warmup must satisfy 0 <= warmup < iterations");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("sampler: target_accept must lie in (0, 1)");
  if (max_tree_depth < 0) throw ConfigError("sampler: max_tree_depth must be >= 0");
  if (!(init_jitter >= 0.0)) throw ConfigError("sampler: init_jitter must be >= 0");
  if (init_attempts < 1) throw ConfigError("sampler: init_attempts must be >= 1");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double lp = kNegInf;
};

// Dual averaging of log step size.
class StepSizeAdaptation {
 public:
  void restart(double eps) {
    mu_ = std::log(10.0 * eps);
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }
  double learn(double accept_stat, double delta) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(static_cast<double>(counter_)) / kGamma;
    const double x_eta = std::pow(static_cast<double>(counter_), -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_ = 0.0;
  int counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Diagonal metric estimation over windows of doubling size.
class MetricAdaptation {
 public:
  MetricAdaptation(int dim, int num_warmup) : num_warmup_(num_warmup), mean_(Eigen::VectorXd::Zero(dim)),
                                             m2_(Eigen::VectorXd::Zero(dim)) {
    if (num_warmup < 20) {
      enabled_ = false;
      return;
    }
    if (init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
      init_buffer_ = static_cast<int>(0.15 * num_warmup);
      term_buffer_ = static_cast<int>(0.1 * num_warmup);
      base_window_ = num_warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  /// Adds a warmup draw; returns true when the metric was updated.
  bool learn(const Eigen::VectorXd& q, Eigen::VectorXd& inv_metric) {
    if (!enabled_) {
      ++counter_;
      return false;
    }
    if (in_window()) add(q);
    if (end_of_window()) {
      compute_next_window();
      const double n = static_cast<double>(n_);
      Eigen::VectorXd var = m2_ / (n - 1.0);
      inv_metric = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
      n_ = 0;
      mean_.setZero();
      m2_.setZero();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < num_warmup_ - term_buffer_ && counter_ != num_warmup_;
  }
  bool end_of_window() const { return counter_ == next_window_ && counter_ != num_warmup_; }
  void compute_next_window() {
    if (next_window_ == num_warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != num_warmup_ - term_buffer_ - 1) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= num_warmup_ - term_buffer_) next_window_ = num_warmup_ - term_buffer_ - 1;
    }
  }
  void add(const Eigen::VectorXd& q) {
    ++n_;
    const Eigen::VectorXd delta = q - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(q - mean_);
  }

  bool enabled_ = true;
  int num_warmup_;
  int init_buffer_ = 75;
  int term_buffer_ = 50;
  int base_window_ = 25;
  int window_size_ = 25;
  int next_window_ = 0;
  int counter_ = 0;
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

class Nuts {
 public:
  Nuts(const LogDensityFn& target, const NutsConfig& cfg, Rng& rng, int dim)
      : target_(target), cfg_(cfg), rng_(rng), inv_metric_(Eigen::VectorXd::Ones(dim)) {}

  bool evaluate(PhasePoint& z) const {
    try {
      z.lp = target_(z.q, z.grad);
    } catch (const std::exception&) {
      z.lp = kNegInf;
      return false;
    }
    if (!std::isfinite(z.lp) || !z.grad.allFinite()) {
      z.lp = kNegInf;
      return false;
    }
    return true;
  }

  double hamiltonian(const PhasePoint& z) const {
    if (!std::isfinite(z.lp)) return std::numeric_limits<double>::infinity();
    return -z.lp + 0.5 * z.p.cwiseProduct(inv_metric_).dot(z.p);
  }

  Eigen::VectorXd p_sharp(const PhasePoint& z) const { return inv_metric_.cwiseProduct(z.p); }

  void sample_momentum(PhasePoint& z) {
    for (Eigen::Index i = 0; i < z.p.size(); ++i) z.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
  }

  void leapfrog(PhasePoint& z, double eps) const {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    if (!evaluate(z)) return;
    z.p += 0.5 * eps * z.grad;
  }

  double uniform() { return unif_(rng_); }

  void init_stepsize(PhasePoint& z) {
    const PhasePoint z_init = z;
    sample_momentum(z);
    double h0 = hamiltonian(z);
    leapfrog(z, eps_);
    double h = hamiltonian(z);
    if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
    const double log08 = std::log(0.8);
    const int direction = (h0 - h) > log08 ? 1 : -1;
    for (int it = 0; it < 100; ++it) {
      z = z_init;
      sample_momentum(z);
      h0 = hamiltonian(z);
      leapfrog(z, eps_);
      h = hamiltonian(z);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      const double delta_h = h0 - h;
      if (direction == 1 && !(delta_h > log08)) break;
      if (direction == -1 && !(delta_h < log08)) break;
      eps_ = direction == 1 ? 2.0 * eps_ : 0.5 * eps_;
      if (eps_ > 1e7 || eps_ == 0.0) break;
    }
    eps_ = std::clamp(eps_, 1e-10, 1e7);
    z = z_init;
  }

  static bool criterion(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                        const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  // Recursive trajectory extension; mirrors the doubling scheme of the
  // multinomial NUTS with the generalized criterion checked across subtrees.
  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg,
                  Eigen::VectorXd& p_end, double h0, double sign, int& n_leapfrog,
                  double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      leapfrog(z, sign * eps_);
      ++n_leapfrog;
      double h = hamiltonian(z);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0 > cfg_.max_delta_h) divergent_ = true;
      log_sum_weight = logaddexp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = p_sharp(z);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    const Eigen::Index n = z.q.size();
    double log_sum_weight_init = kNegInf;
    Eigen::VectorXd p_init_end(n), p_sharp_init_end(n), rho_init = Eigen::VectorXd::Zero(n);
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end,
                    h0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob))
      return false;

    PhasePoint z_propose_final = z;
    double log_sum_weight_final = kNegInf;
    Eigen::VectorXd p_final_beg(n), p_sharp_final_beg(n), rho_final = Eigen::VectorXd::Zero(n);
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg,
                    p_end, h0, sign, n_leapfrog, log_sum_weight_final, sum_metro_prob))
      return false;

    const double log_sum_weight_subtree = logaddexp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = logaddexp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && criterion(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  struct Transition {
    double accept_stat = 0.0;
    int depth = 0;
    int n_leapfrog = 0;
    bool divergent = false;
  };

  Transition transition(PhasePoint& z_current) {
    const Eigen::Index n = z_current.q.size();
    PhasePoint z = z_current;
    sample_momentum(z);
    divergent_ = false;

    PhasePoint z_fwd = z, z_bck = z, z_sample = z, z_propose = z;
    Eigen::VectorXd p_fwd_fwd = z.p, p_fwd_bck = z.p, p_bck_fwd = z.p, p_bck_bck = z.p;
    const Eigen::VectorXd ps = p_sharp(z);
    Eigen::VectorXd p_sharp_fwd_fwd = ps, p_sharp_fwd_bck = ps, p_sharp_bck_fwd = ps, p_sharp_bck_bck = ps;
    Eigen::VectorXd rho = z.p;
    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z);
    int n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    int depth = 0;
    const int max_depth = std::max(1, cfg_.max_tree_depth);

    while (depth < max_depth) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(n), rho_bck = Eigen::VectorXd::Zero(n);
      bool valid_subtree;
      double log_sum_weight_subtree = kNegInf;
      if (uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        PhasePoint zz = z_fwd;
        valid_subtree = build_tree(depth, zz, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                                   p_fwd_fwd, h0, 1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_fwd = zz;
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        PhasePoint zz = z_bck;
        valid_subtree = build_tree(depth, zz, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                                   p_bck_bck, h0, -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_bck = zz;
      }
      if (!valid_subtree) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = logaddexp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    z_current = z_sample;
    Transition t;
    t.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
    t.depth = depth;
    t.n_leapfrog = n_leapfrog;
    t.divergent = divergent_;
    return t;
  }

  double& step_size() { return eps_; }
  Eigen::VectorXd& inv_metric() { return inv_metric_; }

 private:
  const LogDensityFn& target_;
  const NutsConfig& cfg_;
  Rng& rng_;
  Eigen::VectorXd inv_metric_;
  double eps_ = 1.0;
  bool divergent_ = false;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace

NutsChain nuts_sample(const LogDensityFn& target, const Eigen::VectorXd& init, const NutsConfig& cfg, Rng& rng) {
  cfg.validate();
  const Eigen::Index dim = init.size();
  if (dim < 1) throw DomainError("nuts_sample: empty parameter vector");
  Nuts nuts(target, cfg, rng, static_cast<int>(dim));

  PhasePoint z;
  z.p = Eigen::VectorXd::Zero(dim);
  z.grad = Eigen::VectorXd::Zero(dim);
  std::uniform_real_distribution<double> jitter(-cfg.init_jitter, cfg.init_jitter);
  bool ok = false;
  for (int attempt = 0; attempt < cfg.init_attempts && !ok; ++attempt) {
    z.q = init;
    if (cfg.init_jitter > 0.0)
      for (Eigen::Index i = 0; i < dim; ++i) z.q[i] += jitter(rng);
    ok = nuts.evaluate(z);
  }
  if (!ok)
    throw InitializationError("target log density is not finite at the initial point after " +
                              std::to_string(cfg.init_attempts) + " jittered attempts");

  NutsChain out;
  out.initial_point = z.q;
  const int keep = cfg.iterations - cfg.warmup;
  out.draws.resize(keep, dim);
  out.log_density.reserve(keep);

  nuts.init_stepsize(z);
  StepSizeAdaptation step_adapt;
  step_adapt.restart(nuts.step_size());
  MetricAdaptation metric_adapt(static_cast<int>(dim), cfg.warmup);

  for (int it = 0; it < cfg.iterations; ++it) {
    const auto tr = nuts.transition(z);
    if (it < cfg.warmup) {
      nuts.step_size() = step_adapt.learn(tr.accept_stat, cfg.target_accept);
      if (metric_adapt.learn(z.q, nuts.inv_metric())) {
        nuts.init_stepsize(z);
        step_adapt.restart(nuts.step_size());
      }
      if (it == cfg.warmup - 1) nuts.step_size() = step_adapt.final_step();
      continue;
    }
    const int r = it - cfg.warmup;
    out.draws.row(r) = z.q.transpose();
    out.log_density.push_back(z.lp);
    out.accept_stat.push_back(tr.accept_stat);
    out.tree_depth.push_back(tr.depth);
    out.n_leapfrog.push_back(tr.n_leapfrog);
    out.divergent.push_back(tr.divergent);
    if (tr.divergent) ++out.divergences;
  }
  out.step_size = nuts.step_size();
  out.inv_metric = nuts.inv_metric();
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

namespace {

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double autocov(const std::vector<double>& x, double mean, std::size_t lag) {
  double s = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(x.size());
}

}  // namespace

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) return 0.0;
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  if (n < 4) return static_cast<double>(m * n);
  for (const auto& c : chains)
    if (c.size() != n) throw DomainError("effective_sample_size: chains differ in length");

  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    vars[c] = var_of(chains[c]);
  }
  const double w = mean_of(vars);
  if (!(w > 0.0)) return static_cast<double>(m * n);
  const double b_over_n = m > 1 ? var_of(means) : 0.0;
  const double var_plus = w * (n - 1.0) / n + b_over_n;

  auto rho_at = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov += autocov(chains[c], means[c], lag);
    acov /= static_cast<double>(m);
    // Chain variances use the n denominator in autocov; rescale lag 0 consistently.
    const double w_n = w * (n - 1.0) / n;
    return 1.0 - (w_n - acov) / var_plus;
  };

  // Geyer's initial positive and monotone sequence.
  double sum_pairs = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  double rho0 = rho_at(0);
  std::size_t lag = 0;
  while (lag + 1 < n) {
    const double r_even = lag == 0 ? rho0 : rho_at(lag);
    const double r_odd = rho_at(lag + 1);
    double pair = r_even + r_odd;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    sum_pairs += pair;
    lag += 2;
  }
  const double tau_int = -1.0 + 2.0 * sum_pairs;
  const double ess = static_cast<double>(m * n) / std::max(tau_int, 1.0 / std::log10(static_cast<double>(m * n)));
  return ess;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(c.begin(), c.begin() + h);
    halves.emplace_back(c.end() - h, c.end());
  }
  const double n = static_cast<double>(halves.front().size());
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    vars.push_back(var_of(h));
  }
  const double w = mean_of(vars);
  const double b = n * var_of(means);
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

}  // namespace cssm
