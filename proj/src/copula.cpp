#include "cssm/copula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cssm/detail/kernels.hpp"
#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"

namespace cssm {

namespace {

// Below this theta the Clayton copula is evaluated as its first-order
// expansion around independence.
constexpr double kClaytonTinyTheta = 1e-9;
constexpr double kPi = std::numbers::pi;

bool is_asymmetric(FamilyKind kind) {
  return kind == FamilyKind::Clayton || kind == FamilyKind::Gumbel;
}

bool flips_sign(Rotation r) { return r == Rotation::R90 || r == Rotation::R270; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double logaddexp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(u^-theta + v^-theta - 1) from the logs of the arguments.
double clayton_log_a(double theta, double log_u, double log_v) {
  const double ma = -theta * log_u;
  const double mb = -theta * log_v;
  if (std::max(ma, mb) < 1.0) return std::log1p(std::expm1(ma) + std::expm1(mb));
  const double lse = logaddexp(ma, mb);
  return lse + std::log1p(-std::exp(-lse));
}

}  // namespace

double clamp_uniform(double u) {
  if (!std::isfinite(u)) throw DomainError("copula argument is not finite");
  return std::clamp(u, kUniformClamp, 1.0 - kUniformClamp);
}

std::string_view kind_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::StudentT4: return "t4";
    case FamilyKind::Clayton: return "clayton";
    case FamilyKind::Gumbel: return "gumbel";
  }
  return "unknown";
}

FamilyKind parse_kind(std::string_view name) {
  const std::string n = lower(trim(name));
  if (n == "gaussian") return FamilyKind::Gaussian;
  if (n == "t4") return FamilyKind::StudentT4;
  if (n == "clayton") return FamilyKind::Clayton;
  if (n == "gumbel") return FamilyKind::Gumbel;
  throw DomainError("unknown copula family '" + std::string(name) + "'");
}

std::string to_string(Family family) {
  std::string out(kind_name(family.kind));
  if (family.rotation != Rotation::R0) out += "@" + std::to_string(static_cast<int>(family.rotation));
  return out;
}

Family parse_family(std::string_view text) {
  const std::string t = trim(text);
  const auto at = t.find('@');
  Family f;
  f.kind = parse_kind(t.substr(0, at));
  if (at != std::string::npos) {
    const std::string rot = trim(t.substr(at + 1));
    if (rot == "0") f.rotation = Rotation::R0;
    else if (rot == "90") f.rotation = Rotation::R90;
    else if (rot == "180") f.rotation = Rotation::R180;
    else if (rot == "270") f.rotation = Rotation::R270;
    else throw DomainError("unknown rotation '" + rot + "' in family '" + t + "'");
  }
  return f;
}

std::vector<FamilyKind> parse_kind_list(std::string_view text) {
  std::vector<FamilyKind> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    const FamilyKind k = parse_kind(item);
    if (std::find(out.begin(), out.end(), k) != out.end())
      throw DomainError("family '" + trim(item) + "' listed twice");
    out.push_back(k);
  }
  if (out.empty()) throw DomainError("empty family list");
  return out;
}

CopulaSpec::CopulaSpec(Family family, double tau) : family_(family), tau_(tau) {
  const std::string name = to_string(family);
  if (!std::isfinite(tau) || std::abs(tau) >= 1.0 - kTauGuard) {
    throw DomainError("tau=" + std::to_string(tau) + " for family " + name +
                      " must satisfy |tau| < 1 - " + std::to_string(kTauGuard));
  }
  if (!is_asymmetric(family.kind)) {
    if (family.rotation != Rotation::R0)
      throw DomainError("family " + name + " supports rotation 0 only");
    return;
  }
  if (tau < 0.0 && !flips_sign(family.rotation))
    throw DomainError("family " + name + " requires rotation 90 or 270 for tau < 0");
  if (tau > 0.0 && flips_sign(family.rotation))
    throw DomainError("family " + name + " requires rotation 0 or 180 for tau > 0");
}

CopulaSpec CopulaSpec::auto_rotated(FamilyKind kind, double tau) {
  Family f{kind, Rotation::R0};
  if (is_asymmetric(kind) && tau < 0.0) f.rotation = Rotation::R90;
  return CopulaSpec(f, tau);
}

namespace {

double theta_from_abs_tau(FamilyKind kind, double tau) {
  switch (kind) {
    case FamilyKind::Gaussian:
    case FamilyKind::StudentT4: return std::sin(0.5 * kPi * tau);
    case FamilyKind::Clayton: return 2.0 * tau / (1.0 - tau);
    case FamilyKind::Gumbel: return 1.0 / (1.0 - tau);
  }
  return 0.0;
}

double dtheta_from_abs_tau(FamilyKind kind, double tau) {
  switch (kind) {
    case FamilyKind::Gaussian:
    case FamilyKind::StudentT4: return 0.5 * kPi * std::cos(0.5 * kPi * tau);
    case FamilyKind::Clayton: return 2.0 / ((1.0 - tau) * (1.0 - tau));
    case FamilyKind::Gumbel: return 1.0 / ((1.0 - tau) * (1.0 - tau));
  }
  return 0.0;
}

}  // namespace

double tau_to_theta(const CopulaSpec& spec) {
  const double t = flips_sign(spec.rotation()) ? -spec.tau() : spec.tau();
  return theta_from_abs_tau(spec.kind(), t);
}

double theta_to_tau(FamilyKind kind, double theta) {
  switch (kind) {
    case FamilyKind::Gaussian:
    case FamilyKind::StudentT4:
      if (!(std::abs(theta) < 1.0)) throw DomainError("correlation must lie in (-1, 1)");
      return 2.0 / kPi * std::asin(theta);
    case FamilyKind::Clayton:
      if (!(theta >= 0.0)) throw DomainError("Clayton theta must be >= 0");
      return theta / (theta + 2.0);
    case FamilyKind::Gumbel:
      if (!(theta >= 1.0)) throw DomainError("Gumbel theta must be >= 1");
      return 1.0 - 1.0 / theta;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Kernels

namespace detail {

ArgCache ArgCache::from_u(double u) {
  ArgCache c;
  const double uc = clamp_uniform(u);
  c.clamped = uc != u;
  c.u = uc;
  c.log_u = std::log(uc);
  c.log_1mu = std::log1p(-uc);
  c.lnl_u = std::log(-c.log_u);
  c.lnl_1mu = std::log(-c.log_1mu);
  c.z = normal_quantile(uc);
  c.logphi_z = normal_logpdf(c.z);
  c.x4 = t4_quantile(uc);
  c.logt4_x = t4_logpdf(c.x4);
  c.inv_phi = std::exp(-c.logphi_z);
  c.inv_t4 = std::exp(-c.logt4_x);
  c.inv_u = 1.0 / uc;
  c.inv_1mu = 1.0 / (1.0 - uc);
  return c;
}

ArgCache ArgCache::from_normal_score(double w) {
  if (!std::isfinite(w)) throw DomainError("latent normal score is not finite");
  // Outside this range Phi(w) falls below the clamp.
  static const double w_max = -normal_quantile(kUniformClamp);
  if (std::abs(w) >= w_max) {
    ArgCache c = from_u(w > 0 ? 1.0 - kUniformClamp : kUniformClamp);
    c.clamped = true;
    return c;
  }
  ArgCache c;
  c.z = w;
  c.logphi_z = normal_logpdf(w);
  c.u = normal_cdf(w);
  const double ubar = normal_cdf(-w);  // 1 - u without cancellation
  c.log_u = std::log(c.u);
  c.log_1mu = std::log(ubar);
  c.lnl_u = std::log(-c.log_u);
  c.lnl_1mu = std::log(-c.log_1mu);
  c.x4 = w > 0 ? -t4_quantile(ubar) : t4_quantile(c.u);
  c.logt4_x = t4_logpdf(c.x4);
  c.inv_phi = std::exp(-c.logphi_z);
  c.inv_t4 = std::exp(-c.logt4_x);
  c.inv_u = 1.0 / c.u;
  c.inv_1mu = 1.0 / ubar;
  return c;
}

KernelParams make_params(const CopulaSpec& spec) {
  KernelParams p;
  p.kind = spec.kind();
  p.rotation = spec.rotation();
  p.tau = spec.tau();
  const bool flip = flips_sign(spec.rotation());
  const double t = flip ? -spec.tau() : spec.tau();
  p.theta = theta_from_abs_tau(p.kind, t);
  p.dtheta_dtau = (flip ? -1.0 : 1.0) * dtheta_from_abs_tau(p.kind, t);
  if (p.kind == FamilyKind::Gaussian || p.kind == FamilyKind::StudentT4) {
    p.s = 1.0 - p.theta * p.theta;
    p.half_log_s = 0.5 * std::log(p.s);
  }
  if (p.kind == FamilyKind::Clayton) p.log1p_theta = std::log1p(p.theta);
  return p;
}

KernelParams make_params(FamilyKind kind, double tau) {
  Family f{kind, Rotation::R0};
  if (is_asymmetric(kind) && tau < 0.0) f.rotation = Rotation::R90;
  KernelParams p;
  p.kind = kind;
  p.rotation = f.rotation;
  p.tau = tau;
  const bool flip = f.rotation == Rotation::R90;
  const double t = flip ? -tau : tau;
  p.theta = theta_from_abs_tau(kind, t);
  p.dtheta_dtau = (flip ? -1.0 : 1.0) * dtheta_from_abs_tau(kind, t);
  if (kind == FamilyKind::Gaussian || kind == FamilyKind::StudentT4) {
    p.s = 1.0 - p.theta * p.theta;
    p.half_log_s = 0.5 * std::log(p.s);
  }
  if (p.kind == FamilyKind::Clayton) p.log1p_theta = std::log1p(p.theta);
  return p;
}

namespace {

// Base (unrotated) kernels. Return value, d/dtheta, d/du_a, d/du_b.
template <bool Grad>
Terms gaussian_kernel(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  const double rho = p.theta;
  const double s = p.s;
  const double za = a.z, zb = b.z;
  const double sq = za * za + zb * zb;
  const double n = rho * rho * sq - 2.0 * rho * za * zb;
  Terms t;
  t.value = -p.half_log_s - n / (2.0 * s);
  if constexpr (Grad) {
    const double dn = 2.0 * rho * sq - 2.0 * za * zb;
    t.d_tau = rho / s - dn / (2.0 * s) - n * rho / (s * s);
    t.d_a = a.clamped ? 0.0 : -(rho * rho * za - rho * zb) / s * a.inv_phi;
    t.d_b = b.clamped ? 0.0 : -(rho * rho * zb - rho * za) / s * b.inv_phi;
  }
  return t;
}

template <bool Grad>
Terms t4_kernel(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  constexpr double nu = kStudentDf;
  // lgamma(3) + lgamma(2) - 2 lgamma(2.5)
  static const double k0 = std::lgamma(3.0) + std::lgamma(2.0) - 2.0 * std::lgamma(2.5);
  static const double log_t4_const = std::log(0.375);
  const double rho = p.theta;
  const double s = p.s;
  const double xa = a.x4, xb = b.x4;
  const double q = xa * xa + xb * xb - 2.0 * rho * xa * xb;
  const double k = 1.0 + q / (nu * s);
  Terms t;
  // 2.5 log1p(x^2/4) = log(3/8) - log t4(x)
  t.value = k0 - p.half_log_s - 3.0 * std::log(k) + (log_t4_const - a.logt4_x) +
            (log_t4_const - b.logt4_x);
  if constexpr (Grad) {
    t.d_tau = rho / s - 3.0 * ((-2.0 * xa * xb * s + 2.0 * rho * q) / (nu * s * s)) / k;
    const double dxa = -3.0 * (2.0 * xa - 2.0 * rho * xb) / (nu * s * k) + 5.0 * xa / (4.0 + xa * xa);
    const double dxb = -3.0 * (2.0 * xb - 2.0 * rho * xa) / (nu * s * k) + 5.0 * xb / (4.0 + xb * xb);
    t.d_a = a.clamped ? 0.0 : dxa * a.inv_t4;
    t.d_b = b.clamped ? 0.0 : dxb * b.inv_t4;
  }
  return t;
}

template <bool Grad>
Terms clayton_kernel(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  const double th = p.theta;
  const double la = a.log_u, lb = b.log_u;
  Terms t;
  if (th < kClaytonTinyTheta) {
    t.value = th * (1.0 + la) * (1.0 + lb);
    if constexpr (Grad) t.d_tau = (1.0 + la) * (1.0 + lb);
    return t;
  }
  const double log_a = clayton_log_a(th, la, lb);
  t.value = p.log1p_theta - (1.0 + th) * (la + lb) - (2.0 + 1.0 / th) * log_a;
  if constexpr (Grad) {
    const double wa = std::exp(-th * la - log_a);  // u^-theta / A
    const double wb = std::exp(-th * lb - log_a);
    t.d_tau = 1.0 / (1.0 + th) - (la + lb) + log_a / (th * th) +
              (2.0 + 1.0 / th) * (la * wa + lb * wb);
    t.d_a = a.clamped ? 0.0 : (-(1.0 + th) + (2.0 * th + 1.0) * wa) * a.inv_u;
    t.d_b = b.clamped ? 0.0 : (-(1.0 + th) + (2.0 * th + 1.0) * wb) * b.inv_u;
  }
  return t;
}

template <bool Grad>
Terms gumbel_kernel(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  const double th = p.theta;
  const double lx = a.lnl_u, ly = b.lnl_u;  // log(-log u)
  const double log_a = logaddexp(th * lx, th * ly);
  const double m = std::exp(log_a / th);
  const double mt = m + th - 1.0;
  Terms t;
  t.value = -m - a.log_u - b.log_u + (th - 1.0) * (lx + ly) + (1.0 / th - 2.0) * log_a +
            std::log(mt);
  if constexpr (Grad) {
    // pa + pb = 1; exponentiate the smaller share to keep its relative precision
    double pa, pb;
    if (lx < ly) {
      pa = std::exp(th * lx - log_a);
      pb = 1.0 - pa;
    } else {
      pb = std::exp(th * ly - log_a);
      pa = 1.0 - pb;
    }
    const double d = pa * lx + pb * ly;
    const double dm = m * (d / th - log_a / (th * th));
    t.d_tau = -dm + lx + ly - log_a / (th * th) + (1.0 / th - 2.0) * d + (dm + 1.0) / mt;
    auto dlog_dx = [&](double w, double x) {
      return (-m * w + (th - 1.0) + (1.0 - 2.0 * th) * w + m * w / mt) / x;
    };
    const double x = -a.log_u, y = -b.log_u;
    t.d_a = a.clamped ? 0.0 : -(1.0 + dlog_dx(pa, x)) * a.inv_u;
    t.d_b = b.clamped ? 0.0 : -(1.0 + dlog_dx(pb, y)) * b.inv_u;
  }
  return t;
}

template <bool Grad>
Terms base_kernel(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  switch (p.kind) {
    case FamilyKind::Gaussian: return gaussian_kernel<Grad>(p, a, b);
    case FamilyKind::StudentT4: return t4_kernel<Grad>(p, a, b);
    case FamilyKind::Clayton: return clayton_kernel<Grad>(p, a, b);
    case FamilyKind::Gumbel: return gumbel_kernel<Grad>(p, a, b);
  }
  return {};
}

template <bool Grad>
Terms rotated_kernel(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  Terms t;
  switch (p.rotation) {
    case Rotation::R0: t = base_kernel<Grad>(p, a, b); break;
    case Rotation::R90:
      t = base_kernel<Grad>(p, a.flipped(), b);
      t.d_a = -t.d_a;
      break;
    case Rotation::R180:
      t = base_kernel<Grad>(p, a.flipped(), b.flipped());
      t.d_a = -t.d_a;
      t.d_b = -t.d_b;
      break;
    case Rotation::R270:
      t = base_kernel<Grad>(p, a, b.flipped());
      t.d_b = -t.d_b;
      break;
  }
  if constexpr (Grad) t.d_tau *= p.dtheta_dtau;
  return t;
}

}  // namespace

Terms log_density(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  return rotated_kernel<true>(p, a, b);
}

double log_density_value(const KernelParams& p, const ArgCache& a, const ArgCache& b) {
  return rotated_kernel<false>(p, a, b).value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public evaluation API

double log_density(const CopulaSpec& spec, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v)) throw DomainError("copula density: non-finite input");
  const auto p = detail::make_params(spec);
  return detail::log_density_value(p, detail::ArgCache::from_u(u), detail::ArgCache::from_u(v));
}

double density(const CopulaSpec& spec, double u, double v) { return std::exp(log_density(spec, u, v)); }

LogDensityGrad log_density_grad(const CopulaSpec& spec, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v)) throw DomainError("copula density: non-finite input");
  const auto p = detail::make_params(spec);
  const auto t =
      detail::log_density(p, detail::ArgCache::from_u(u), detail::ArgCache::from_u(v));
  return {t.value, t.d_tau, t.d_a, t.d_b};
}

namespace {

// h-function of the unrotated family, inputs already clamped.
double base_hfunc(FamilyKind kind, double theta, double u, double v) {
  switch (kind) {
    case FamilyKind::Gaussian: {
      const double s = 1.0 - theta * theta;
      return normal_cdf((normal_quantile(u) - theta * normal_quantile(v)) / std::sqrt(s));
    }
    case FamilyKind::StudentT4: {
      const double xu = t4_quantile(u), xv = t4_quantile(v);
      const double s = 1.0 - theta * theta;
      const double scale = std::sqrt((kStudentDf + xv * xv) * s / (kStudentDf + 1.0));
      return student_t_cdf((xu - theta * xv) / scale, kStudentDf + 1.0);
    }
    case FamilyKind::Clayton: {
      if (theta < kClaytonTinyTheta) return u;
      const double lu = std::log(u), lv = std::log(v);
      const double log_a = clayton_log_a(theta, lu, lv);
      return std::exp(-(theta + 1.0) * lv - (1.0 + 1.0 / theta) * log_a);
    }
    case FamilyKind::Gumbel: {
      if (theta == 1.0) return u;
      const double lx = std::log(-std::log(u)), ly = std::log(-std::log(v));
      const double log_a = logaddexp(theta * lx, theta * ly);
      const double m = std::exp(log_a / theta);
      return std::exp(-m - std::log(v) + (theta - 1.0) * ly + (1.0 / theta - 1.0) * log_a);
    }
  }
  return u;
}

double base_density(FamilyKind kind, double theta, double u, double v) {
  detail::KernelParams p;
  p.kind = kind;
  p.theta = theta;
  if (kind == FamilyKind::Gaussian || kind == FamilyKind::StudentT4) {
    p.s = 1.0 - theta * theta;
    p.half_log_s = 0.5 * std::log(p.s);
  }
  if (kind == FamilyKind::Clayton) p.log1p_theta = std::log1p(theta);
  return std::exp(detail::log_density_value(p, detail::ArgCache::from_u(u),
                                            detail::ArgCache::from_u(v)));
}

// Safeguarded Newton on u in [eps, 1 - eps], derivative = copula density.
double numeric_hinv(FamilyKind kind, double theta, double p, double v) {
  double lo = kUniformClamp, hi = 1.0 - kUniformClamp;
  const double f_lo = base_hfunc(kind, theta, lo, v) - p;
  if (f_lo >= 0.0) return lo;
  const double f_hi = base_hfunc(kind, theta, hi, v) - p;
  if (f_hi <= 0.0) return hi;
  double x = std::clamp(p, lo, hi);
  double fx = 0.0;
  for (int it = 0; it < 200; ++it) {
    fx = base_hfunc(kind, theta, x, v) - p;
    if (std::abs(fx) <= 4.0 * std::numeric_limits<double>::epsilon() * p) return x;
    if (fx > 0.0) hi = x; else lo = x;
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * x) return x;
    const double dens = base_density(kind, theta, x, v);
    double next = x - fx / dens;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    x = next;
  }
  throw NumericError("hinv root solve did not converge for " + std::string(kind_name(kind)), fx);
}

double base_hinv(FamilyKind kind, double theta, double p, double v) {
  switch (kind) {
    case FamilyKind::Gaussian: {
      const double s = 1.0 - theta * theta;
      return normal_cdf(theta * normal_quantile(v) + std::sqrt(s) * normal_quantile(p));
    }
    case FamilyKind::StudentT4: {
      const double xv = t4_quantile(v);
      const double s = 1.0 - theta * theta;
      const double scale = std::sqrt((kStudentDf + xv * xv) * s / (kStudentDf + 1.0));
      return t4_cdf(theta * xv + scale * student_t_quantile(p, kStudentDf + 1.0));
    }
    case FamilyKind::Clayton: {
      if (theta < kClaytonTinyTheta) return p;
      const double lv = std::log(v);
      const double a1 = -theta * lv - theta / (1.0 + theta) * std::log(p);
      const double a2 = -theta * lv;
      double log_inner;
      if (a1 < 1.0) {
        log_inner = std::log1p(std::expm1(a1) - std::expm1(a2));
      } else {
        log_inner = a1 + std::log(std::exp(-a1) - std::expm1(a2 - a1));
      }
      return std::exp(-log_inner / theta);
    }
    case FamilyKind::Gumbel:
      if (theta == 1.0) return p;
      return numeric_hinv(kind, theta, p, v);
  }
  return p;
}

}  // namespace

double hfunc(const CopulaSpec& spec, double u, double v) {
  u = clamp_uniform(u);
  v = clamp_uniform(v);
  const double theta = tau_to_theta(spec);
  const FamilyKind k = spec.kind();
  switch (spec.rotation()) {
    case Rotation::R0: return base_hfunc(k, theta, u, v);
    case Rotation::R90: return std::max(0.0, 1.0 - base_hfunc(k, theta, 1.0 - u, v));
    case Rotation::R180: return std::max(0.0, 1.0 - base_hfunc(k, theta, 1.0 - u, 1.0 - v));
    case Rotation::R270: return base_hfunc(k, theta, u, 1.0 - v);
  }
  return u;
}

double hinv(const CopulaSpec& spec, double p, double v) {
  // p is a probability, not a copula argument: keep its full tail resolution
  if (!std::isfinite(p)) throw DomainError("probability is not finite");
  p = std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
  v = clamp_uniform(v);
  const double theta = tau_to_theta(spec);
  const FamilyKind k = spec.kind();
  double u = p;
  switch (spec.rotation()) {
    case Rotation::R0: u = base_hinv(k, theta, p, v); break;
    case Rotation::R90: u = 1.0 - base_hinv(k, theta, 1.0 - p, v); break;
    case Rotation::R180: u = 1.0 - base_hinv(k, theta, 1.0 - p, 1.0 - v); break;
    case Rotation::R270: u = base_hinv(k, theta, p, 1.0 - v); break;
  }
  return clamp_uniform(u);
}

std::pair<double, double> sample_pair(const CopulaSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double v = clamp_uniform(unif(rng));
  const double w = unif(rng);
  return {hinv(spec, w, v), v};
}

}  // namespace cssm
