#include "cssm/distributions.hpp"

#include <algorithm>
#include <limits>

#include "cssm/errors.hpp"

namespace cssm {

namespace {

double poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

}  // namespace

double normal_logcdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  // Asymptotic series of the Mills ratio.
  const double x2 = x * x;
  const double s = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return normal_logpdf(x) - std::log(-x) + std::log(s);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("normal_quantile: probability outside [0, 1]");
  }
  static const double a[] = {3.387132872796366608,   133.14166789178437745, 1971.5909503065514427,
                             13731.693765509461125,  45921.953931549871457, 67265.770927008700853,
                             33430.575583588128105,  2509.0809287301226727};
  static const double b[] = {1.0,                    42.313330701600911252, 687.1870074920579083,
                             5394.1960214247511077,  21213.794301586595867, 39307.89580009271061,
                             28729.085735721942674,  5226.495278852545925};
  static const double c[] = {1.42343711074968357734,  4.6303378461565452959,
                             5.7694972214606914055,   3.64784832476320460504,
                             1.27045825245236838258,  0.24178072517745061177,
                             0.0227238449892691845833, 7.7454501427834140764e-4};
  static const double d[] = {1.0,
                             2.05319162663775882187,
                             1.6763848301838038494,
                             0.68976733498510000455,
                             0.14810397642748007459,
                             0.0151986665636164571966,
                             5.475938084995344946e-4,
                             1.05075007164441684324e-9};
  static const double e[] = {6.6579046435011037772,    5.4637849111641143699,
                             1.7848265399172913358,    0.29656057182850489123,
                             0.026532189526576123093,  0.0012426609473880784386,
                             2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double f[] = {1.0,
                             0.59983220655588793769,
                             0.13692988092273580531,
                             0.0148753612908506148525,
                             7.868691311456132591e-4,
                             1.8463183175100546818e-5,
                             1.4215117583164458887e-7,
                             2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, 8, r) / poly(b, 8, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = poly(c, 8, r) / poly(d, 8, r);
  } else {
    r -= 5.0;
    val = poly(e, 8, r) / poly(f, 8, r);
  }
  return q < 0.0 ? -val : val;
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge", std::abs(h));
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (x < 0.0 || x > 1.0 || !(a > 0.0) || !(b > 0.0))
    throw DomainError("incomplete_beta: argument outside domain");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_logpdf(double x, double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double student_t_cdf(double x, double nu) {
  if (std::isnan(x)) throw DomainError("student_t_cdf: NaN argument");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  // P(|T| > |x|) = I_{nu/(nu+x^2)}(nu/2, 1/2); evaluated via the complement
  // form when x is small to keep relative accuracy near the centre.
  const double x2 = x * x;
  double tail;
  if (x2 < nu) {
    tail = 1.0 - incomplete_beta(x2 / (nu + x2), 0.5, 0.5 * nu);
  } else {
    tail = incomplete_beta(nu / (nu + x2), 0.5 * nu, 0.5);
  }
  return x > 0 ? 1.0 - 0.5 * tail : 0.5 * tail;
}

double student_t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: probability outside (0, 1)");
  if (p == 0.5) return 0.0;
  const bool upper = p > 0.5;
  const double target = upper ? 1.0 - p : p;
  // Solve F(x) = target on the lower half line with safeguarded Newton.
  double hi = 0.0;
  double lo = -1.0;
  while (student_t_cdf(lo, nu) > target) {
    hi = lo;
    lo *= 2.0;
    if (lo < -1e300) throw NumericError("student_t_quantile: bracket expansion failed", target);
  }
  double x = std::clamp(normal_quantile(target), lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = student_t_cdf(x, nu) - target;
    if (fx == 0.0) return upper ? -x : x;
    if (fx > 0.0) hi = x; else lo = x;
    double next = x - fx / std::exp(student_t_logpdf(x, nu));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x))) {
      x = next;
      return upper ? -x : x;
    }
    x = next;
  }
  throw NumericError("student_t_quantile: no convergence", student_t_cdf(x, nu) - target);
}

double t4_logpdf(double x) { return std::log(0.375) - 2.5 * std::log1p(0.25 * x * x); }

double t4_cdf(double x) {
  if (std::isnan(x)) throw DomainError("t4_cdf: NaN argument");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  // P(|T| > |x|) = (1 - r)^2 (2 + r) / 2 with r = |x| / sqrt(4 + x^2).
  const double ax = std::abs(x);
  const double s = std::sqrt(4.0 + x * x);
  const double r = ax / s;
  const double one_minus_r = 4.0 / (s * (s + ax));
  const double tail = 0.5 * one_minus_r * one_minus_r * (2.0 + r);
  return x > 0 ? 1.0 - 0.5 * tail : 0.5 * tail;
}

double t4_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("t4_quantile: probability outside (0, 1)");
  const double lower = p < 0.5 ? p : 1.0 - p;
  // Trigonometric solution of the cubic (1 - r)^2 (2 + r) = 4 p.
  const double phi = std::asin(1.0 - 2.0 * lower);
  const double cos_phi = 2.0 * std::sqrt(lower * (1.0 - lower));
  const double q_minus_1 = 2.0 * std::sin(2.0 * phi / 3.0) * std::sin(phi / 3.0) / cos_phi;
  const double x = 2.0 * std::sqrt(q_minus_1);
  return p < 0.5 ? -x : x;
}

double beta_logpdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace cssm
