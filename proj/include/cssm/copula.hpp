#pragma once

// Bivariate one-parameter copula families parametrized by Kendall's tau.
//
// Every family is exchangeable at rotation 0. Rotations act on the
// arguments: 90 flips the first argument (u -> 1-u), 180 flips both and
// 270 flips the second. Clayton and Gumbel represent negative tau through
// the 90 degree rotation.

#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cssm {

using Rng = std::mt19937_64;

enum class FamilyKind { Gaussian, StudentT4, Clayton, Gumbel };
enum class Rotation { R0 = 0, R90 = 90, R180 = 180, R270 = 270 };

inline constexpr double kTauGuard = 1e-6;       // |tau| < 1 - kTauGuard
inline constexpr double kUniformClamp = 1e-10;  // arguments clamped to [c, 1-c]
inline constexpr double kStudentDf = 4.0;

struct Family {
  FamilyKind kind = FamilyKind::Gaussian;
  Rotation rotation = Rotation::R0;

  friend bool operator==(const Family&, const Family&) = default;
};

std::string_view kind_name(FamilyKind kind);
FamilyKind parse_kind(std::string_view name);
/// "gaussian", "t4", "clayton@90", ...
std::string to_string(Family family);
Family parse_family(std::string_view text);
/// Comma separated list of family kinds, e.g. "gaussian,t4,clayton,gumbel".
std::vector<FamilyKind> parse_kind_list(std::string_view text);

/// A validated (family, Kendall's tau) pair.
class CopulaSpec {
 public:
  CopulaSpec(Family family, double tau);

  /// Picks rotation 0 for tau >= 0 and 90 for tau < 0 (Clayton, Gumbel).
  static CopulaSpec auto_rotated(FamilyKind kind, double tau);

  Family family() const { return family_; }
  FamilyKind kind() const { return family_.kind; }
  Rotation rotation() const { return family_.rotation; }
  double tau() const { return tau_; }

 private:
  Family family_;
  double tau_;
};

/// Natural parameter: rho for Gaussian/t4, theta for Clayton/Gumbel. For the
/// rotated asymmetric families the map is applied to |tau|.
double tau_to_theta(const CopulaSpec& spec);
/// Inverse of tau_to_theta for an unrotated family of the given kind.
double theta_to_tau(FamilyKind kind, double theta);

double density(const CopulaSpec& spec, double u, double v);
double log_density(const CopulaSpec& spec, double u, double v);

/// P(U <= u | V = v).
double hfunc(const CopulaSpec& spec, double u, double v);
/// Solves hfunc(spec, u, v) = p for u.
double hinv(const CopulaSpec& spec, double p, double v);

/// (u, v) with v uniform and u drawn from the conditional given v.
std::pair<double, double> sample_pair(const CopulaSpec& spec, Rng& rng);

struct LogDensityGrad {
  double value = 0.0;
  double d_tau = 0.0;
  double d_u = 0.0;
  double d_v = 0.0;
};

LogDensityGrad log_density_grad(const CopulaSpec& spec, double u, double v);

double clamp_uniform(double u);

}  // namespace cssm
