#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <string>
#include <vector>

#include "cssm/config.hpp"
#include "cssm/copula.hpp"
#include "cssm/errors.hpp"
#include "cssm/gauss_oracle.hpp"
#include "cssm/margins.hpp"
#include "cssm/model.hpp"
#include "cssm/pipeline.hpp"
#include "cssm/predict.hpp"
#include "cssm/sampler.hpp"
#include "cssm/score.hpp"

namespace py = pybind11;
using namespace cssm;

namespace {

CopulaSpec spec_of(const std::string& family, double tau) {
  const Family f = parse_family(family);
  if (family.find('@') == std::string::npos) return CopulaSpec::auto_rotated(f.kind, tau);
  return CopulaSpec(f, tau);
}

std::vector<FamilyKind> kinds(const std::vector<std::string>& names) {
  std::vector<FamilyKind> out;
  for (const auto& n : names) out.push_back(parse_kind(n));
  return out;
}

std::vector<std::string> names(const std::vector<FamilyKind>& ks) {
  std::vector<std::string> out;
  for (auto k : ks) out.emplace_back(kind_name(k));
  return out;
}

ModelParams params_of(const std::vector<std::string>& m_obs, const Eigen::VectorXd& tau_obs,
                      const std::string& m_lat, double tau_lat) {
  ModelParams p;
  p.m_obs = kinds(m_obs);
  p.tau_obs = tau_obs;
  p.m_lat = parse_kind(m_lat);
  p.tau_lat = tau_lat;
  return p;
}

CopulaScaleData data_of(const Eigen::MatrixXd& u) {
  CopulaScaleData d;
  d.u = u;
  d.observed = u.array().isFinite();
  for (Eigen::Index t = 0; t < u.rows(); ++t)
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      if (!d.observed(t, j)) d.u(t, j) = 0.5;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Copula state space model core";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_IndexError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<CompletenessError>(m, "CompletenessError", PyExc_RuntimeError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);

  m.def("tau_to_theta", [](const std::string& family, double tau) { return tau_to_theta(spec_of(family, tau)); },
        py::arg("family"), py::arg("tau"));
  m.def("density", [](const std::string& family, double tau, double u, double v) {
    return density(spec_of(family, tau), u, v);
  }, py::arg("family"), py::arg("tau"), py::arg("u"), py::arg("v"));
  m.def("hfunc", [](const std::string& family, double tau, double u, double v) {
    return hfunc(spec_of(family, tau), u, v);
  }, py::arg("family"), py::arg("tau"), py::arg("u"), py::arg("v"));
  m.def("hinv", [](const std::string& family, double tau, double p, double v) {
    return hinv(spec_of(family, tau), p, v);
  }, py::arg("family"), py::arg("tau"), py::arg("p"), py::arg("v"));

  m.def("kalman_loglik", [](const Eigen::VectorXd& rho_obs, double rho_lat, const Eigen::MatrixXd& z) {
    GaussSSMParams p{rho_obs, rho_lat};
    Mask obs = z.array().isFinite();
    Eigen::MatrixXd zz = z;
    for (Eigen::Index t = 0; t < z.rows(); ++t)
      for (Eigen::Index j = 0; j < z.cols(); ++j)
        if (!obs(t, j)) zz(t, j) = 0.0;
    return kalman_loglik(p, zz, obs);
  }, py::arg("rho_obs"), py::arg("rho_lat"), py::arg("z"), "Gaussian state space log likelihood; NaN cells are missing.");

  m.def("simulate", [](const std::vector<std::string>& m_obs, const Eigen::VectorXd& tau_obs,
                       const std::string& m_lat, double tau_lat, int T, std::uint64_t seed) {
    Rng rng(seed);
    const auto sim = simulate(params_of(m_obs, tau_obs, m_lat, tau_lat), T, rng);
    return py::make_tuple(sim.data.u, sim.v);
  }, py::arg("m_obs"), py::arg("tau_obs"), py::arg("m_lat"), py::arg("tau_lat"), py::arg("T"), py::arg("seed") = 1,
     "Returns (u, v): T x d copula-scale data and the latent path.");

  m.def("log_posterior", [](const Eigen::MatrixXd& u, const Eigen::VectorXd& v, const std::vector<std::string>& m_obs,
                            const Eigen::VectorXd& tau_obs, const std::string& m_lat, double tau_lat) {
    auto p = params_of(m_obs, tau_obs, m_lat, tau_lat);
    p.v = v;
    return log_posterior(data_of(u), p);
  }, py::arg("u"), py::arg("v"), py::arg("m_obs"), py::arg("tau_obs"), py::arg("m_lat"), py::arg("tau_lat"));

  py::class_<PosteriorDraws>(m, "PosteriorDraws")
      .def_readonly("T", &PosteriorDraws::T)
      .def_readonly("d", &PosteriorDraws::d)
      .def_property_readonly("family_set", [](const PosteriorDraws& d) { return names(d.family_set); })
      .def_readonly("chain", &PosteriorDraws::chain)
      .def_readonly("tau_obs", &PosteriorDraws::tau_obs)
      .def_readonly("tau_lat", &PosteriorDraws::tau_lat)
      .def_readonly("v", &PosteriorDraws::v)
      .def_property_readonly("m_obs", [](const PosteriorDraws& d) {
        std::vector<std::vector<std::string>> out;
        for (const auto& row : d.m_obs) out.push_back(names(row));
        return out;
      })
      .def_property_readonly("m_lat", [](const PosteriorDraws& d) { return names(d.m_lat); })
      .def_readonly("log_post", &PosteriorDraws::log_post)
      .def_readonly("divergences", &PosteriorDraws::divergences)
      .def_readonly("warnings", &PosteriorDraws::warnings)
      .def("family_modes", [](const PosteriorDraws& d) { return names(d.family_modes()); })
      .def("__len__", &PosteriorDraws::size);

  m.def("fit", [](const Eigen::MatrixXd& u, const std::vector<std::string>& families, int iterations, int warmup,
                  int chains, std::uint64_t seed, int threads, double target_accept, int max_tree_depth) {
    SamplerConfig cfg;
    cfg.iterations = iterations;
    cfg.warmup = warmup;
    cfg.chains = chains;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.target_accept = target_accept;
    cfg.max_tree_depth = max_tree_depth;
    py::gil_scoped_release release;
    return fit(data_of(u), kinds(families), cfg);
  }, py::arg("u"), py::arg("families") = std::vector<std::string>{"gaussian", "t4", "clayton", "gumbel"},
     py::arg("iterations") = 3000, py::arg("warmup") = 1000, py::arg("chains") = 4, py::arg("seed") = 1,
     py::arg("threads") = 0, py::arg("target_accept") = 0.8, py::arg("max_tree_depth") = 10,
     "Posterior draws for copula-scale data u (T x d, NaN = missing).");

  m.def("predict_insample", [](const PosteriorDraws& d, int margin, int t, std::uint64_t seed) {
    Rng rng(seed);
    return predict_insample(d, margin, t, rng).u;
  }, py::arg("draws"), py::arg("margin"), py::arg("t"), py::arg("seed") = 1, "0-based margin and time index.");
  m.def("predict_oos", [](const PosteriorDraws& d, int margin, int t, std::uint64_t seed) {
    Rng rng(seed);
    return predict_oos(d, margin, t, rng).u;
  }, py::arg("draws"), py::arg("margin"), py::arg("t"), py::arg("seed") = 1, "t >= T (0-based).");

  m.def("crps", [](const std::vector<double>& samples, double y) { return crps_from_samples(samples, y); },
        py::arg("samples"), py::arg("y"));
  m.def("boxcox", &boxcox, py::arg("y"), py::arg("lam"));
  m.def("inv_boxcox", &inv_boxcox, py::arg("z"), py::arg("lam"));

  m.def("run", [](const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out) {
    ConfigFile cfg = ConfigFile::load(config);
    cfg.check(config_schema());
    py::gil_scoped_release release;
    if (command == "simulate") cmd_simulate(cfg, out);
    else if (command == "fit") cmd_fit(cfg, out);
    else if (command == "predict") cmd_predict(cfg, out);
    else if (command == "score") cmd_score(cfg, out);
    else if (command == "contours") cmd_contours(cfg, out);
    else throw ConfigError("unknown command " + command);
  }, py::arg("command"), py::arg("config"), py::arg("out"), "Runs a pipeline stage like the command-line tool.");
}
