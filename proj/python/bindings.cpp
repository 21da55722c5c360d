#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ensf_da/assimilation.hpp"
#include "ensf_da/config.hpp"
#include "ensf_da/enkf.hpp"
#include "ensf_da/error.hpp"
#include "ensf_da/experiments.hpp"
#include "ensf_da/forward_models.hpp"
#include "ensf_da/geometry.hpp"
#include "ensf_da/score_filter.hpp"

namespace py = pybind11;
using namespace ensf_da;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

Perimeter to_perimeter(const Points& xy) {
  std::vector<Vertex> v(static_cast<std::size_t>(xy.rows()));
  for (Eigen::Index i = 0; i < xy.rows(); ++i) v[static_cast<std::size_t>(i)] = {xy(i, 0), xy(i, 1)};
  return Perimeter(std::move(v));
}

Points to_points(const Perimeter& p) {
  Points out(static_cast<Eigen::Index>(p.size()), 2);
  for (std::size_t i = 0; i < p.size(); ++i) out.row(static_cast<Eigen::Index>(i)) << p[i].lon, p[i].lat;
  return out;
}

ObservationModel make_obs(double c, double sigma_obs) { return ObservationModel::scaled_identity(c, sigma_obs); }

// Python callers pass one member per row.
Ensemble from_rows(const Eigen::MatrixXd& rows) { return Ensemble::from_rows(rows); }
Eigen::MatrixXd to_rows(const Ensemble& e) { return e.members().transpose(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ensemble score filter and EnKF for wildfire perimeter assimilation";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_RuntimeError);
  py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);

  // Geometry: perimeters are (n, 2) arrays of lon, lat in degrees.
  m.def("resample", [](const Points& xy, std::size_t count) { return to_points(resample(to_perimeter(xy), count)); },
        py::arg("perimeter"), py::arg("count"));
  m.def("signed_area", [](const Points& xy) { return signed_area(to_perimeter(xy)); }, py::arg("perimeter"));
  m.def("normalize", [](const Points& xy) { return to_points(normalize(to_perimeter(xy))); }, py::arg("perimeter"));
  m.def(
      "normalize_about",
      [](const Points& xy, double lon, double lat) { return to_points(normalize_about(to_perimeter(xy), {lon, lat})); },
      py::arg("perimeter"), py::arg("lon"), py::arg("lat"));
  m.def(
      "haversine", [](double lon1, double lat1, double lon2, double lat2) { return haversine({lon1, lat1}, {lon2, lat2}); },
      py::arg("lon1"), py::arg("lat1"), py::arg("lon2"), py::arg("lat2"));
  m.def(
      "rmse_haversine", [](const Points& a, const Points& b) {
        if (a.rows() != b.rows()) throw std::invalid_argument("rmse_haversine: mismatched lengths");
        return rmse_haversine_flat(Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()),
                                   Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
      },
      py::arg("a"), py::arg("b"));
  m.attr("EARTH_RADIUS_KM") = kEarthRadiusKm;

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init<double, double>(), py::arg("eps_alpha") = 0.96, py::arg("eps_beta") = 0.03)
      .def_property_readonly("eps_alpha", &NoiseSchedule::eps_alpha)
      .def_property_readonly("eps_beta", &NoiseSchedule::eps_beta)
      .def(
          "at",
          [](const NoiseSchedule& s, double tau) {
            const auto c = s.at(tau);
            py::dict d;
            d["alpha"] = c.alpha;
            d["beta_sq"] = c.beta_sq;
            d["dlog_alpha"] = c.dlog_alpha;
            d["g_sq"] = c.g_sq;
            return d;
          },
          py::arg("tau"));

  m.def(
      "ensf_update",
      [](const Eigen::MatrixXd& prior, const Eigen::VectorXd& y, double c, double sigma_obs, double eps_alpha,
         double eps_beta, std::size_t reverse_steps, std::uint64_t seed, unsigned threads) {
        EnsfConfig cfg{NoiseSchedule(eps_alpha, eps_beta), reverse_steps, seed, threads};
        const Ensemble e = from_rows(prior);
        py::gil_scoped_release release;
        return to_rows(ensf_update(e, y, make_obs(c, sigma_obs), cfg));
      },
      py::arg("prior"), py::arg("y"), py::arg("c") = 1.0, py::arg("sigma_obs") = 1.0, py::arg("eps_alpha") = 0.96,
      py::arg("eps_beta") = 0.03, py::arg("reverse_steps") = 100, py::arg("seed") = 0, py::arg("threads") = 1,
      "EnSF analysis. `prior` holds one member per row; returns the posterior in the same layout.");

  m.def(
      "enkf_update",
      [](const Eigen::MatrixXd& prior, const Eigen::VectorXd& y, double c, double sigma_obs, std::uint64_t seed) {
        const Ensemble e = from_rows(prior);
        py::gil_scoped_release release;
        return to_rows(enkf_update(e, y, make_obs(c, sigma_obs), seed));
      },
      py::arg("prior"), py::arg("y"), py::arg("c") = 1.0, py::arg("sigma_obs") = 1.0, py::arg("seed") = 0,
      "Stochastic EnKF analysis with one member per row.");

  m.def(
      "sde_predict",
      [](const Eigen::MatrixXd& prior, double drift, double delta_k, double sigma_sde, std::uint64_t seed) {
        const Ensemble e = from_rows(prior);
        return to_rows(sde_predict(
            e, [drift](const Eigen::VectorXd& x) -> Eigen::VectorXd { return drift * x; }, {delta_k, sigma_sde}, seed));
      },
      py::arg("prior"), py::arg("drift") = 2.0, py::arg("delta_k") = 0.05, py::arg("sigma_sde") = 0.5,
      py::arg("seed") = 0, "Euler-Maruyama step with linear drift `drift * x`.");

  m.def(
      "synthetic_perimeter_step",
      [](const Points& xy, double growth, double jitter, double split_threshold, std::uint64_t seed) {
        Engine rng(seed);
        return to_points(synthetic_perimeter_step(to_perimeter(xy), {growth, jitter, split_threshold}, rng));
      },
      py::arg("perimeter"), py::arg("growth"), py::arg("jitter"), py::arg("split_threshold"), py::arg("seed") = 0);

  m.def(
      "harmonize",
      [](const std::vector<Points>& members, const Points& observed) {
        std::vector<Perimeter> ps;
        ps.reserve(members.size());
        for (const auto& p : members) ps.push_back(to_perimeter(p));
        Harmonized h = harmonize(ps, to_perimeter(observed));
        return py::make_tuple(to_rows(h.ensemble), h.observation, h.vertex_count);
      },
      py::arg("members"), py::arg("observed"),
      "Resample and normalize members and observation; returns (members, y, vertex_count).");

  m.def(
      "run",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> out_dir) {
        RunConfig cfg = load_run_config(config);
        if (out_dir) cfg.out_dir = *out_dir;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_to_directory(cfg);
        }
        py::dict d;
        d["steps_completed"] = r.records.size();
        d["mean_rmse_truth"] = r.mean_rmse_truth();
        d["mean_rmse_obs"] = r.mean_rmse_obs();
        d["error"] = r.error;
        d["out_dir"] = cfg.out_dir;
        return d;
      },
      py::arg("config"), py::arg("out_dir") = py::none(), "Run a config file, writing outputs like the CLI.");
}
