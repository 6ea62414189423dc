#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "proxdist/constraints.hpp"
#include "proxdist/datagen.hpp"
#include "proxdist/experiments.hpp"
#include "proxdist/models.hpp"
#include "proxdist/prox.hpp"
#include "proxdist/solver.hpp"

namespace py = pybind11;
using namespace proxdist;

namespace {

Batch make_batch(std::vector<Index> idx, const Model& model) {
  Batch b{std::move(idx)};
  b.validate(model.data().n());
  return b;
}

ProxProblem make_problem(const Model& model, std::vector<Index> idx, Vector anchor, double rho,
                         std::optional<Vector> init, const ProxControls& controls) {
  ProxProblem p;
  p.model = &model;
  p.batch = make_batch(std::move(idx), model);
  p.anchor = std::move(anchor);
  p.rho = rho;
  if (init) p.init = std::move(*init);
  p.controls = controls;
  return p;
}

py::dict trace_dict(const IterateTrace& t) {
  const py::ssize_t m = static_cast<py::ssize_t>(t.rows.size());
  py::array_t<double> k(m), rate(m), param_err(m), obj_err(m), wall(m);
  auto kk = k.mutable_unchecked<1>();
  auto rr = rate.mutable_unchecked<1>();
  auto pe = param_err.mutable_unchecked<1>();
  auto oe = obj_err.mutable_unchecked<1>();
  auto wm = wall.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < m; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    kk(i) = static_cast<double>(row.k);
    rr(i) = row.rate;
    pe(i) = row.param_err;
    oe(i) = row.obj_err;
    wm(i) = row.wall_ms;
  }
  py::dict d;
  d["k"] = k;
  d["rho"] = rate;
  d["param_err"] = param_err;
  d["obj_err"] = obj_err;
  d["wall_ms"] = wall;
  d["theta_hat"] = t.theta_hat;
  d["iterations"] = t.iterations;
  d["converged"] = t.converged;
  d["diverged"] = t.diverged;
  d["tdr"] = t.tdr;
  d["final_objective"] = t.final_objective;
  d["reference"] = std::string(reference_source_name(t.ref_source));
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic proximal distance optimization core";

  py::class_<ConstraintSet>(m, "ConstraintSet")
      .def_static("unconstrained", &ConstraintSet::unconstrained, py::arg("dim"))
      .def_static("unit_ball", &ConstraintSet::unit_ball, py::arg("dim"))
      .def_static("sparsity", &ConstraintSet::sparsity, py::arg("dim"), py::arg("keep"))
      .def_static("rank", &ConstraintSet::rank, py::arg("rows"), py::arg("cols"),
                  py::arg("max_rank"))
      .def_property_readonly("dim", &ConstraintSet::dim)
      .def_property_readonly("is_convex", &ConstraintSet::is_convex)
      .def("__repr__",
           [](const ConstraintSet& c) { return "<ConstraintSet " + constraint_label(c) + ">"; });

  m.def("project", &project, py::arg("x"), py::arg("constraint"));
  m.def("distance_sq", &distance_sq, py::arg("x"), py::arg("constraint"));

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<Matrix, Vector>(), py::arg("covariates"), py::arg("responses"))
      .def_static("matrix_design", &Dataset::matrix_design, py::arg("covariates"),
                  py::arg("responses"), py::arg("rows"), py::arg("cols"))
      .def_static("from_csv", &Dataset::from_csv, py::arg("path"),
                  py::arg("matrix_sides") = std::nullopt)
      .def("to_csv", &Dataset::to_csv, py::arg("path"))
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("dim", &Dataset::dim)
      .def_property_readonly("covariates", &Dataset::covariates,
                             py::return_value_policy::copy)
      .def_property_readonly("responses", &Dataset::responses, py::return_value_policy::copy);

  py::class_<Model>(m, "Model")
      .def_static("linear", &Model::linear, py::arg("data"))
      .def_static("logistic", &Model::logistic, py::arg("data"))
      .def_static("huber", &Model::huber, py::arg("data"), py::arg("delta"))
      .def_static("matrix", &Model::matrix, py::arg("data"))
      .def_property_readonly("dim", &Model::dim);

  m.def(
      "loss",
      [](const Model& model, const Vector& theta, std::vector<Index> idx) {
        return loss(model, theta, make_batch(std::move(idx), model));
      },
      py::arg("model"), py::arg("theta"), py::arg("batch"));
  m.def(
      "gradient",
      [](const Model& model, const Vector& theta, std::vector<Index> idx) {
        return gradient(model, theta, make_batch(std::move(idx), model));
      },
      py::arg("model"), py::arg("theta"), py::arg("batch"));
  m.def(
      "hessian_weights",
      [](const Model& model, const Vector& theta, std::vector<Index> idx) {
        return hessian_weights(model, theta, make_batch(std::move(idx), model));
      },
      py::arg("model"), py::arg("theta"), py::arg("batch"));
  m.def("full_objective", &full_objective, py::arg("model"), py::arg("theta"));

  py::class_<ProxControls>(m, "ProxControls")
      .def(py::init<>())
      .def_readwrite("max_inner", &ProxControls::max_inner)
      .def_readwrite("tol", &ProxControls::tol)
      .def_readwrite("step", &ProxControls::step)
      .def_readwrite("armijo_shrink", &ProxControls::armijo_shrink)
      .def_readwrite("armijo_slope", &ProxControls::armijo_slope)
      .def_readwrite("backtracking", &ProxControls::backtracking);

  m.def(
      "solve_prox",
      [](const Model& model, std::vector<Index> idx, Vector anchor, double rho,
         std::optional<Vector> init, const ProxControls& controls) {
        const auto res =
            solve_prox(make_problem(model, std::move(idx), std::move(anchor), rho,
                                    std::move(init), controls));
        return py::make_tuple(res.theta, res.inner_iterations, res.grad_norm,
                              res.line_search_failed);
      },
      py::arg("model"), py::arg("batch"), py::arg("anchor"), py::arg("rho"),
      py::arg("init") = std::nullopt, py::arg("controls") = ProxControls{},
      "Evaluate the batch proximal map; returns (theta, inner_iterations, grad_norm, "
      "line_search_failed)");

  py::enum_<ReferenceSource>(m, "ReferenceSource")
      .value("NONE", ReferenceSource::None)
      .value("BATCH", ReferenceSource::BatchSolve)
      .value("TRUTH", ReferenceSource::Truth);

  py::class_<PenaltySchedule>(m, "PenaltySchedule")
      .def(py::init([](double rho1, double gamma) { return PenaltySchedule{rho1, gamma}; }),
           py::arg("rho1") = 1.0, py::arg("gamma") = 1.0)
      .def_readwrite("rho1", &PenaltySchedule::rho1)
      .def_readwrite("gamma", &PenaltySchedule::gamma)
      .def("at", &PenaltySchedule::at, py::arg("k"));

  py::class_<StepSchedule>(m, "StepSchedule")
      .def(py::init([](double alpha1, double decay) { return StepSchedule{alpha1, decay}; }),
           py::arg("alpha1") = 0.1, py::arg("decay") = 1.0)
      .def_readwrite("alpha1", &StepSchedule::alpha1)
      .def_readwrite("decay", &StepSchedule::decay)
      .def("at", &StepSchedule::at, py::arg("k"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("penalty", &SolverConfig::penalty)
      .def_readwrite("step", &SolverConfig::step)
      .def_readwrite("batch_size", &SolverConfig::batch_size)
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("tolerance", &SolverConfig::tolerance)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("trace_every", &SolverConfig::trace_every)
      .def_readwrite("objective_check_every", &SolverConfig::objective_check_every)
      .def_readwrite("theta0", &SolverConfig::theta0)
      .def_readwrite("theta_star", &SolverConfig::theta_star)
      .def_readwrite("theta_star_source", &SolverConfig::theta_star_source)
      .def_readwrite("theta_true", &SolverConfig::theta_true)
      .def_readwrite("prox", &SolverConfig::prox)
      .def_readwrite("record_timing", &SolverConfig::record_timing)
      .def_readwrite("warnings", &SolverConfig::warnings);

  m.def(
      "run_spd",
      [](const Model& model, const ConstraintSet& c, const SolverConfig& cfg) {
        return trace_dict(run_spd(model, c, cfg));
      },
      py::arg("model"), py::arg("constraint"), py::arg("config"));
  m.def(
      "run_batch_pd",
      [](const Model& model, const ConstraintSet& c, const SolverConfig& cfg) {
        return trace_dict(run_batch_pd(model, c, cfg));
      },
      py::arg("model"), py::arg("constraint"), py::arg("config"));
  m.def(
      "run_psgd",
      [](const Model& model, const ConstraintSet& c, const SolverConfig& cfg) {
        return trace_dict(run_psgd(model, c, cfg));
      },
      py::arg("model"), py::arg("constraint"), py::arg("config"));

  m.def("true_discovery_rate", &true_discovery_rate, py::arg("estimate"), py::arg("truth"));

  py::enum_<Family>(m, "Family")
      .value("LINEAR", Family::Linear)
      .value("LOGISTIC", Family::Logistic)
      .value("HUBER", Family::Huber)
      .value("MATRIX", Family::Matrix);

  py::enum_<TruthFlavor>(m, "TruthFlavor")
      .value("UNIT_BALL", TruthFlavor::UnitBallTruth)
      .value("SPARSE", TruthFlavor::SparseTruth)
      .value("LOW_RANK", TruthFlavor::LowRankTruth);

  py::class_<GenSpec>(m, "GenSpec")
      .def(py::init<>())
      .def_readwrite("family", &GenSpec::family)
      .def_readwrite("n", &GenSpec::n)
      .def_readwrite("p", &GenSpec::p)
      .def_readwrite("q", &GenSpec::q)
      .def_readwrite("flavor", &GenSpec::flavor)
      .def_readwrite("sparsity", &GenSpec::sparsity)
      .def_readwrite("rank", &GenSpec::rank)
      .def_readwrite("outlier_fraction", &GenSpec::outlier_fraction)
      .def_readwrite("huber_delta", &GenSpec::huber_delta)
      .def_readwrite("seed", &GenSpec::seed);

  m.def("gen_theta_true", &gen_theta_true, py::arg("spec"));
  m.def("gen_dataset", &gen_dataset, py::arg("spec"), py::arg("theta_true"));
  m.def("make_model", &make_model, py::arg("spec"), py::arg("data"));
  m.def("low_rank_truth", &low_rank_truth, py::arg("rows"), py::arg("cols"), py::arg("rank"),
        py::arg("total_ones") = 128);

  m.def(
      "fit_rate",
      [](const std::vector<Index>& k, const std::vector<double>& err, Index k_lo, Index k_hi,
         int grid_points) {
        const RateFit f = fit_rate(k, err, k_lo, k_hi, grid_points);
        return py::make_tuple(f.slope, f.intercept, f.r_squared);
      },
      py::arg("k"), py::arg("err"), py::arg("k_lo"), py::arg("k_hi"), py::arg("grid_points") = 50,
      "OLS slope of log(err) vs log(k) over a log-spaced grid; returns (slope, intercept, r2)");
}
