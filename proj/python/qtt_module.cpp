#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "qtt/contraction.hpp"
#include "qtt/error_control.hpp"
#include "qtt/fem.hpp"
#include "qtt/homogenize.hpp"
#include "qtt/solver.hpp"
#include "qtt/tt.hpp"

namespace py = pybind11;
using namespace qtt;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_array(const std::vector<double>& v) {
  // explicit strides: the count-only array_t ctor yields a stride-0 view here
  py::array_t<double> out({py::ssize_t(v.size())},
                          {py::ssize_t(sizeof(double))});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::span<const double> as_span(const DoubleArray& arr) {
  if (arr.ndim() != 1) throw Error("expected a 1-d array");
  return {arr.data(), std::size_t(arr.size())};
}

StepFunction make_steps(const std::vector<double>& breaks,
                        const std::vector<double>& values) {
  StepFunction s;
  s.breaks = breaks;
  s.values = values;
  s.validate();
  return s;
}

SolverConfig make_config(int level, double delta, const std::string& method,
                         const std::string& preconditioner, double explicit_a0,
                         std::optional<double> rho, double stop_tol,
                         int max_iter, bool keep_iterates) {
  SolverConfig cfg;
  cfg.level = level;
  cfg.delta = delta;
  if (method == "psd") cfg.method = Method::Psd;
  else if (method == "fixed-point") cfg.method = Method::FixedPoint;
  else throw Error("unknown method '" + method + "' (psd|fixed-point)");
  if (preconditioner == "mean") cfg.preconditioner = Preconditioner::Mean;
  else if (preconditioner == "harmonic")
    cfg.preconditioner = Preconditioner::HarmonicMean;
  else if (preconditioner == "envelope")
    cfg.preconditioner = Preconditioner::EnvelopeAverage;
  else if (preconditioner == "constant")
    cfg.preconditioner = Preconditioner::ExplicitConstant;
  else
    throw Error("unknown preconditioner '" + preconditioner +
                "' (mean|harmonic|envelope|constant)");
  cfg.explicit_a0 = explicit_a0;
  if (rho) {
    cfg.rho_auto = false;
    cfg.rho = *rho;
  }
  cfg.stop_tol = stop_tol;
  cfg.max_iter = max_iter;
  cfg.keep_iterates = keep_iterates;
  cfg.record_timing = false;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(qtt_elliptic, m) {
  m.doc() =
      "quantized tensor-train solver for -(a u')' = f on (0,1) with "
      "oscillatory coefficients";

  py::register_exception<Error>(m, "Error");

  py::class_<QttVector>(m, "QttVector",
                        "length-2^level vector stored as a binary tensor train")
      .def_property_readonly("level", &QttVector::level)
      .def_property_readonly("size", &QttVector::size)
      .def("rank_profile", &QttVector::rank_profile)
      .def("average_rank", [](const QttVector& v) { return average_rank(v); })
      .def("norm", [](const QttVector& v) { return norm2(v); })
      .def("dot", [](const QttVector& v, const QttVector& w) {
        return dot(v, w);
      })
      .def("round",
           [](const QttVector& v, double delta, Index max_rank) {
             return round(v, {delta, max_rank});
           },
           py::arg("delta"), py::arg("max_rank") = 0)
      .def("hadamard",
           [](const QttVector& v, const QttVector& w) {
             return hadamard(v, w);
           })
      .def("to_numpy",
           [](const QttVector& v) { return to_array(unfold(v)); },
           "densify; refuses above level 24")
      .def("__add__", [](const QttVector& v, const QttVector& w) {
        return add(v, w);
      })
      .def("__sub__", [](const QttVector& v, const QttVector& w) {
        return add(v, scale(w, -1.0));
      })
      .def("__mul__", [](const QttVector& v, double s) { return scale(v, s); })
      .def("__rmul__", [](const QttVector& v, double s) { return scale(v, s); })
      .def("__repr__", [](const QttVector& v) {
        return "QttVector(level=" + std::to_string(v.level()) +
               ", avg_rank=" + std::to_string(average_rank(v)) + ")";
      });

  py::class_<QttMatrix>(m, "QttMatrix",
                        "2^level x 2^level operator in tensor-train form")
      .def_property_readonly("level", &QttMatrix::level)
      .def("rank_profile", &QttMatrix::rank_profile)
      .def("average_rank", [](const QttMatrix& a) { return average_rank(a); })
      .def("matvec",
           [](const QttMatrix& a, const QttVector& x, double delta) {
             return matvec(a, x, {delta, 0});
           },
           py::arg("x"), py::arg("delta") = 0.0)
      .def("__repr__", [](const QttMatrix& a) {
        return "QttMatrix(level=" + std::to_string(a.level()) +
               ", avg_rank=" + std::to_string(average_rank(a)) + ")";
      });

  m.def("fold",
        [](const DoubleArray& values, double delta) {
          return fold(as_span(values), {delta, 0});
        },
        py::arg("values"), py::arg("delta") = 0.0,
        "compress a length-2^L array into a tensor train");

  py::class_<CoefficientSpec>(m, "Coefficient",
                              "diffusion coefficient families")
      .def_static("constant", &CoefficientSpec::constant, py::arg("c"))
      .def_static("sine", &CoefficientSpec::sine, py::arg("c"),
                  py::arg("freq_k"), "C + sin(2 pi K x)")
      .def_static("modulated",
                  [](double c, double freq_k,
                     const std::vector<double>& breaks,
                     const std::vector<double>& values) {
                    return CoefficientSpec::modulated(
                        c, freq_k, make_steps(breaks, values));
                  },
                  py::arg("c"), py::arg("freq_k"), py::arg("breaks"),
                  py::arg("values"),
                  "C + g(x) sin(2 pi K x) with plateau amplitudes g")
      .def_static("exotic", &CoefficientSpec::exotic, py::arg("c"),
                  py::arg("freq_k"), py::arg("m"), "C + sin(2 pi K x^m)")
      .def_static("steps",
                  [](const std::vector<double>& breaks,
                     const std::vector<double>& values) {
                    return CoefficientSpec::steps(make_steps(breaks, values));
                  },
                  py::arg("breaks"), py::arg("values"))
      .def_static("custom",
                  [](const DoubleArray& samples) {
                    const auto s = as_span(samples);
                    return CoefficientSpec::custom(
                        std::vector<double>(s.begin(), s.end()));
                  },
                  py::arg("midpoint_samples"))
      .def("value_at", &CoefficientSpec::value_at, py::arg("x"));

  py::class_<LoadSpec>(m, "Load", "right-hand-side families")
      .def_static("constant", &LoadSpec::constant, py::arg("v"))
      .def_static("polynomial", &LoadSpec::polynomial, py::arg("coeffs"))
      .def_static("sine", &LoadSpec::sine, py::arg("amplitude"),
                  py::arg("omega"))
      .def_static("custom",
                  [](const DoubleArray& samples) {
                    const auto s = as_span(samples);
                    return LoadSpec::custom(
                        std::vector<double>(s.begin(), s.end()));
                  },
                  py::arg("nodal_samples"))
      .def("value_at", &LoadSpec::value_at, py::arg("x"));

  m.def("sample_coefficient",
        [](const CoefficientSpec& spec, int level, double delta) {
          return sample_coefficient(spec, Grid::of_level(level), {delta, 0});
        },
        py::arg("spec"), py::arg("level"), py::arg("delta") = 0.0,
        "element-midpoint samples of the coefficient as a tensor train");

  m.def("assemble_stiffness",
        [](const QttVector& a, double delta) {
          const Grid g = Grid::of_level(a.level());
          return assemble_stiffness_qtt(a, g.h, {delta, 0});
        },
        py::arg("a"), py::arg("delta") = 0.0,
        "stiffness operator from midpoint coefficient samples");

  m.def("assemble_load",
        [](const LoadSpec& f, int level, double delta) {
          return assemble_load(f, Grid::of_level(level), {delta, 0});
        },
        py::arg("f"), py::arg("level"), py::arg("delta") = 0.0);

  m.def("dense_solve",
        [](const CoefficientSpec& spec, const LoadSpec& f, int level) {
          const Grid g = Grid::of_level(level);
          const std::vector<double> a =
              unfold(sample_coefficient(spec, g, {0.0, 0}));
          const DenseTridiag A = assemble_stiffness_dense(a, g.h);
          std::vector<double> rhs = unfold(assemble_load(f, g, {0.0, 0}));
          return to_array(thomas_solve(A, rhs));
        },
        py::arg("spec"), py::arg("f"), py::arg("level"),
        "reference solve via the Thomas algorithm (dense, level <= 24)");

  m.def("energy_norm",
        [](const QttVector& v, double weight, int level) {
          return energy_norm(v, weight, Grid::of_level(level).h);
        },
        py::arg("v"), py::arg("weight"), py::arg("level"),
        "energy seminorm with a constant elementwise weight");

  m.def("solve",
        [](const CoefficientSpec& spec, const LoadSpec& f, int level,
           double delta, const std::string& method,
           const std::string& preconditioner, double explicit_a0,
           std::optional<double> rho, double stop_tol, int max_iter,
           bool keep_iterates) {
          const SolverConfig cfg =
              make_config(level, delta, method, preconditioner, explicit_a0,
                          rho, stop_tol, max_iter, keep_iterates);
          const AssembledProblem p = assemble_problem(cfg, spec, f);
          const SolutionReport rep = solve(cfg, p);
          py::dict out;
          out["solution"] = rep.solution;
          out["converged"] = rep.converged;
          out["iterations"] = int(rep.history.size()) - 1;
          out["rho"] = rep.rho_used;
          out["q"] = rep.q_used;
          out["rho_star"] = p.rho_star;
          std::vector<double> residuals, ranks;
          for (const ConvergenceRecord& r : rep.history) {
            residuals.push_back(r.residual_norm);
            ranks.push_back(r.avg_rank);
          }
          out["residuals"] = to_array(residuals);
          out["avg_ranks"] = to_array(ranks);
          if (keep_iterates) out["iterates"] = rep.iterates;
          return out;
        },
        py::arg("spec"), py::arg("f"), py::arg("level") = 14,
        py::arg("delta") = 1e-7, py::arg("method") = "psd",
        py::arg("preconditioner") = "mean", py::arg("explicit_a0") = 1.0,
        py::arg("rho") = py::none(), py::arg("stop_tol") = 1e-6,
        py::arg("max_iter") = 60, py::arg("keep_iterates") = false,
        "preconditioned tensor-train iteration; returns a report dict");

  m.def("contraction_factors",
        [](const CoefficientSpec& spec, double a0) {
          const auto [lo, hi] = ratio_bounds(spec, a0);
          const auto [rho, q] = rho_star_and_q(lo, hi);
          py::dict out;
          out["ratio_lo"] = lo;
          out["ratio_hi"] = hi;
          out["rho_star"] = rho;
          out["q"] = q;
          return out;
        },
        py::arg("spec"), py::arg("a0"),
        "optimal step size and contraction factor against a constant model");

  m.def("mean_coefficient", &mean_coefficient, py::arg("spec"));
  m.def("harmonic_mean_coefficient", &harmonic_mean_coefficient,
        py::arg("spec"));
  m.def("effective_coefficient", &effective_coefficient_1d, py::arg("spec"),
        "homogenized limit coefficient of the oscillatory family");

  m.def("homogenize_reference",
        [](const CoefficientSpec& spec, const LoadSpec& f,
           const QttVector& u_eps) {
          const Grid g = Grid::of_level(u_eps.level());
          const HomogenizedModel hom = homogenize_reference(spec, f, g, u_eps);
          py::dict out;
          out["a0"] = hom.a0_hom;
          out["u0"] = to_array(hom.u0);
          out["l2_diff"] = hom.comparison.l2_diff;
          out["h1_diff"] = hom.comparison.h1_diff;
          out["residual"] = hom.comparison.residual;
          return out;
        },
        py::arg("spec"), py::arg("f"), py::arg("u_eps"),
        "homogenized solve plus distance metrics to the oscillatory solution");
}
