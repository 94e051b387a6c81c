// Python bindings for the g2flow core. Fields cross the boundary as numpy
// arrays (copied); everything else maps onto small value classes.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "g2flow/app/verify.hpp"
#include "g2flow/errors.hpp"
#include "g2flow/flow.hpp"
#include "g2flow/geometry.hpp"
#include "g2flow/laplacian.hpp"
#include "g2flow/numerics.hpp"
#include "g2flow/soliton.hpp"

namespace py = pybind11;
using namespace g2flow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Field& f) {
  Array out(static_cast<py::ssize_t>(f.size()));
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

Field to_field(const Grid& g, const Array& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a one-dimensional array");
  return Field(g, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict abc_dict(const TorsionABC& t) {
  py::dict d;
  d["alpha"] = to_numpy(t.alpha);
  d["beta"] = to_numpy(t.beta);
  d["gamma"] = to_numpy(t.gamma);
  return d;
}

TorsionABC abc_from(const Grid& g, const Array& a, const Array& b, const Array& c) {
  return {to_field(g, a), to_field(g, b), to_field(g, c)};
}

py::dict form_dict(const SymThreeForm& f) {
  py::dict d;
  d["re1"] = to_numpy(f.re1);
  d["im1"] = to_numpy(f.im1);
  d["re2"] = to_numpy(f.re2);
  return d;
}

py::dict decomp_dict(const G2Decomp& x) {
  py::dict d;
  d["x_coeff"] = to_numpy(x.x_coeff);
  d["s_rr"] = to_numpy(x.s_rr);
  d["s_6"] = to_numpy(x.s_6);
  d["trace_s"] = to_numpy(x.trace_s);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Warped-product G2-structures: torsion, Laplacian coflow and solitons";

  // Exceptions mirror the C++ hierarchy; InvalidArgument is also a ValueError.
  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<InvalidArgument> invalid(m, "InvalidArgument", PyExc_ValueError);
  static py::exception<NumericalError> numerical(m, "NumericalError", error.ptr());
  static py::exception<StepSizeUnderflow> underflow(m, "StepSizeUnderflow", numerical.ptr());
  static py::exception<SingularAtLZero> l_zero(m, "SingularAtLZero", numerical.ptr());
  static py::exception<NotCoClosed> not_coclosed(m, "NotCoClosed", numerical.ptr());
  static py::exception<DomainError> domain(m, "DomainError", numerical.ptr());
  static py::exception<BeyondBlowUp> beyond(m, "BeyondBlowUp", numerical.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const StepSizeUnderflow& e) {
      py::set_error(underflow, e.what());
    } catch (const SingularAtLZero& e) {
      py::set_error(l_zero, e.what());
    } catch (const NotCoClosed& e) {
      py::set_error(not_coclosed, e.what());
    } catch (const DomainError& e) {
      py::set_error(domain, e.what());
    } catch (const BeyondBlowUp& e) {
      py::set_error(beyond, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    } catch (const InvalidArgument& e) {
      py::set_error(invalid, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  // ---- numerics
  py::enum_<Topology>(m, "Topology").value("CIRCLE", Topology::Circle).value("INTERVAL", Topology::Interval);

  py::class_<Grid>(m, "Grid")
      .def(py::init<std::size_t, double, double, Topology>(), py::arg("n"), py::arg("r_min"), py::arg("r_max"),
           py::arg("topology"))
      .def_property_readonly("n", &Grid::size)
      .def_property_readonly("r_min", &Grid::r_min)
      .def_property_readonly("r_max", &Grid::r_max)
      .def_property_readonly("topology", &Grid::topology)
      .def_property_readonly("spacing", &Grid::spacing)
      .def("nodes", [](const Grid& g) { return to_numpy(Field(g, g.nodes())); })
      .def("__len__", &Grid::size)
      .def("__repr__", [](const Grid& g) {
        return "Grid(n=" + std::to_string(g.size()) + ", r_min=" + std::to_string(g.r_min()) +
               ", r_max=" + std::to_string(g.r_max()) + (g.periodic() ? ", circle)" : ", interval)");
      });

  m.def("diff", [](const Grid& g, const Array& f, double jump) { return to_numpy(diff(to_field(g, f), jump)); },
        py::arg("grid"), py::arg("f"), py::arg("jump") = 0.0, "Fourth-order d/dr on the grid.");
  m.def("quadrature", [](const Grid& g, const Array& f, double r0) { return to_numpy(quadrature(to_field(g, f), r0)); },
        py::arg("grid"), py::arg("f"), py::arg("r0"));

  py::class_<StepControl>(m, "StepControl")
      .def(py::init([](double rtol, double atol, double dt_init, double dt_min, std::size_t max_steps) {
             return StepControl{rtol, atol, dt_init, dt_min, max_steps};
           }),
           py::arg("rtol") = 1e-9, py::arg("atol") = 1e-12, py::arg("dt_init") = 1e-3, py::arg("dt_min") = 1e-12,
           py::arg("max_steps") = 10'000'000)
      .def_readwrite("rtol", &StepControl::rtol)
      .def_readwrite("atol", &StepControl::atol)
      .def_readwrite("dt_init", &StepControl::dt_init)
      .def_readwrite("dt_min", &StepControl::dt_min)
      .def_readwrite("max_steps", &StepControl::max_steps);

  // ---- geometry
  py::class_<WarpedProfile>(m, "WarpedProfile")
      .def(py::init([](const Grid& g, const Array& G, const Array& h, const Array& theta, double lambda, int winding) {
             return WarpedProfile(to_field(g, G), to_field(g, h), to_field(g, theta), SU3Background{lambda}, winding);
           }),
           py::arg("grid"), py::arg("G"), py::arg("h"), py::arg("theta"), py::arg("lam"), py::arg("winding") = 0)
      .def_property_readonly("grid", &WarpedProfile::grid)
      .def_property_readonly("lam", &WarpedProfile::lambda)
      .def_property_readonly("G", [](const WarpedProfile& p) { return to_numpy(p.G); })
      .def_property_readonly("h", [](const WarpedProfile& p) { return to_numpy(p.h); })
      .def_property_readonly("theta", [](const WarpedProfile& p) { return to_numpy(p.theta); })
      .def_readonly("winding", &WarpedProfile::theta_winding);

  m.def("compute_abc", [](const WarpedProfile& p) { return abc_dict(compute_abc(p)); }, py::arg("profile"),
        "Torsion functions alpha, beta, gamma of a profile.");
  m.def(
      "torsion_components",
      [](const WarpedProfile& p) {
        const TorsionComponents c = torsion_components(compute_abc(p));
        py::dict d;
        d["tau1"] = to_numpy(c.tau1);
        d["tau7_coeff"] = to_numpy(c.tau7_coeff);
        d["tau27_scale"] = to_numpy(c.tau27_scale);
        d["traceT"] = to_numpy(c.trace_T);
        d["tau14"] = TorsionComponents::tau14;
        return d;
      },
      py::arg("profile"));
  m.def(
      "torsion_class",
      [](const WarpedProfile& p, double rel_tol) {
        const TorsionClass c = torsion_class_relative(compute_abc(p), rel_tol);
        py::dict d;
        d["torsion_free"] = c.torsion_free;
        d["closed"] = c.closed;
        d["co_closed"] = c.co_closed;
        d["nearly_parallel"] = c.nearly_parallel;
        d["pure_27"] = c.pure_27;
        return d;
      },
      py::arg("profile"), py::arg("rel_tol") = kClassTolerance);
  m.def(
      "conformal_transform",
      [](const Grid& g, const Array& a, const Array& b, const Array& c, const Array& f) {
        return abc_dict(conformal_transform(abc_from(g, a, b, c), to_field(g, f)));
      },
      py::arg("grid"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("f"));
  m.def(
      "gauge_fix_gamma",
      [](const Grid& g, const Array& a, const Array& b, const Array& c, double r0) {
        const GaugeFixed x = gauge_fix_gamma(abc_from(g, a, b, c), r0);
        py::dict d = abc_dict(x.torsion);
        d["factor"] = to_numpy(x.factor);
        return d;
      },
      py::arg("grid"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("r0"));
  m.def(
      "reconstruct_profile",
      [](const Grid& g, const Array& a, const Array& b, const Array& c, double lambda, double h0, double r0,
         std::optional<double> theta_ref) {
        return reconstruct_profile(abc_from(g, a, b, c), SU3Background{lambda}, h0, r0, theta_ref);
      },
      py::arg("grid"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("lam"), py::arg("h0"),
      py::arg("r0"), py::arg("theta_ref") = py::none());

  // ---- laplacian
  m.def(
      "laplacian_phi",
      [](const Grid& g, const Array& a, const Array& b, const Array& c, const Array& G) {
        return form_dict(laplacian_phi(abc_from(g, a, b, c), to_field(g, G)));
      },
      py::arg("grid"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("G"));
  m.def(
      "laplacian_phi_coclosed",
      [](const Grid& g, const Array& a, const Array& b, const Array& G) {
        return form_dict(laplacian_phi_coclosed(to_field(g, a), to_field(g, b), to_field(g, G)));
      },
      py::arg("grid"), py::arg("alpha"), py::arg("beta"), py::arg("G"));
  m.def(
      "laplacian_g2_decomp",
      [](const Grid& g, const Array& a, const Array& b, const Array& c, const Array& G) {
        return decomp_dict(laplacian_g2_decomp(abc_from(g, a, b, c), to_field(g, G)));
      },
      py::arg("grid"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("G"));

  // ---- flow
  m.def(
      "flow_rhs",
      [](const WarpedProfile& p, double k, double C) {
        const FlowRates r = flow_rhs(p, {k, C});
        py::dict d;
        d["G_dot"] = to_numpy(r.G_dot);
        d["theta_dot"] = to_numpy(r.theta_dot);
        d["h_dot"] = to_numpy(r.h_dot);
        return d;
      },
      py::arg("profile"), py::arg("k") = 2.0, py::arg("C") = 0.0);
  m.def(
      "evolve",
      [](const WarpedProfile& p, double t_end, double k, double C, const StepControl& ctl, std::size_t stride) {
        FlowOptions opt;
        opt.snapshot_stride = stride;
        FlowResult res;
        {
          py::gil_scoped_release release;
          res = evolve({0.0, p}, {k, C}, t_end, ctl, opt);
        }
        py::dict d;
        py::list times, profiles;
        for (const FlowState& s : res.snapshots) {
          times.append(s.t);
          profiles.append(s.profile);
        }
        d["t"] = times;
        d["profiles"] = profiles;
        if (res.blow_up) {
          py::dict b;
          b["t_last"] = res.blow_up->t_last;
          b["reason"] = to_string(res.blow_up->reason);
          d["blow_up"] = b;
        } else {
          d["blow_up"] = py::none();
        }
        d["accepted_steps"] = res.stats.accepted;
        d["rejected_steps"] = res.stats.rejected;
        return d;
      },
      py::arg("profile"), py::arg("t_end"), py::arg("k") = 2.0, py::arg("C") = 0.0,
      py::arg("step_control") = StepControl{}, py::arg("snapshot_stride") = 0,
      "Evolve under the modified coflow. A blow-up ends the run and is reported, not raised.");
  m.def("separable_cy_blowup_time", &separable_cy_blowup_time, py::arg("lambda1"), py::arg("theta_t"));
  m.def(
      "separable_cy",
      [](double l1, double th, double t, double r) {
        const SeparableCY s = separable_cy(l1, th, t, r);
        return py::make_tuple(s.G, s.theta, s.alpha);
      },
      py::arg("lambda1"), py::arg("theta_t"), py::arg("t"), py::arg("r"), "(G, theta, alpha) of the closed form.");
  m.def("separable_cy_profile", &separable_cy_profile, py::arg("lambda1"), py::arg("theta_t"), py::arg("n"));

  // ---- solitons
  py::enum_<CYKind>(m, "CYKind")
      .value("PARABOLIC", CYKind::Parabolic)
      .value("HYPERBOLIC", CYKind::Hyperbolic)
      .value("TRIGONOMETRIC", CYKind::Trigonometric);

  py::class_<CYFamily>(m, "CYFamily")
      .def(py::init(&CYFamily::make), py::arg("C"), py::arg("R"), py::arg("r0") = 0.0, py::arg("theta0") = 0.0,
           py::arg("sign") = 1)
      .def_readonly("kind", &CYFamily::kind)
      .def_readonly("C", &CYFamily::C)
      .def_readonly("R", &CYFamily::R)
      .def_readonly("r0", &CYFamily::r0)
      .def_readonly("theta0", &CYFamily::theta0)
      .def_readonly("sign", &CYFamily::sign)
      .def_property_readonly("Q", &CYFamily::Q)
      .def_property_readonly("alpha0", &CYFamily::alpha0)
      .def(
          "__call__",
          [](const CYFamily& f, const Array& r, bool principal) {
            Array a(r.size()), l(r.size()), th(r.size());
            for (py::ssize_t i = 0; i < r.size(); ++i) {
              const CYPoint p = cy_closed_form(f, r.data()[i], principal);
              a.mutable_data()[i] = p.alpha;
              l.mutable_data()[i] = p.l;
              th.mutable_data()[i] = p.theta;
            }
            return py::make_tuple(a, l, th);
          },
          py::arg("r"), py::arg("principal_branch") = false, "Closed form (alpha, l, theta) at each r.");

  m.def(
      "cy_periodicity",
      [](double C, double R, double circumference, double tol) {
        const CYPeriodicity p = cy_periodicity(C, R, circumference, tol);
        py::dict d;
        d["periodic"] = p.periodic;
        d["Q"] = p.Q;
        d["n"] = p.n ? py::cast(*p.n) : py::none();
        d["q_is_2n"] = p.q_is_2n;
        d["q_squared_is_2n"] = p.q_squared_is_2n;
        d["max_mismatch"] = p.max_mismatch;
        return d;
      },
      py::arg("C"), py::arg("R"), py::arg("circumference") = 2 * 3.141592653589793, py::arg("tol") = 1e-10);
  m.def("first_integral_R2", &first_integral_R2, py::arg("alpha"), py::arg("l"), py::arg("C"));
  m.def(
      "soliton_rhs",
      [](double alpha, double beta, double l, double C, double mu, double k) {
        const SolitonRates r = soliton_rhs_general_k({alpha, beta, l}, {C, mu, k});
        return py::make_tuple(r.alpha, r.beta, r.l);
      },
      py::arg("alpha"), py::arg("beta"), py::arg("l"), py::arg("C"), py::arg("mu"), py::arg("k") = 2.0,
      "(alpha', beta', l') of the nearly-Kaehler soliton system.");
  m.def(
      "solve_soliton",
      [](double alpha, double beta, double l, double C, double mu, double lambda, std::pair<double, double> span,
         const StepControl& ctl, double theta0, const std::vector<double>& output) {
        SolitonSolution s;
        {
          py::gil_scoped_release release;
          s = solve_soliton({alpha, beta, l}, {C, mu}, lambda, span, ctl, theta0, output);
        }
        const auto n = static_cast<py::ssize_t>(s.samples.size());
        py::array_t<double> rows({n, static_cast<py::ssize_t>(6)});
        auto w = rows.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < n; ++i) {
          const SolitonSample& q = s.samples[i];
          const double v[6] = {q.r, q.alpha, q.beta, q.l, q.theta, q.R2};
          for (int j = 0; j < 6; ++j) w(i, j) = v[j];
        }
        py::dict d;
        d["columns"] = py::make_tuple("r", "alpha", "beta", "l", "theta", "R2");
        d["samples"] = rows;
        d["max_R2_drift"] = s.max_R2_drift;
        return d;
      },
      py::arg("alpha"), py::arg("beta"), py::arg("l"), py::arg("C"), py::arg("mu"), py::arg("lam"),
      py::arg("r_span"), py::arg("step_control") = StepControl{}, py::arg("theta0") = 0.0,
      py::arg("output") = std::vector<double>{});
  m.def(
      "nk_constant_catalog",
      [](double C, double mu) {
        py::list out;
        for (const NKCatalogEntry& e : nk_constant_catalog(C, mu)) {
          py::dict d;
          d["id"] = e.id;
          d["alpha"] = e.alpha ? py::cast(*e.alpha) : py::none();
          d["beta"] = e.beta ? py::cast(*e.beta) : py::none();
          d["l_arbitrary"] = e.l_arbitrary;
          d["l_slope"] = e.l_slope;
          d["mu"] = e.mu;
          d["validity"] = e.validity;
          d["branch"] = e.branch;
          d["residual"] = catalog_residual(e, C);
          d["coclosed_defect"] = e.coclosed_defect;
          out.append(d);
        }
        return out;
      },
      py::arg("C"), py::arg("mu"), "Constant solutions of the k = 2 soliton system (None = arbitrary).");
  m.def("l_zero_grid_search", &l_zero_grid_search, py::arg("C"), py::arg("mu"), py::arg("box") = 5.0,
        py::arg("delta") = 1e-3, py::call_guard<py::gil_scoped_release>());
  m.def(
      "kmt_reduction",
      [](double b, double c, double r) {
        const KMTPoint k = kmt_reduction(b, c, r);
        return py::make_tuple(k.l, k.theta, k.alpha);
      },
      py::arg("b"), py::arg("c"), py::arg("r"), "(l, theta, alpha) of the C = 0 solution.");
  m.def("kmt_family", &kmt_family, py::arg("b"), py::arg("c"));

  // ---- verification suites
  m.def(
      "verify",
      [](const std::string& suite) {
        app::Report rep;
        {
          py::gil_scoped_release release;
          rep = app::run_suite(suite);
        }
        return rep.to_json(false).dump();
      },
      py::arg("suite") = "all", "Run a verification suite; returns the JSON report.");
}
