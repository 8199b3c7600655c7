#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "mildmix/arithmetic.hpp"
#include "mildmix/cocycle.hpp"
#include "mildmix/errors.hpp"
#include "mildmix/experiment.hpp"
#include "mildmix/flow.hpp"
#include "mildmix/poincare.hpp"
#include "mildmix/ratner.hpp"
#include "mildmix/rigidity.hpp"
#include "mildmix/roof.hpp"

namespace py = pybind11;
using namespace mildmix;
using nlohmann::json;

namespace {

py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

CirclePoint pt(double x) { return CirclePoint::from_double(x); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Special flows over irrational rotations";

  // The module keeps the type alive; the translator only borrows it.
  static PyObject* error_type = py::exception<Error>(m, "MildmixError", PyExc_RuntimeError).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      py::setattr(exc, "kind", py::str(std::string(to_string(e.kind()))));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  py::class_<Rotation>(m, "Rotation")
      .def_static("expand", &Rotation::expand, py::arg("alpha"), py::arg("depth"))
      .def_static("from_json", [](const py::dict& d) { return Rotation::from_json(from_py(d)); })
      .def("to_json", [](const Rotation& r) { return to_py(r.to_json()); })
      .def_property_readonly("depth", &Rotation::depth)
      .def_property_readonly("alpha", &Rotation::alpha)
      .def_property_readonly("partial_quotients", &Rotation::partial_quotients)
      .def_property_readonly("denominators",
                             [](const Rotation& r) {
                               py::list out;
                               for (const auto& q : r.denominators())
                                 out.append(py::int_(py::str(q.str())));
                               return out;
                             })
      .def("q", &Rotation::q)
      .def("apply", [](const Rotation& r, double x, std::int64_t n) {
        return r.apply(pt(x), n).to_double();
      });

  m.def("bounded_type_constant", &bounded_type_constant);
  m.def("check_convergent_bounds", [](const Rotation& rot) {
    bool all = true;
    for (const auto& b : check_convergent_bounds(rot))
      all = all && b.lower_holds && b.upper_holds && b.recurrence_holds && b.coprime;
    return all;
  });

  py::class_<RoofBounds>(m, "RoofBounds")
      .def_readonly("lower", &RoofBounds::lower)
      .def_readonly("upper", &RoofBounds::upper)
      .def_readonly("variation", &RoofBounds::variation);

  py::class_<RoofFunction>(m, "RoofFunction")
      .def_static("canonical", &RoofFunction::canonical)
      .def_static("constant_roof", &RoofFunction::constant_roof)
      .def_static("from_json", [](const py::dict& d) { return RoofFunction::from_json(from_py(d)); })
      .def("to_json", [](const RoofFunction& f) { return to_py(f.to_json()); })
      .def("__call__", [](const RoofFunction& f, double x) { return f.eval(x); })
      .def("mean", &RoofFunction::mean)
      .def("sum_of_jumps", &RoofFunction::sum_of_jumps)
      .def("bounds", &RoofFunction::bounds)
      .def("decompose", &RoofFunction::decompose);

  m.def("birkhoff_naive", [](const Rotation& r, const RoofFunction& f, std::int64_t n, double x) {
    return birkhoff_naive(r, f, n, pt(x));
  });
  m.def("birkhoff_fast", [](const Rotation& r, const RoofFunction& f, std::int64_t n, double x) {
    return birkhoff_fast(r, f, n, pt(x));
  });
  m.def("jump_count", [](const Rotation& r, const RoofFunction& f, std::int64_t n, double x, double y) {
    return jump_count(r, f, n, pt(x), pt(y));
  });
  m.def("pl_difference", [](const Rotation& r, const RoofFunction& f, std::int64_t n, double x, double y) {
    return pl_difference(r, f, n, pt(x), pt(y));
  });

  py::class_<SpecialFlow>(m, "SpecialFlow")
      .def(py::init<Rotation, RoofFunction>())
      .def("advance", [](const SpecialFlow& fl, double x, double s, double t) {
        std::int64_t n = 0;
        const FlowPoint q = fl.advance({pt(x), s}, t, n);
        return py::make_tuple(q.x.to_double(), q.s, n);
      });

  m.def(
      "ratner_scan",
      [](const Rotation& rot, const RoofFunction& f, double eps, std::int64_t N, double gamma,
         std::int64_t pairs, std::uint64_t seed, bool flow, unsigned threads) {
        const RatnerConfig cfg = build_config(rot, f, eps, N, gamma);
        ScanOptions o;
        o.pairs = pairs;
        o.seed = seed;
        o.flow = flow;
        o.threads = threads;
        json j;
        {
          py::gil_scoped_release release;
          j = ratner_scan(cfg, o).to_json(cfg);
        }
        return to_py(j);
      },
      py::arg("rotation"), py::arg("roof"), py::arg("epsilon") = 0.1, py::arg("N") = 10,
      py::arg("gamma") = 1.0, py::arg("pairs") = 1000, py::arg("seed") = 0,
      py::arg("flow") = true, py::arg("threads") = 0);

  m.def(
      "rigidity_scan",
      [](const Rotation& rot, const RoofFunction& f, const std::vector<double>& times, double eps,
         std::int64_t grid, double threshold, unsigned threads) {
        RigidityProfile prof;
        {
          py::gil_scoped_release release;
          prof = rigidity_scan(rot, f, times, eps, grid, threshold, {}, threads);
        }
        py::object summary = to_py(prof.summary_json());
        py::list mu;
        for (const auto& r : prof.rows) mu.append(r.mu_hat);
        summary["mu_hat"] = mu;
        return summary;
      },
      py::arg("rotation"), py::arg("roof"), py::arg("times"), py::arg("epsilon") = 1e-3,
      py::arg("grid") = 10000, py::arg("threshold") = 0.15, py::arg("threads") = 0);

  py::enum_<PlanarSystem>(m, "PlanarSystem")
      .value("singular", PlanarSystem::singular)
      .value("normalized", PlanarSystem::normalized);

  m.def("field_singular", [](double x, double y) {
    const Vec2 v = field_singular(x, y);
    return py::make_tuple(v.x, v.y);
  });
  m.def("hamiltonian", &hamiltonian);
  m.def("density_divergence", &density_divergence);
  m.def(
      "integrate",
      [](double x, double y, double T, double tol) {
        IntegrateOptions o;
        o.tol = tol;
        const IntegrateResult res = integrate(PlanarSystem::singular, {x, y, 0.0}, T, o);
        py::list out;
        for (const auto& p : res.trajectory) out.append(py::make_tuple(p.t, p.x, p.y, p.H));
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("T"), py::arg("tol") = 1e-9);
  m.def("first_return_closed", &first_return_closed);
  m.def(
      "first_return_numeric",
      [](PlanarSystem sys, double r, double theta, double tol) {
        const ReturnEvent ev = first_return_numeric(sys, r, theta, tol);
        py::dict d;
        d["tau"] = ev.tau;
        d["exit_theta"] = ev.exit_theta;
        d["averaged"] = ev.averaged;
        return d;
      },
      py::arg("system"), py::arg("r"), py::arg("theta"), py::arg("tol") = 1e-10);
  m.def("separatrix_return_time", []() {
    const SeparatrixEstimate e = separatrix_return_time();
    return py::make_tuple(e.tau0, e.error);
  });

  m.def(
      "run_command",
      [](const std::string& command, const py::object& config, unsigned threads) {
        const ExperimentConfig cfg =
            config.is_none() ? ExperimentConfig{} : ExperimentConfig::from_json(from_py(config));
        CommandResult res;
        {
          py::gil_scoped_release release;
          res = run_command(command, cfg, threads);
        }
        py::dict tables;
        for (const auto& t : res.tables) tables[py::str(t.name)] = t.content;
        return py::make_tuple(to_py(res.report), tables);
      },
      py::arg("command"), py::arg("config") = py::none(), py::arg("threads") = 0);
  m.def("selftest", [](double scale) {
    py::list out;
    for (const auto& c : run_selftest(scale)) out.append(py::make_tuple(c.name, c.passed, c.value));
    return out;
  }, py::arg("tolerance_scale") = 1.0);
}
