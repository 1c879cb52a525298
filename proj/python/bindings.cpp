#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wpart/diagnostics.hpp"
#include "wpart/energy.hpp"
#include "wpart/error.hpp"
#include "wpart/grid.hpp"
#include "wpart/io.hpp"
#include "wpart/landscape.hpp"
#include "wpart/optimizer.hpp"
#include "wpart/oracle.hpp"

namespace py = pybind11;
using namespace wpart;

namespace {

// Arrays cross the boundary with shape (ny, nx), row 0 at the bottom as in the grid.
template <class T>
std::vector<T> flatten(const Grid& g, const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  if (static_cast<std::size_t>(a.size()) != g.size())
    throw PreconditionError("array has " + std::to_string(a.size()) + " entries, grid has " + std::to_string(g.size()));
  return std::vector<T>(a.data(), a.data() + a.size());
}

template <class T>
py::array_t<T> to_array(const Grid& g, std::span<const T> values) {
  py::array_t<T> out({static_cast<py::ssize_t>(g.ny()), static_cast<py::ssize_t>(g.nx())});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

py::dict energy_dict(const EnergyBreakdown& e) {
  py::dict d;
  d["F"] = e.interface_term;
  d["G"] = e.bulk_term;
  d["J"] = e.total;
  d["per_phase_perimeter"] = e.per_phase_perimeter;
  d["interface_length"] = e.interface_length_unweighted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_wpart, m) {
  m.doc() = "Weighted multi-phase grid partitions";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", error.ptr());
  py::register_exception<BudgetError>(m, "BudgetError", error.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", error.ptr());

  py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
      .def(py::init([](int nx, int ny, double h, std::optional<py::array_t<std::uint8_t>> mask) {
             std::vector<std::uint8_t> flat;
             if (mask) flat.assign(mask->data(), mask->data() + mask->size());
             return std::make_shared<Grid>(nx, ny, h, std::move(flat));
           }),
           py::arg("nx"), py::arg("ny"), py::arg("h"), py::arg("mask") = py::none())
      .def_property_readonly("nx", &Grid::nx)
      .def_property_readonly("ny", &Grid::ny)
      .def_property_readonly("h", &Grid::h)
      .def_property_readonly("domain_area", &Grid::domain_area)
      .def_property_readonly("mask", [](const Grid& g) { return to_array<std::uint8_t>(g, g.mask()); });

  m.def("disc_mask", [](int nx, int ny, double h) {
    const Grid g(nx, ny, h);
    const auto mask = disc_mask(nx, ny, h);
    return to_array<std::uint8_t>(g, mask);
  });

  py::class_<ScalarField>(m, "ScalarField")
      .def(py::init([](std::shared_ptr<Grid> g, py::array_t<double, py::array::c_style | py::array::forcecast> v) {
        return ScalarField(g, flatten(*g, v));
      }))
      .def(py::init([](std::shared_ptr<Grid> g, double v) { return ScalarField(g, v); }))
      .def_property_readonly("values", [](const ScalarField& f) { return to_array<double>(f.grid(), f.values()); })
      .def("min", &ScalarField::min_in_domain)
      .def("max", &ScalarField::max_in_domain);

  py::class_<Partition>(m, "Partition")
      .def(py::init([](std::shared_ptr<Grid> g, int n, py::array_t<int, py::array::c_style | py::array::forcecast> l) {
        return Partition(g, n, flatten(*g, l));
      }))
      .def(py::init([](std::shared_ptr<Grid> g, int n, int fill) { return Partition(g, n, fill); }), py::arg("grid"),
           py::arg("n_labels"), py::arg("fill") = 1)
      .def_property_readonly("n_labels", &Partition::n_labels)
      .def_property_readonly("labels", [](const Partition& p) { return to_array<int>(p.grid(), p.labels()); })
      .def("__eq__", [](const Partition& a, const Partition& b) { return a == b; });

  m.def("phase_volumes", &phase_volumes);
  m.def("symmetric_difference_distance", &symmetric_difference_distance);

  py::enum_<WeightSource>(m, "WeightSource").value("Direct", WeightSource::Direct).value("Landscape", WeightSource::Landscape);
  py::class_<WeightSpec>(m, "WeightSpec")
      .def(py::init<>())
      .def_readwrite("delta", &WeightSpec::delta)
      .def_readwrite("cap", &WeightSpec::cap)
      .def_readwrite("source", &WeightSpec::source)
      .def_readwrite("beta", &WeightSpec::beta)
      .def_readwrite("C_beta", &WeightSpec::C_beta);

  m.def(
      "solve_landscape",
      [](const ScalarField& V, double tol, int max_iter) {
        auto sol = solve_landscape(V, {tol, max_iter});
        return py::make_tuple(sol.w, sol.iterations, sol.relative_residual);
      },
      py::arg("V"), py::arg("tol") = 1e-8, py::arg("max_iter") = 0,
      "Returns (w, iterations, relative_residual).");
  m.def("build_weight", &build_weight);

  py::enum_<BulkKind>(m, "BulkKind")
      .value("VolumeQuadratic", BulkKind::VolumeQuadratic)
      .value("VolumeGenericH", BulkKind::VolumeGenericH)
      .value("WeightedVolume", BulkKind::WeightedVolume);
  py::class_<PiecewiseLinear>(m, "PiecewiseLinear")
      .def(py::init<std::vector<double>, std::vector<double>>())
      .def("__call__", &PiecewiseLinear::operator());
  py::class_<BulkTermSpec>(m, "BulkTermSpec")
      .def(py::init<>())
      .def_readwrite("kind", &BulkTermSpec::kind)
      .def_readwrite("lam", &BulkTermSpec::lambda)
      .def_readwrite("target_volumes", &BulkTermSpec::target_volumes)
      .def_readwrite("alpha", &BulkTermSpec::alpha)
      .def_readwrite("C_alpha", &BulkTermSpec::C_alpha)
      .def_readwrite("h_table", &BulkTermSpec::h_table)
      .def_readwrite("q_weight", &BulkTermSpec::q_weight);
  py::class_<EnergySpec>(m, "EnergySpec")
      .def(py::init<>())
      .def_readwrite("bulk", &EnergySpec::bulk)
      .def_readwrite("label_weights", &EnergySpec::label_weights);

  m.def("total_energy", [](const Partition& p, const ScalarField& a, const EnergySpec& s) {
    return energy_dict(total_energy(p, a, s));
  });

  py::enum_<InitKind>(m, "InitKind")
      .value("VoronoiSeeds", InitKind::VoronoiSeeds)
      .value("Random", InitKind::Random)
      .value("Stripes", InitKind::Stripes)
      .value("WatershedMinusW", InitKind::WatershedMinusW);
  py::class_<Annealing>(m, "Annealing")
      .def(py::init<double, double>(), py::arg("T0") = 1.0, py::arg("decay") = 0.95)
      .def_readwrite("T0", &Annealing::T0)
      .def_readwrite("decay", &Annealing::decay);
  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("init", &OptimizerConfig::init)
      .def_readwrite("seed", &OptimizerConfig::seed)
      .def_readwrite("max_sweeps", &OptimizerConfig::max_sweeps)
      .def_readwrite("pour_moves_per_sweep", &OptimizerConfig::pour_moves_per_sweep)
      .def_readwrite("r_min", &OptimizerConfig::r_min)
      .def_readwrite("r_max", &OptimizerConfig::r_max)
      .def_readwrite("annealing", &OptimizerConfig::annealing)
      .def_readwrite("lloyd_iterations", &OptimizerConfig::lloyd_iterations)
      .def_readwrite("restarts", &OptimizerConfig::restarts);

  m.def("initialize", [](std::shared_ptr<Grid> g, int n, const ScalarField& field, const OptimizerConfig& c) {
    return initialize(g, n, field, c);
  });
  m.def(
      "minimize",
      [](std::shared_ptr<Grid> g, int n, const ScalarField& a, const EnergySpec& s, const OptimizerConfig& c) {
        auto r = minimize(g, n, a, s, c);
        py::list trace;
        for (const auto& t : r.trace) {
          py::dict d;
          d["sweep"] = t.sweep;
          d["F"] = t.F;
          d["G"] = t.G;
          d["J"] = t.J;
          d["flips"] = t.flips;
          d["pours"] = t.pours;
          d["temperature"] = t.temperature;
          trace.append(d);
        }
        return py::make_tuple(r.partition, trace, energy_dict(r.energy));
      },
      "Returns (partition, trace, energy).");
  m.def("clean", &clean, py::arg("p"), py::arg("a"), py::arg("spec"), py::arg("min_component_volume") = 0.0);

  m.def(
      "brute_force_min",
      [](std::shared_ptr<Grid> g, int n, const ScalarField& a, const EnergySpec& s, std::uint64_t budget) {
        auto r = brute_force_min(g, n, a, s, {budget});
        py::dict d;
        d["minimizer"] = r.minimizer;
        d["J_min"] = r.J_min;
        d["count"] = r.count;
        d["assignments"] = r.assignments;
        return d;
      },
      py::arg("grid"), py::arg("n_labels"), py::arg("a"), py::arg("spec"), py::arg("max_assignments") = 100'000'000);

  m.def("gauge_exponent", &gauge_exponent, py::arg("alpha"), py::arg("beta"), py::arg("n") = 2);
  m.def(
      "regularity_report",
      [](const Partition& p, const ScalarField& a, const EnergySpec& s, const WeightSpec& w) {
        return io::format_report(full_report(p, a, s, w));
      },
      "Regularity report in the text format written by the CLI.");

  m.def("format_labels", &io::format_labels);
  m.def("parse_labels", [](std::shared_ptr<Grid> g, const std::string& text) {
    return io::to_partition(io::parse_labels(text), g);
  });
  m.def("format_field", &io::format_field);
  m.def("parse_field", [](std::shared_ptr<Grid> g, const std::string& text) {
    return io::to_field(io::parse_field(text), g);
  });
}
