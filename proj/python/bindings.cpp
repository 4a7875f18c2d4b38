// Python surface over the core operations: samplers, Green's function
// access, extremal statistics, and the closed-form covariances.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "mbr4/conditional.hpp"
#include "mbr4/extremes.hpp"
#include "mbr4/harness.hpp"
#include "mbr4/hierarchical.hpp"
#include "mbr4/sampler.hpp"

namespace py = pybind11;
using namespace mbr4;

namespace {

py::array_t<double> values_array(const std::vector<double>& values) {
    py::array_t<double> out(static_cast<py::ssize_t>(values.size()));
    std::memcpy(out.mutable_data(), values.data(), values.size() * sizeof(double));
    return out;
}

Field field_from_array(int n_side, py::array_t<double, py::array::c_style> values,
                       FieldKind kind) {
    Lattice4 lat(n_side);
    if (static_cast<std::size_t>(values.size()) != lat.vertex_count())
        throw std::invalid_argument("values must have (N+1)^4 entries");
    Field f{lat, std::vector<double>(values.data(), values.data() + values.size()), kind, 0};
    return f;
}

} // namespace

PYBIND11_MODULE(_mbr4, m) {
    m.doc() = "Simulation laboratory for the extremes of the 4D membrane model";

    m.attr("GAMMA") = kGamma;
    m.attr("FIELD_SCALE") = kFieldScale;
    m.attr("COVARIANCE_SCALE") = kCovarianceScale;

    m.def("centering", &centering, py::arg("n_side"),
          "Centering constant (8/pi) ln N - (3/(2 pi)) ln ln N of the field maximum");

    m.def(
        "torus_distance",
        [](const Vec4i& u, const Vec4i& v, int n_side) {
            TorusDistance d = torus_distance(u, v, n_side);
            return py::make_tuple(d.t, d.d_inf);
        },
        py::arg("u"), py::arg("v"), py::arg("n_side"),
        "Per-coordinate wrapped distances and their maximum");

    m.def(
        "mbrw_covariance",
        [](const Vec4i& u, const Vec4i& v, int depth) {
            return mbrw_covariance(u, v, DyadicDepth(depth));
        },
        py::arg("u"), py::arg("v"), py::arg("depth"));
    m.def(
        "brw_covariance",
        [](const Vec4i& u, const Vec4i& v, int depth) {
            return brw_covariance(u, v, DyadicDepth(depth));
        },
        py::arg("u"), py::arg("v"), py::arg("depth"));

    py::class_<SolverHandle, std::shared_ptr<SolverHandle>>(m, "Solver")
        .def(py::init([](int n_side, const std::string& mode) {
                 auto op = std::make_shared<PrecisionOperator>(Lattice4(n_side));
                 SolverHandle::Options options;
                 options.mode =
                     mode.empty() ? default_solver_mode(n_side) : parse_solver_mode(mode);
                 return std::const_pointer_cast<SolverHandle>(
                     SolverHandle::create(std::move(op), options));
             }),
             py::arg("n_side"), py::arg("mode") = std::string(),
             "Assemble and factor the precision operator for the given box side")
        .def_property_readonly(
            "n_side", [](const SolverHandle& h) { return h.op().lattice().n_side(); })
        .def_property_readonly("mode",
                               [](const SolverHandle& h) { return solver_mode_name(h.mode()); })
        .def(
            "solve",
            [](const SolverHandle& h, py::array_t<double, py::array::c_style> b) {
                std::vector<double> rhs(b.data(), b.data() + b.size());
                return values_array(h.solve(rhs));
            },
            py::arg("b"), "Solve the integer-stencil system A x = b")
        .def(
            "green_column",
            [](const SolverHandle& h, const Vec4i& v) { return values_array(h.green_column(v)); },
            py::arg("vertex"), "Field covariance column 64 A^{-1} e_v")
        .def("green_diagonal",
             [](const SolverHandle& h) { return values_array(h.green_diagonal()); })
        .def(
            "sample",
            [](const SolverHandle& h, std::uint64_t seed, std::uint64_t stream) {
                return values_array(sample_membrane(h, seed, stream).values);
            },
            py::arg("seed"), py::arg("stream") = 0,
            "One membrane field draw; bit-identical for equal (seed, stream)");

    m.def(
        "sample_brw",
        [](int depth, std::uint64_t seed, std::uint64_t stream) {
            return values_array(sample_brw(DyadicDepth(depth), seed, stream).values);
        },
        py::arg("depth"), py::arg("seed"), py::arg("stream") = 0);
    m.def(
        "sample_mbrw",
        [](int depth, std::uint64_t seed, std::uint64_t stream, bool prefix_sums) {
            return values_array(
                sample_mbrw(DyadicDepth(depth), seed, stream, prefix_sums).values);
        },
        py::arg("depth"), py::arg("seed"), py::arg("stream") = 0,
        py::arg("prefix_sums") = true);

    m.def(
        "dysonize",
        [](int n_side, py::array_t<double, py::array::c_style> h1,
           py::array_t<double, py::array::c_style> h2, double t) {
            Field f1 = field_from_array(n_side, h1, FieldKind::Membrane);
            Field f2 = field_from_array(n_side, h2, FieldKind::Membrane);
            return values_array(dysonize(f1, f2, DysonParams{t, n_side}).values);
        },
        py::arg("n_side"), py::arg("h1"), py::arg("h2"), py::arg("t"),
        "sqrt(1 - t/(g ln N)) h1 + sqrt(t/(g ln N)) h2");

    m.def(
        "extract_extremal_process",
        [](int n_side, py::array_t<double, py::array::c_style> values, int radius) {
            Field f = field_from_array(n_side, values, FieldKind::Membrane);
            PointProcessSample pp = extract_extremal_process(f, radius);
            py::array_t<double> positions({static_cast<py::ssize_t>(pp.atoms.size()),
                                           static_cast<py::ssize_t>(4)});
            py::array_t<double> heights(static_cast<py::ssize_t>(pp.atoms.size()));
            auto pos = positions.mutable_unchecked<2>();
            auto ht = heights.mutable_unchecked<1>();
            for (py::ssize_t i = 0; i < static_cast<py::ssize_t>(pp.atoms.size()); ++i) {
                for (py::ssize_t k = 0; k < 4; ++k) pos(i, k) = pp.atoms[i].position[k];
                ht(i) = pp.atoms[i].height;
            }
            return py::make_tuple(positions, heights);
        },
        py::arg("n_side"), py::arg("values"), py::arg("radius"),
        "Rescaled positions and centered heights of the r-local maxima");

    m.def(
        "level_set",
        [](int n_side, py::array_t<double, py::array::c_style> values, double lambda) {
            Field f = field_from_array(n_side, values, FieldKind::Membrane);
            return level_set(f, lambda);
        },
        py::arg("n_side"), py::arg("values"), py::arg("lambda"),
        "Indices of vertices with h >= m_N - lambda");

    m.def(
        "pair_max",
        [](int n_side, py::array_t<double, py::array::c_style> values, int radius) {
            Field f = field_from_array(n_side, values, FieldKind::Membrane);
            PairStatistic s = pair_max(f, radius);
            if (s.empty) return py::object(py::none());
            return py::object(py::make_tuple(s.value, s.first, s.second));
        },
        py::arg("n_side"), py::arg("values"), py::arg("radius"),
        "Max of h_u + h_v over r <= |u-v|_inf <= N/r, or None when vacuous");

    m.def(
        "top_sum",
        [](int n_side, py::array_t<double, py::array::c_style> values, std::size_t count) {
            Field f = field_from_array(n_side, values, FieldKind::Membrane);
            return top_sum(f, count);
        },
        py::arg("n_side"), py::arg("values"), py::arg("count"));

    m.def(
        "derivative_martingale",
        [](int n_side, py::array_t<double, py::array::c_style> values) {
            Field f = field_from_array(n_side, values, FieldKind::Membrane);
            return derivative_martingale(f);
        },
        py::arg("n_side"), py::arg("values"));

    m.def(
        "fit_exponential_tail",
        [](py::array_t<double, py::array::c_style> heights, double threshold) {
            std::vector<double> h(heights.data(), heights.data() + heights.size());
            TailFit fit = fit_exponential_tail(h, threshold);
            return py::make_tuple(fit.rate, fit.std_error, fit.exceedances);
        },
        py::arg("heights"), py::arg("threshold"),
        "MLE rate of the exponential excess model: (rate, std_error, exceedances)");
}
