#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rscca/cca.hpp"
#include "rscca/errors.hpp"
#include "rscca/evaluation.hpp"
#include "rscca/io.hpp"
#include "rscca/robust.hpp"
#include "rscca/simulation.hpp"

namespace py = pybind11;
using namespace rscca;

namespace {

MethodConfig make_config(const std::string& method, double trim, std::uint64_t seed,
                         const std::vector<double>& lambda_grid, int starts)
{
    MethodConfig cfg;
    cfg.variant = parse_variant(method);
    cfg.trim = trim;
    cfg.seed = seed;
    cfg.lambda_grid = lambda_grid;
    cfg.search.n_starts = starts;
    cfg.mcd_starts = starts;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_rscca, m)
{
    m.doc() = "Robust sparse canonical correlation analysis by alternating regressions";

    auto& base = py::register_exception<Error>(m, "RsccaError", PyExc_ValueError);
    py::register_exception<UnsupportedConfigError>(m, "UnsupportedConfigError", base.ptr());

    py::class_<PairLog>(m, "PairLog")
        .def_readonly("iterations", &PairLog::iterations)
        .def_readonly("converged", &PairLog::converged)
        .def_readonly("angle_a", &PairLog::angle_a)
        .def_readonly("angle_b", &PairLog::angle_b)
        .def_readonly("lambda_a", &PairLog::lambda_a)
        .def_readonly("lambda_b", &PairLog::lambda_b);

    py::class_<CcaFit>(m, "CcaFit")
        .def_readonly("a", &CcaFit::a)
        .def_readonly("b", &CcaFit::b)
        .def_readonly("u", &CcaFit::u)
        .def_readonly("v", &CcaFit::v)
        .def_readonly("correlations", &CcaFit::correlations)
        .def_readonly("logs", &CcaFit::logs)
        .def_readonly("x_center", &CcaFit::x_center)
        .def_readonly("y_center", &CcaFit::y_center)
        .def_readonly("rank", &CcaFit::rank)
        .def_readonly("rank_selected", &CcaFit::rank_selected)
        .def("to_json", [](const CcaFit& f) { return cca_to_json(f); });

    m.def(
        "fit",
        [](const Matrix& x, const Matrix& y, const std::string& method, std::optional<int> variates, double trim,
           std::uint64_t seed, const std::vector<double>& lambda_grid, int starts) {
            const MethodConfig cfg = make_config(method, trim, seed, lambda_grid, starts);
            py::gil_scoped_release release;
            return fit_cca(x, y, cfg, variates);
        },
        py::arg("x"), py::arg("y"), py::arg("method") = "robust-sparse", py::arg("variates") = py::none(),
        py::arg("trim") = 0.25, py::arg("seed") = 0, py::arg("lambda_grid") = std::vector<double>{},
        py::arg("starts") = 500);

    m.def(
        "select_rank",
        [](const Matrix& x, const Matrix& y, const std::string& method, std::uint64_t seed) {
            const MethodConfig cfg = make_config(method, 0.25, seed, {}, 500);
            py::gil_scoped_release release;
            return select_rank(x, y, cfg);
        },
        py::arg("x"), py::arg("y"), py::arg("method") = "robust-sparse", py::arg("seed") = 0);

    m.def(
        "cv_score",
        [](const Matrix& x, const Matrix& y, const std::string& method, int variates, double alpha,
           std::uint64_t seed, int threads) {
            const MethodConfig cfg = make_config(method, 0.25, seed, {}, 500);
            CvOptions opts;
            opts.threads = threads;
            CvResult r;
            {
                py::gil_scoped_release release;
                r = cv_score(x, y, cfg, variates, alpha, opts);
            }
            return py::make_tuple(r.score, r.folds_used, r.failures);
        },
        py::arg("x"), py::arg("y"), py::arg("method") = "robust-sparse", py::arg("variates") = 1,
        py::arg("alpha") = 0.9, py::arg("seed") = 0, py::arg("threads") = 1,
        "Returns (score, folds_used, failures).");

    m.def(
        "subspace_angle", [](const Matrix& est, const Matrix& truth) { return subspace_angle(est, truth).angle; },
        py::arg("est"), py::arg("truth"));

    m.def("robust_correlation", &robust_correlation, py::arg("u"), py::arg("v"), py::arg("seed") = 0,
          py::arg("n_starts") = 500);

    m.def(
        "distances",
        [](const Matrix& x, std::uint64_t seed) {
            const auto rows = distance_table(x, seed);
            Matrix out(static_cast<Index>(rows.size()), 3);
            for (std::size_t i = 0; i < rows.size(); ++i)
                out.row(static_cast<Index>(i)) << rows[i].classical, rows[i].robust, rows[i].cutoff;
            return out;
        },
        py::arg("x"), py::arg("seed") = 0, "Columns: classical distance, robust distance, cutoff.");

    m.def("design_names", &builtin_design_names);
    m.def(
        "generate",
        [](const std::string& design, const std::string& scheme, std::uint64_t seed) {
            const Dataset d = generate(builtin_design(design), parse_scheme(scheme), seed);
            return py::make_tuple(d.x, d.y, d.outliers);
        },
        py::arg("design"), py::arg("scheme") = "none", py::arg("seed") = 0, "Returns (X, Y, outlier_rows).");
    m.def(
        "true_vectors",
        [](const std::string& design) {
            const TrueVectors t = true_vectors(builtin_design(design));
            return py::make_tuple(t.a, t.b, t.correlations);
        },
        py::arg("design"));
}
