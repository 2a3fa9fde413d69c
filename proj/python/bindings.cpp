#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scoregeo/baselines.hpp"
#include "scoregeo/csv.hpp"
#include "scoregeo/denoiser_net.hpp"
#include "scoregeo/geodesic.hpp"
#include "scoregeo/mixture.hpp"
#include "scoregeo/oracle.hpp"

namespace py = pybind11;
using namespace scoregeo;

namespace {

MixtureDensity make_mixture(const Vec& weights, const std::vector<Vec>& means,
                            const std::vector<Mat>& covs) {
    MixtureDensity m{weights, means, covs};
    m.validate();
    return m;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "score-metric geodesic interpolation for diffusion models";
    m.attr("__version__") = kVersion;

    py::register_exception<numerical_error>(m, "NumericalError");

    py::class_<Schedule>(m, "Schedule")
        .def_readonly("T", &Schedule::T)
        .def_readonly("betas", &Schedule::betas)
        .def_readonly("alphas_bar", &Schedule::alphas_bar)
        .def("beta", &Schedule::beta, py::arg("t"))
        .def("alpha_bar", &Schedule::alpha_bar, py::arg("t"));
    m.def("make_schedule", &make_schedule, py::arg("T"), py::arg("beta_min") = 1e-4,
          py::arg("beta_max") = 0.02);

    py::class_<Sample>(m, "Sample")
        .def(py::init([](const Vec& x, int t) { return Sample{x, t}; }), py::arg("x"), py::arg("t") = 0)
        .def_readwrite("x", &Sample::x)
        .def_readwrite("t", &Sample::t);

    py::class_<MixtureDensity>(m, "MixtureDensity")
        .def(py::init(&make_mixture), py::arg("weights"), py::arg("means"), py::arg("covs"))
        .def_readonly("weights", &MixtureDensity::weights)
        .def_readonly("means", &MixtureDensity::means)
        .def_readonly("covs", &MixtureDensity::covs)
        .def_property_readonly("dim", &MixtureDensity::dim);
    m.def("mixture_diffuse", &mixture_diffuse, py::arg("mixture"), py::arg("t"), py::arg("schedule"));
    m.def("mixture_score", &mixture_score, py::arg("mixture"), py::arg("x"));
    m.def("mixture_jvp", &mixture_jvp, py::arg("mixture"), py::arg("x"), py::arg("v"));
    m.def("mixture_log_density", &mixture_log_density, py::arg("mixture"), py::arg("x"));
    m.def("make_two_moons_mixture", &make_two_moons_mixture, py::arg("per_moon") = 6,
          py::arg("sigma") = 0.12);

    py::class_<ScoreField>(m, "ScoreField")
        .def_property_readonly("dim", &ScoreField::dim)
        .def("min_time", &ScoreField::min_time)
        .def("max_time", &ScoreField::max_time)
        .def("score", &ScoreField::score, py::arg("x"), py::arg("t"))
        .def("jvp", &ScoreField::jvp, py::arg("x"), py::arg("t"), py::arg("v"));

    py::class_<MixtureScoreField, ScoreField>(m, "MixtureScoreField")
        .def(py::init<MixtureDensity, Schedule>(), py::arg("base"), py::arg("schedule"))
        .def("log_density", &MixtureScoreField::log_density, py::arg("x"), py::arg("t"));

    py::class_<DenoiserNet::Arch>(m, "NetArch")
        .def(py::init([](std::vector<int> hidden, int emb) {
                 DenoiserNet::Arch a;
                 a.hidden = std::move(hidden);
                 a.time_emb_dim = emb;
                 return a;
             }),
             py::arg("hidden") = std::vector<int>{64, 64}, py::arg("time_emb_dim") = 16);
    py::class_<DenoiserNet>(m, "DenoiserNet")
        .def(py::init<int, int, DenoiserNet::Arch, uint64_t>(), py::arg("dim"), py::arg("t_max"),
             py::arg("arch"), py::arg("seed"))
        .def_property_readonly("dim", &DenoiserNet::dim)
        .def("eps", &DenoiserNet::eps, py::arg("x"), py::arg("t"));
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("steps_per_epoch", &TrainConfig::steps_per_epoch)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("seed", &TrainConfig::seed);
    m.def(
        "train_denoiser",
        [](DenoiserNet& net, const std::vector<Vec>& data, const Schedule& schedule,
           const TrainConfig& cfg) { return train_denoiser(net, data, schedule, cfg).epoch_loss; },
        py::arg("net"), py::arg("data"), py::arg("schedule"), py::arg("config"));
    m.def("net_score", &net_score, py::arg("net"), py::arg("x"), py::arg("t"), py::arg("schedule"));
    m.def("net_jvp", &net_jvp, py::arg("net"), py::arg("x"), py::arg("t"), py::arg("v"),
          py::arg("schedule"));
    py::class_<NetScoreField, ScoreField>(m, "NetScoreField")
        .def(py::init<DenoiserNet, Schedule>(), py::arg("net"), py::arg("schedule"));
    m.def("save_net", &save_net, py::arg("net"), py::arg("path"));
    m.def("load_net", &load_net, py::arg("path"));

    m.def("forward_marginal", &forward_marginal, py::arg("x0"), py::arg("t"), py::arg("noise"),
          py::arg("schedule"));
    m.def("ddim_invert", &ddim_invert, py::arg("x0"), py::arg("tau"), py::arg("field"),
          py::arg("schedule"));
    m.def("ddim_generate", &ddim_generate, py::arg("x_tau"), py::arg("field"), py::arg("schedule"));

    py::class_<Path>(m, "Path")
        .def(py::init([](const Mat& points, int t) { return Path{points, t}; }), py::arg("points"),
             py::arg("t") = 0)
        .def_readwrite("points", &Path::points)
        .def_readwrite("t", &Path::t)
        .def_property_readonly("n_steps", &Path::n_steps);
    m.def(
        "lerp",
        [](const Vec& a, const Vec& b, int n, int t) { return lerp({a, b, n, t}); }, py::arg("x_a"),
        py::arg("x_b"), py::arg("n_steps"), py::arg("t") = 0);
    m.def(
        "slerp",
        [](const Vec& a, const Vec& b, int n, int t) { return slerp({a, b, n, t}); }, py::arg("x_a"),
        py::arg("x_b"), py::arg("n_steps"), py::arg("t") = 0);

    py::class_<GeodesicConfig>(m, "GeodesicConfig")
        .def(py::init<>())
        .def_readwrite("n_steps", &GeodesicConfig::n_steps)
        .def_readwrite("lambda_", &GeodesicConfig::lambda)
        .def_readwrite("iters", &GeodesicConfig::iters)
        .def_readwrite("lr0", &GeodesicConfig::lr0)
        .def_readwrite("seed", &GeodesicConfig::seed);
    py::class_<LengthReport>(m, "LengthReport")
        .def_readonly("total_length", &LengthReport::total_length)
        .def_readonly("local_lengths", &LengthReport::local_lengths)
        .def_readonly("reg_value", &LengthReport::reg_value)
        .def_readonly("objective", &LengthReport::objective);
    py::class_<GeodesicResult>(m, "GeodesicResult")
        .def_readonly("path", &GeodesicResult::path)
        .def_readonly("final_objective", &GeodesicResult::final_objective)
        .def_readonly("lambda_used", &GeodesicResult::lambda_used)
        .def_readonly("aborted", &GeodesicResult::aborted)
        .def_property_readonly("trace_objectives", [](const GeodesicResult& r) {
            std::vector<double> obj;
            obj.reserve(r.trace.size());
            for (const TraceRow& row : r.trace) obj.push_back(row.objective);
            return obj;
        });

    m.def("metric_vector_length", &metric_vector_length, py::arg("field"), py::arg("x"), py::arg("t"),
          py::arg("v"));
    m.def("finite_diff_velocities", &finite_diff_velocities, py::arg("path"));
    m.def("variance_regularizer", &variance_regularizer, py::arg("path"));
    m.def("curve_length", &curve_length, py::arg("field"), py::arg("path"), py::arg("lambda") = 0.0);
    m.def(
        "geodesic_optimize",
        [](const ScoreField& field, const Vec& a, const Vec& b, int t, const GeodesicConfig& cfg) {
            return geodesic_optimize(field, a, b, t, cfg);
        },
        py::arg("field"), py::arg("x_start"), py::arg("x_end"), py::arg("t"), py::arg("config"));

    py::class_<InterpolationResult>(m, "InterpolationResult")
        .def_readonly("samples0", &InterpolationResult::samples0)
        .def_readonly("tau_path", &InterpolationResult::tau_path)
        .def_readonly("geodesic", &InterpolationResult::geodesic);
    m.def("interpolate_end_to_end", &interpolate_end_to_end, py::arg("field"), py::arg("schedule"),
          py::arg("x0_a"), py::arg("x0_b"), py::arg("tau"), py::arg("config"));

    py::class_<GridGraphSpec>(m, "GridGraphSpec")
        .def(py::init([](const Vec& lo, const Vec& hi, int nx, int ny) {
                 GridGraphSpec s{lo, hi, nx, ny};
                 s.validate();
                 return s;
             }),
             py::arg("lo"), py::arg("hi"), py::arg("nx") = 256, py::arg("ny") = 256);
    py::class_<DijkstraResult>(m, "DijkstraResult")
        .def_readonly("polyline", &DijkstraResult::polyline)
        .def_readonly("length", &DijkstraResult::length);
    m.def("dijkstra_geodesic", &dijkstra_geodesic, py::arg("field"), py::arg("spec"), py::arg("x_a"),
          py::arg("x_b"), py::arg("t"));
    m.def("reconstruction_mse", &reconstruction_mse, py::arg("original"), py::arg("reconstructed"));

    py::class_<MethodReport>(m, "MethodReport")
        .def_readonly("method", &MethodReport::method)
        .def_readonly("recon_mse", &MethodReport::recon_mse)
        .def_readonly("length_g", &MethodReport::length_g)
        .def_readonly("seg_variance", &MethodReport::seg_variance)
        .def_readonly("logp_tau", &MethodReport::logp_tau)
        .def_readonly("logp_data", &MethodReport::logp_data);
    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("tau", &EvalReport::tau)
        .def_readonly("rows", &EvalReport::rows);
    m.def(
        "compare_methods",
        [](const ScoreField& field, const Schedule& schedule, const Sample& a, const Sample& b, int tau,
           const GeodesicConfig& cfg, const MixtureDensity* reference) {
            return compare_methods(field, schedule, a, b, tau, cfg, reference);
        },
        py::arg("field"), py::arg("schedule"), py::arg("x0_a"), py::arg("x0_b"), py::arg("tau"),
        py::arg("config"), py::arg("reference") = nullptr);
    m.def("eval_report_csv", &eval_report_csv, py::arg("report"));
}
