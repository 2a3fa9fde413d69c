#include "scoregeo/geodesic.hpp"

#include <cmath>
#include <string>

#include "scoregeo/baselines.hpp"

namespace scoregeo {

void Path::validate() const {
    if (n_steps() < 2) throw std::invalid_argument("Path: need N >= 2 (velocity stencil uses three points)");
    if (dim() < 1) throw std::invalid_argument("Path: empty dimension");
    if (!points.allFinite()) throw std::invalid_argument("Path: non-finite point");
    if (t < 0) throw std::invalid_argument("Path: negative diffusion time");
}

void GeodesicConfig::validate() const {
    if (n_steps < 2) throw std::invalid_argument("GeodesicConfig: n_steps must be >= 2");
    if (iters < 1) throw std::invalid_argument("GeodesicConfig: iters must be >= 1");
    if (!(lr0 > 0.0)) throw std::invalid_argument("GeodesicConfig: lr0 must be positive");
}

double metric_vector_length(const ScoreField& field, const Vec& x, int t, const Vec& v) {
    return field.jvp(x, t, v).norm();
}

Mat finite_diff_velocities(const Path& path) {
    path.validate();
    const int n = path.n_steps();
    const double inv_2ds = 1.0 / (2.0 * path.ds());
    Mat vel(n + 1, path.dim());
    const Mat& p = path.points;
    vel.row(0) = (-3.0 * p.row(0) + 4.0 * p.row(1) - p.row(2)) * inv_2ds;
    for (int i = 1; i < n; ++i) vel.row(i) = (p.row(i + 1) - p.row(i - 1)) * inv_2ds;
    vel.row(n) = (3.0 * p.row(n) - 4.0 * p.row(n - 1) + p.row(n - 2)) * inv_2ds;
    return vel;
}

double variance_regularizer(const Path& path) {
    path.validate();
    const int n = path.n_steps();
    Vec seg(n);
    for (int i = 0; i < n; ++i) seg[i] = (path.points.row(i + 1) - path.points.row(i)).norm();
    const double mean = seg.mean();
    return (seg.array() - mean).square().sum() / n;
}

namespace {

constexpr double kSqrtClamp = 1e-12; // floor under the sqrt when differentiating l = sqrt(u'u)

} // namespace

LengthReport curve_length(const ScoreField& field, const Path& path, double lambda) {
    path.validate();
    const int n = path.n_steps();
    const Mat vel = finite_diff_velocities(path);
    LengthReport report;
    report.local_lengths.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double l = metric_vector_length(field, path.points.row(i).transpose(), path.t,
                                              vel.row(i).transpose());
        if (!std::isfinite(l))
            throw numerical_error("curve_length: non-finite local length at point " + std::to_string(i));
        report.local_lengths[i] = l;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        total += 0.5 * (report.local_lengths[i] + report.local_lengths[i + 1]) * path.ds();
    report.total_length = total;
    report.reg_value = variance_regularizer(path);
    report.lambda = lambda;
    report.objective = total + lambda * report.reg_value;
    return report;
}

ObjectiveEval objective_value_and_grad(const ScoreField& field, const Path& path, double lambda) {
    path.validate();
    const int n = path.n_steps();
    const int d = path.dim();
    const double ds = path.ds();

    // Trapezoid over per-segment velocities: each segment contributes
    // (ds/2) (|J(x_i) v|_2 + |J(x_{i+1}) v|_2) with v = (x_{i+1} - x_i)/ds.
    // Centered stencils admit even-odd null modes (a fold x_{i-1} = x_{i+1}
    // passes through v_i = 0 unseen and undercounts the length); sampling
    // the velocity per segment counts every move, so the flat-metric
    // minimizer is exactly the straight segment.
    ObjectiveEval eval;
    eval.grad = Mat::Zero(n + 1, d);
    double total = 0.0;

    for (int i = 0; i < n; ++i) {
        const Vec x_a = path.points.row(i).transpose();
        const Vec x_b = path.points.row(i + 1).transpose();
        const Vec v = (x_b - x_a) / ds;
        Vec grad_v = Vec::Zero(d);
        for (int end = 0; end < 2; ++end) {
            const Vec& x = end == 0 ? x_a : x_b;
            const Vec u = field.jvp(x, path.t, v);
            const double q = u.squaredNorm();
            const double l = std::sqrt(q);
            if (!std::isfinite(l))
                throw numerical_error("objective gradient: non-finite local length at segment " +
                                      std::to_string(i));
            total += 0.5 * ds * l;
            // dl/du = u / l, clamped near l = 0 so constant paths stay differentiable.
            const Vec cot = (0.5 * ds / std::sqrt(std::max(q, kSqrtClamp))) * u;
            grad_v += field.vjp(x, path.t, cot);
            eval.grad.row(i + end) += field.grad_jvp_form(x, path.t, cot, v).transpose();
        }
        eval.grad.row(i + 1) += grad_v.transpose() / ds;
        eval.grad.row(i) -= grad_v.transpose() / ds;
    }

    // Variance of segment lengths and its gradient.
    Vec seg(n);
    for (int i = 0; i < n; ++i) seg[i] = (path.points.row(i + 1) - path.points.row(i)).norm();
    const double mean = seg.mean();
    const double reg = (seg.array() - mean).square().sum() / n;
    for (int i = 0; i < n; ++i) {
        const double denom = std::max(seg[i], 1e-12);
        const Eigen::RowVectorXd dir = (path.points.row(i + 1) - path.points.row(i)) / denom;
        const double coeff = lambda * 2.0 * (seg[i] - mean) / n;
        eval.grad.row(i + 1) += coeff * dir;
        eval.grad.row(i) -= coeff * dir;
    }

    eval.length = total;
    eval.reg = reg;
    eval.objective = total + lambda * reg;
    return eval;
}

namespace {

Path initial_path(const ScoreField& field, const Vec& x_start, const Vec& x_end, int t,
                  const GeodesicConfig& cfg, const Path* init) {
    if (init != nullptr) {
        init->validate();
        if (init->dim() != field.dim() || init->n_steps() != cfg.n_steps || init->t != t)
            throw std::invalid_argument("geodesic_optimize: init path shape/time mismatch");
        if ((init->points.row(0).transpose() - x_start).norm() != 0.0 ||
            (init->points.row(cfg.n_steps).transpose() - x_end).norm() != 0.0)
            throw std::invalid_argument("geodesic_optimize: init path endpoints differ from x_start/x_end");
        return *init;
    }
    InterpolationRequest req{x_start, x_end, cfg.n_steps, t};
    if (cfg.init == GeodesicConfig::Init::Lerp) return lerp(req);
    // Slerp is undefined for zero-norm or antipodal endpoints; fall back.
    if (x_start.norm() == 0.0 || x_end.norm() == 0.0) return lerp(req);
    const double cos_theta = x_start.dot(x_end) / (x_start.norm() * x_end.norm());
    if (cos_theta < -1.0 + 1e-9) return lerp(req);
    Path arc = slerp(req);
    // Near-antipodal unequal-norm endpoints inflate intermediates by
    // ~1/cos(theta/2); such arcs start the optimizer hopelessly far out.
    double polyline = 0.0;
    for (int i = 0; i < arc.n_steps(); ++i)
        polyline += (arc.points.row(i + 1) - arc.points.row(i)).norm();
    if (polyline > 3.0 * (x_end - x_start).norm()) return lerp(req);
    return arc;
}

// lambda = L_init / (N Var_init + eps). The floor term keeps lambda finite
// when the initial spacing is already uniform (slerp on equal-norm inputs).
double default_lambda(double length_init, double reg_init, const Path& init) {
    const int n = init.n_steps();
    double mean_seg = 0.0;
    for (int i = 0; i < n; ++i) mean_seg += (init.points.row(i + 1) - init.points.row(i)).norm();
    mean_seg /= n;
    const double floor = 1e-2 * n * mean_seg * mean_seg + 1e-12;
    return length_init / (n * reg_init + floor);
}

} // namespace

GeodesicResult geodesic_optimize(const ScoreField& field, const Vec& x_start, const Vec& x_end, int t,
                                 const GeodesicConfig& cfg, const Path* init) {
    cfg.validate();
    field.check_dim(x_start, "x_start");
    field.check_dim(x_end, "x_end");
    field.check_time(t);
    const int n = cfg.n_steps;
    const int d = field.dim();

    GeodesicResult result;

    // Identical endpoints: the constant path is a global minimizer.
    if ((x_start - x_end).norm() == 0.0) {
        result.path.t = t;
        result.path.points = x_start.transpose().replicate(n + 1, 1);
        result.lambda_used = std::max(cfg.lambda, 0.0);
        result.trace.push_back({0, 0.0, 0.0, 0.0, 0.0});
        result.final_objective = 0.0;
        return result;
    }

    Path path = initial_path(field, x_start, x_end, t, cfg, init);
    ObjectiveEval eval = objective_value_and_grad(field, path, 0.0);
    const double lambda =
        cfg.lambda >= 0.0 ? cfg.lambda : default_lambda(eval.length, eval.reg, path);
    result.lambda_used = lambda;

    double best_objective = eval.length + lambda * eval.reg;
    double best_length = eval.length;
    double best_reg = eval.reg;
    Mat best_points = path.points;

    // Adam over the stacked interior points.
    const double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;
    Mat m = Mat::Zero(n + 1, d);
    Mat v = Mat::Zero(n + 1, d);

    for (int it = 0; it < cfg.iters; ++it) {
        double lr = cfg.lr0;
        if (cfg.lr_schedule == GeodesicConfig::LrSchedule::Cosine)
            lr = cfg.lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(it) / cfg.iters));

        bool finite = true;
        try {
            eval = objective_value_and_grad(field, path, lambda);
        } catch (const numerical_error&) {
            finite = false;
        }
        if (!finite || !std::isfinite(eval.objective) || !eval.grad.allFinite()) {
            result.aborted = true;
            result.diagnostic = "non-finite objective or gradient at iteration " + std::to_string(it) +
                                "; returning best iterate so far";
            break;
        }
        result.trace.push_back({it, eval.length, eval.reg, eval.objective, lr});
        if (eval.objective < best_objective) {
            best_objective = eval.objective;
            best_length = eval.length;
            best_reg = eval.reg;
            best_points = path.points;
        }

        const double bc1 = 1.0 - std::pow(beta1, it + 1);
        const double bc2 = 1.0 - std::pow(beta2, it + 1);
        for (int i = 1; i < n; ++i) { // endpoints pinned
            m.row(i) = beta1 * m.row(i) + (1.0 - beta1) * eval.grad.row(i);
            v.row(i) = beta2 * v.row(i) + (1.0 - beta2) * eval.grad.row(i).cwiseProduct(eval.grad.row(i));
            const Eigen::RowVectorXd denom = ((v.row(i) / bc2).cwiseSqrt().array() + eps_adam).matrix();
            path.points.row(i) -= lr * (m.row(i) / bc1).cwiseQuotient(denom);
        }
    }

    // Consider the last iterate, then close the trace with the returned
    // best path re-evaluated, so the final trace row always matches the
    // objective recomputed from the returned path.
    if (!result.aborted) {
        try {
            eval = objective_value_and_grad(field, path, lambda);
            if (std::isfinite(eval.objective) && eval.objective < best_objective) {
                best_objective = eval.objective;
                best_length = eval.length;
                best_reg = eval.reg;
                best_points = path.points;
            }
        } catch (const numerical_error&) {
        }
    }
    result.trace.push_back({cfg.iters, best_length, best_reg, best_objective, 0.0});

    result.path.t = t;
    result.path.points = best_points;
    result.final_objective = best_objective;
    return result;
}

InterpolationResult interpolate_end_to_end(const ScoreField& field, const Schedule& schedule,
                                           const Sample& x0_a, const Sample& x0_b, int tau,
                                           const GeodesicConfig& cfg) {
    if (tau < 1 || tau > schedule.T) throw std::invalid_argument("interpolate_end_to_end: tau out of [1, T]");
    InterpolationResult out;
    out.a_tau = ddim_invert(x0_a, tau, field, schedule);
    out.b_tau = ddim_invert(x0_b, tau, field, schedule);
    out.geodesic = geodesic_optimize(field, out.a_tau.x, out.b_tau.x, tau, cfg);
    out.tau_path = out.geodesic.path;
    out.samples0.reserve(cfg.n_steps + 1);
    for (int i = 0; i <= cfg.n_steps; ++i) {
        const Sample at_tau{out.tau_path.points.row(i).transpose(), tau};
        out.samples0.push_back(ddim_generate(at_tau, field, schedule));
    }
    return out;
}

} // namespace scoregeo
