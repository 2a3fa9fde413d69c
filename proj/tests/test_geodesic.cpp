#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scoregeo/baselines.hpp"
#include "scoregeo/denoiser_net.hpp"
#include "scoregeo/geodesic.hpp"
#include "scoregeo/mixture.hpp"
#include "test_helpers.hpp"

using namespace scoregeo;
using namespace scoregeo::testing;

namespace {

// Field that goes non-finite after a set number of jvp calls.
class ExplodingField final : public ScoreField {
  public:
    ExplodingField(int dim, int t_max, int healthy_calls)
        : dim_(dim), t_max_(t_max), remaining_(healthy_calls) {}
    int dim() const override { return dim_; }
    int max_time() const override { return t_max_; }
    Vec score(const Vec& x, int) const override { return -x; }
    Vec jvp(const Vec&, int, const Vec& v) const override {
        if (--remaining_ < 0) return Vec::Constant(dim_, std::nan(""));
        return -v;
    }

  private:
    int dim_;
    int t_max_;
    mutable int remaining_;
};

MixtureScoreField flat_isotropic_field(int dim, const Schedule& s) {
    return {single_gaussian(Vec::Zero(dim), Mat::Identity(dim, dim)), s};
}

Path quadratic_path(const Vec& a, const Vec& c, const Vec& b, int n, int t) {
    Path p;
    p.t = t;
    p.points.resize(n + 1, a.size());
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        p.points.row(i) = ((1 - s) * (1 - s) * a + 2 * s * (1 - s) * c + s * s * b).transpose();
    }
    return p;
}

double max_deviation_from_segment(const Path& path, const Vec& a, const Vec& b) {
    double dev = 0.0;
    const int n = path.n_steps();
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        dev = std::max(dev, (path.points.row(i).transpose() - ((1 - s) * a + s * b)).norm());
    }
    return dev;
}

} // namespace

TEST_CASE("metric_vector_length: zero vector and isotropic field") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field = flat_isotropic_field(3, s);
    Rng rng(1);
    const Vec x = rng.normal_vec(3);
    CHECK(metric_vector_length(field, x, 0, Vec::Zero(3)) == 0.0);
    // J = -I for a unit Gaussian, so the metric length equals the norm.
    const Vec v = rng.normal_vec(3);
    CHECK(rel_err(metric_vector_length(field, x, 0, v), v.norm()) < 1e-12);
}

TEST_CASE("metric_vector_length: anisotropic Gaussian closed form") {
    const Schedule s = make_schedule(10);
    Mat cov = Mat::Zero(2, 2);
    cov(0, 0) = 1.0;
    cov(1, 1) = 4.0;
    const MixtureScoreField field(single_gaussian(Vec::Zero(2), cov), s);
    Vec v(2);
    v << 1.0, 1.0;
    // J = -diag(1, 1/4) so |v|_g = sqrt(1 + 1/16).
    CHECK(rel_err(metric_vector_length(field, Vec::Zero(2), 0, v), std::sqrt(1.0 + 1.0 / 16.0)) < 1e-12);
}

TEST_CASE("finite_diff_velocities: exact on affine paths") {
    Rng rng(2);
    const Vec a = rng.normal_vec(3);
    const Vec b = rng.normal_vec(3);
    Path p;
    p.t = 0;
    const int n = 7;
    p.points.resize(n + 1, 3);
    for (int i = 0; i <= n; ++i)
        p.points.row(i) = (a + (static_cast<double>(i) / n) * b).transpose();
    const Mat vel = finite_diff_velocities(p);
    for (int i = 0; i <= n; ++i) CHECK(rel_err(Vec(vel.row(i).transpose()), b) < 1e-12);
}

TEST_CASE("finite_diff_velocities: one-sided stencils exact on quadratics") {
    // x(s) = s^2 in 1-D: v(0) = 0, v(1) = 2, interior v(s) = 2s.
    const int n = 10;
    Path p;
    p.t = 0;
    p.points.resize(n + 1, 1);
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        p.points(i, 0) = s * s;
    }
    const Mat vel = finite_diff_velocities(p);
    CHECK(std::abs(vel(0, 0)) < 1e-13);
    CHECK(vel(n, 0) == doctest::Approx(2.0).epsilon(1e-12));
    for (int i = 1; i < n; ++i) CHECK(vel(i, 0) == doctest::Approx(2.0 * i / n).epsilon(1e-12));
}

TEST_CASE("finite_diff_velocities: constant path and short path") {
    Path p;
    p.t = 0;
    p.points = Mat::Constant(5, 2, 0.7);
    CHECK(finite_diff_velocities(p).norm() < 1e-14);
    Path short_path;
    short_path.t = 0;
    short_path.points = Mat::Zero(2, 2); // N = 1
    CHECK_THROWS_AS(finite_diff_velocities(short_path), std::invalid_argument);
}

TEST_CASE("curve_length: constant path has zero length") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field = flat_isotropic_field(2, s);
    Path p;
    p.t = 0;
    p.points = Mat::Constant(6, 2, 0.3);
    const LengthReport rep = curve_length(field, p);
    // The end stencils leave ~1e-16 of cancellation residue on constant paths.
    CHECK(rep.total_length < 1e-14);
    CHECK(rep.reg_value < 1e-28);
    CHECK(rep.objective < 1e-14);
}

TEST_CASE("curve_length: straight line under the isotropic metric") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field = flat_isotropic_field(2, s);
    Rng rng(3);
    const Vec a = rng.normal_vec(2);
    const Vec b = rng.normal_vec(2);
    for (int n : {2, 5, 17}) {
        const Path p = lerp({a, b, n, 0});
        CHECK(rel_err(curve_length(field, p).total_length, (b - a).norm()) < 1e-12);
    }
}

TEST_CASE("curve_length: straight line under an anisotropic metric") {
    const Schedule s = make_schedule(10);
    Mat cov = Mat::Zero(2, 2);
    cov(0, 0) = 1.0;
    cov(1, 1) = 4.0;
    const MixtureScoreField field(single_gaussian(Vec::Zero(2), cov), s);
    Rng rng(4);
    const Vec a = rng.normal_vec(2);
    const Vec b = rng.normal_vec(2);
    Mat system = Mat::Zero(2, 2);
    system(0, 0) = 1.0;
    system(1, 1) = 0.25;
    const double expected = (system * (b - a)).norm();
    CHECK(rel_err(curve_length(field, lerp({a, b, 8, 0})).total_length, expected) < 1e-12);
}

TEST_CASE("curve_length: aborts on non-finite local lengths") {
    const ExplodingField field(2, 10, 3);
    Path p;
    p.t = 0;
    p.points.resize(5, 2);
    for (int i = 0; i < 5; ++i) p.points.row(i) = Vec::Constant(2, static_cast<double>(i)).transpose();
    CHECK_THROWS_AS(curve_length(field, p), numerical_error);
}

TEST_CASE("variance_regularizer: uniform spacing and the {1,3} case") {
    Path uniform;
    uniform.t = 0;
    uniform.points.resize(5, 1);
    for (int i = 0; i < 5; ++i) uniform.points(i, 0) = 0.25 * i;
    CHECK(variance_regularizer(uniform) < 1e-30);

    Path two;
    two.t = 0;
    two.points.resize(3, 1);
    two.points << 0.0, 1.0, 4.0; // segment lengths 1 and 3, population variance 1
    CHECK(variance_regularizer(two) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("variance_regularizer: matches a direct two-pass computation") {
    Rng rng(5);
    Path p;
    p.t = 0;
    p.points.resize(9, 3);
    for (int i = 0; i < 9; ++i) p.points.row(i) = rng.normal_vec(3).transpose();
    std::vector<double> seg;
    for (int i = 0; i < 8; ++i) seg.push_back((p.points.row(i + 1) - p.points.row(i)).norm());
    double mean = 0.0;
    for (double v : seg) mean += v;
    mean /= static_cast<double>(seg.size());
    double var = 0.0;
    for (double v : seg) var += (v - mean) * (v - mean);
    var /= static_cast<double>(seg.size());
    CHECK(rel_err(variance_regularizer(p), var) < 1e-13);
}

TEST_CASE("objective gradient passes the finite-difference check on all backends") {
    const Schedule s = make_schedule(12);
    Rng rng(6);

    auto check_field = [&](const ScoreField& field, int t, double tol) {
        Path p;
        p.t = t;
        const int n = 6;
        p.points.resize(n + 1, field.dim());
        for (int i = 0; i <= n; ++i) p.points.row(i) = rng.normal_vec(field.dim()).transpose();
        const double lambda = 0.37;
        const ObjectiveEval eval = objective_value_and_grad(field, p, lambda);
        double worst = 0.0;
        const double h = 1e-5;
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j < field.dim(); ++j) {
                Path pp = p, pm = p;
                pp.points(i, j) += h;
                pm.points(i, j) -= h;
                const double fd = (objective_value_and_grad(field, pp, lambda).objective -
                                   objective_value_and_grad(field, pm, lambda).objective) /
                                  (2.0 * h);
                worst = std::max(worst, std::abs(fd - eval.grad(i, j)) / std::max(1.0, std::abs(fd)));
            }
        }
        CHECK(worst < tol);
    };

    // Mixture backend: exact vjp and third-order contraction.
    check_field(MixtureScoreField(gap_mixture(), s), 2, 1e-3);
    // Network backend: forward-over-reverse duals.
    check_field(NetScoreField(DenoiserNet(2, 12, {{14, 14}, 8}, 3), s), 4, 1e-3);
    // Base-class finite-difference fallbacks for vjp / grad_jvp_form.
    Mat j(2, 2);
    j << -1.0, 0.3, -0.2, -0.8;
    check_field(ConstantJacobianField(j, Vec::Zero(2), 12), 1, 1e-3);
}

TEST_CASE("geodesic_optimize: identical endpoints return the constant path") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field = flat_isotropic_field(2, s);
    Rng rng(7);
    const Vec a = rng.normal_vec(2);
    GeodesicConfig cfg;
    cfg.iters = 50;
    const GeodesicResult res = geodesic_optimize(field, a, a, 0, cfg);
    CHECK(res.final_objective == 0.0);
    for (int i = 0; i <= cfg.n_steps; ++i) CHECK((res.path.points.row(i).transpose() - a).norm() == 0.0);
}

TEST_CASE("geodesic_optimize: flat metric recovers the straight segment") {
    const Schedule s = make_schedule(10);
    Rng rng(8);
    for (int d : {2, 5}) {
        const MixtureScoreField field = flat_isotropic_field(d, s);
        for (int trial = 0; trial < 5; ++trial) {
            const Vec a = 2.0 * rng.normal_vec(d);
            const Vec b = 2.0 * rng.normal_vec(d);
            GeodesicConfig cfg;
            cfg.iters = 3000;
            const GeodesicResult res = geodesic_optimize(field, a, b, 0, cfg);
            CHECK(max_deviation_from_segment(res.path, a, b) < 1e-3);
            CHECK(rel_err(curve_length(field, res.path).total_length, (b - a).norm()) < 1e-3);
        }
    }
}

TEST_CASE("geodesic_optimize: endpoints stay pinned bit-exactly") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field(gap_mixture(), s);
    Rng rng(9);
    const Vec a = rng.normal_vec(2);
    const Vec b = rng.normal_vec(2);
    GeodesicConfig cfg;
    cfg.iters = 200;
    const GeodesicResult res = geodesic_optimize(field, a, b, 3, cfg);
    CHECK((res.path.points.row(0).transpose() - a).norm() == 0.0);
    CHECK((res.path.points.row(cfg.n_steps).transpose() - b).norm() == 0.0);
}

TEST_CASE("geodesic_optimize: trace bookkeeping and objective consistency") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field(gap_mixture(), s);
    Vec a(2), b(2);
    a << -2.0, 0.0;
    b << 2.0, 0.0;
    GeodesicConfig cfg;
    cfg.iters = 500;
    const GeodesicResult res = geodesic_optimize(field, a, b, 0, cfg);

    // Best-so-far is non-increasing and the final row is the minimum.
    double best = std::numeric_limits<double>::infinity();
    for (const TraceRow& row : res.trace) best = std::min(best, row.objective);
    CHECK(res.final_objective == best);
    CHECK(res.final_objective <= res.trace.front().objective);
    CHECK(res.trace.back().objective == best);

    // Recomputing the objective from the returned path matches the final
    // trace entry.
    const ObjectiveEval recomputed = objective_value_and_grad(field, res.path, res.lambda_used);
    CHECK(std::abs(recomputed.objective - res.trace.back().objective) < 1e-10);

    // The reporting quadrature agrees with the optimizer quadrature to the
    // discretization order.
    const LengthReport rep = curve_length(field, res.path, res.lambda_used);
    CHECK(rel_err(rep.total_length, recomputed.length) < 5e-2);
}

TEST_CASE("geodesic_optimize: large lambda forces uniform spacing") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field(gap_mixture(), s);
    Vec a(2), b(2);
    a << -2.0, 0.0;
    b << 2.0, 0.0;
    GeodesicConfig cfg;
    cfg.iters = 2000;
    const double init_len = curve_length(field, lerp({a, b, cfg.n_steps, 0})).total_length;
    cfg.lambda = 1e3 * init_len;
    const GeodesicResult res = geodesic_optimize(field, a, b, 0, cfg);
    double mean_seg = 0.0;
    for (int i = 0; i < cfg.n_steps; ++i)
        mean_seg += (res.path.points.row(i + 1) - res.path.points.row(i)).norm();
    mean_seg /= cfg.n_steps;
    CHECK(variance_regularizer(res.path) < 1e-6 * mean_seg * mean_seg);
}

TEST_CASE("geodesic_optimize: aborts gracefully on non-finite fields") {
    const ExplodingField field(2, 10, 400);
    Vec a(2), b(2);
    a << -1.0, 0.0;
    b << 1.0, 0.5;
    GeodesicConfig cfg;
    cfg.iters = 200;
    const GeodesicResult res = geodesic_optimize(field, a, b, 0, cfg);
    CHECK(res.aborted);
    CHECK(!res.diagnostic.empty());
    CHECK(res.path.points.allFinite());
}

TEST_CASE("geodesic_optimize: user-supplied init must match the request") {
    const Schedule s = make_schedule(10);
    const MixtureScoreField field = flat_isotropic_field(2, s);
    Vec a(2), b(2);
    a << -1.0, 0.0;
    b << 1.0, 0.0;
    GeodesicConfig cfg;
    cfg.iters = 5;
    Path init = lerp({a, b, cfg.n_steps, 0});
    CHECK_NOTHROW(geodesic_optimize(field, a, b, 0, cfg, &init));
    Path wrong = lerp({a, Vec(2.0 * b), cfg.n_steps, 0});
    CHECK_THROWS_AS(geodesic_optimize(field, a, b, 0, cfg, &wrong), std::invalid_argument);
}

TEST_CASE("curve_length converges at second order in the step count") {
    const Schedule s = make_schedule(10);
    Mat cov = Mat::Zero(2, 2);
    cov(0, 0) = 1.0;
    cov(1, 1) = 4.0;
    const MixtureScoreField field(single_gaussian(Vec::Zero(2), cov), s);
    Vec a(2), b(2), c(2);
    a << -1.0, -0.5;
    b << 1.5, 1.0;
    c << 0.3, 1.4;
    auto len_at = [&](int n) { return curve_length(field, quadratic_path(a, c, b, n, 0)).total_length; };
    const double ref = len_at(64);
    const double e4 = std::abs(len_at(4) - ref);
    const double e8 = std::abs(len_at(8) - ref);
    const double e16 = std::abs(len_at(16) - ref);
    CHECK(e4 / e8 > 3.5);
    CHECK(e4 / e8 < 4.5);
    CHECK(e8 / e16 > 3.5);
    CHECK(e8 / e16 < 4.5);
}

TEST_CASE("interpolate_end_to_end: identical inputs reproduce the reconstruction") {
    const Schedule s = make_schedule(60);
    const MixtureScoreField field(single_gaussian_1d(0.2, 1.1), s);
    Vec x(1);
    x << 0.8;
    GeodesicConfig cfg;
    cfg.iters = 30;
    const InterpolationResult res = interpolate_end_to_end(field, s, {x, 0}, {x, 0}, 30, cfg);
    REQUIRE(static_cast<int>(res.samples0.size()) == cfg.n_steps + 1);
    const Sample recon = ddim_generate(ddim_invert({x, 0}, 30, field, s), field, s);
    for (const Sample& out : res.samples0) {
        CHECK(out.t == 0);
        CHECK(out.x[0] == recon.x[0]);
    }
}

TEST_CASE("interpolate_end_to_end: flat metric matches the lerp pipeline") {
    const int T = 50;
    const Schedule s = make_schedule(T);
    const MixtureScoreField field = flat_isotropic_field(2, s);
    Rng rng(10);
    const Sample xa{rng.normal_vec(2), 0};
    const Sample xb{rng.normal_vec(2), 0};
    GeodesicConfig cfg;
    cfg.iters = 3000;
    const InterpolationResult geo = interpolate_end_to_end(field, s, xa, xb, T, cfg);

    const Sample a_tau = ddim_invert(xa, T, field, s);
    const Sample b_tau = ddim_invert(xb, T, field, s);
    const Path lerp_path = lerp({a_tau.x, b_tau.x, cfg.n_steps, T});
    for (int i = 0; i <= cfg.n_steps; ++i) {
        const Sample from_lerp = ddim_generate({lerp_path.points.row(i).transpose(), T}, field, s);
        CHECK((geo.samples0[static_cast<size_t>(i)].x - from_lerp.x).norm() < 1e-3);
    }

    // First and last outputs are exactly the endpoint reconstructions.
    const Sample recon_a = ddim_generate(a_tau, field, s);
    const Sample recon_b = ddim_generate(b_tau, field, s);
    CHECK((geo.samples0.front().x - recon_a.x).norm() == 0.0);
    CHECK((geo.samples0.back().x - recon_b.x).norm() == 0.0);
}
