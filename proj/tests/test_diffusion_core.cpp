#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scoregeo/diffusion.hpp"
#include "scoregeo/mixture.hpp"
#include "scoregeo/schedule.hpp"
#include "test_helpers.hpp"

using namespace scoregeo;
using namespace scoregeo::testing;

namespace {

Schedule manual_schedule(std::initializer_list<double> betas) {
    Schedule s;
    s.T = static_cast<int>(betas.size());
    s.betas.resize(s.T);
    s.alphas_bar.resize(s.T);
    int i = 0;
    double prod = 1.0;
    for (double b : betas) {
        s.betas[i] = b;
        prod *= 1.0 - b;
        s.alphas_bar[i] = prod;
        ++i;
    }
    s.beta_min = s.betas.minCoeff();
    s.beta_max = s.betas.maxCoeff();
    s.validate();
    return s;
}

Vec scalar_vec(double v) {
    Vec x(1);
    x << v;
    return x;
}

} // namespace

TEST_CASE("make_schedule: constant beta cumulative product") {
    const Schedule s = make_schedule(2, 0.5, 0.5);
    CHECK(s.alphas_bar[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.alphas_bar[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.alpha_bar(0) == 1.0);
}

TEST_CASE("make_schedule: default ramp is strictly decreasing with valid tail") {
    const Schedule s = make_schedule(50, 1e-4, 0.02);
    s.validate();
    double prod = 1.0;
    for (int t = 1; t <= 50; ++t) {
        const double beta = 1e-4 + (0.02 - 1e-4) * (t - 1) / 49.0;
        CHECK(s.beta(t) == doctest::Approx(beta).epsilon(1e-14));
        prod *= 1.0 - beta;
        CHECK(s.alpha_bar(t) == doctest::Approx(prod).epsilon(1e-13));
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
    CHECK(s.alpha_bar(50) > 0.0);
    CHECK(s.alpha_bar(50) < 1.0);
}

TEST_CASE("make_schedule: rejects bad arguments") {
    CHECK_THROWS_AS(make_schedule(1, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(10, 0.02, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(10, 1e-4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(10, std::nan(""), 0.02), std::invalid_argument);
}

TEST_CASE("schedule serialization round-trips") {
    const Schedule s = make_schedule(123, 2e-4, 0.015);
    const Schedule back = schedule_from_config(schedule_to_config(s));
    CHECK(back.T == s.T);
    CHECK((back.betas - s.betas).norm() == 0.0);
    CHECK((back.alphas_bar - s.alphas_bar).norm() == 0.0);
}

TEST_CASE("forward_marginal: zero-noise scaling") {
    const Schedule s = make_schedule(2, 0.5, 0.5); // alpha_bar(2) = 0.25
    Vec x0(3);
    x0 << 1.0, -2.0, 3.0;
    const Sample xt = forward_marginal({x0, 0}, 2, Vec::Zero(3), s);
    CHECK(xt.t == 2);
    CHECK((xt.x - 0.5 * x0).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("forward_marginal: pure-noise case") {
    const Schedule s = manual_schedule({0.81, 0.5}); // alpha_bar(1) = 0.19
    Vec e1 = Vec::Zero(2);
    e1[0] = 1.0;
    const Sample xt = forward_marginal({Vec::Zero(2), 0}, 1, e1, s);
    CHECK(xt.x[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(xt.x[1] == 0.0);
}

TEST_CASE("forward_marginal: matches closed form on random input") {
    const Schedule s = make_schedule(30);
    Rng rng(7);
    const Vec x0 = rng.normal_vec(5);
    const Vec eps = rng.normal_vec(5);
    const int t = 17;
    const Sample xt = forward_marginal({x0, 0}, t, eps, s);
    const Vec expected = std::sqrt(s.alpha_bar(t)) * x0 + std::sqrt(1.0 - s.alpha_bar(t)) * eps;
    CHECK((xt.x - expected).norm() == 0.0);
}

TEST_CASE("forward_marginal: rejects mismatched noise and bad t") {
    const Schedule s = make_schedule(10);
    CHECK_THROWS_AS(forward_marginal({Vec::Zero(2), 0}, 1, Vec::Zero(3), s), std::invalid_argument);
    CHECK_THROWS_AS(forward_marginal({Vec::Zero(2), 0}, 0, Vec::Zero(2), s), std::invalid_argument);
    CHECK_THROWS_AS(forward_marginal({Vec::Zero(2), 0}, 11, Vec::Zero(2), s), std::invalid_argument);
}

TEST_CASE("ddpm_reverse_step: zero prediction limit") {
    const Schedule s = make_schedule(5, 0.1, 0.1);
    Vec x(2);
    x << 2.0, -4.0;
    const Sample prev = ddpm_reverse_step({x, 3}, Vec::Zero(2), Vec::Zero(2), s);
    CHECK(prev.t == 2);
    CHECK((prev.x - x / std::sqrt(0.9)).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ddpm_reverse_step: hand-computed scalar case") {
    const Schedule s = manual_schedule({0.19, 0.5}); // beta_1 = 0.19, alpha_bar(1) = 0.81
    const Sample prev = ddpm_reverse_step({scalar_vec(1.0), 1}, scalar_vec(1.0), scalar_vec(0.0), s);
    const double expected = (1.0 - 0.19 / std::sqrt(1.0 - 0.81)) / std::sqrt(1.0 - 0.19);
    CHECK(prev.x[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("ddpm_reverse_step: noise term is additive") {
    const Schedule s = make_schedule(8);
    Rng rng(3);
    const Vec x = rng.normal_vec(4);
    const Vec eps = rng.normal_vec(4);
    const Vec z = rng.normal_vec(4);
    const Sample with_z = ddpm_reverse_step({x, 5}, eps, z, s);
    const Sample without = ddpm_reverse_step({x, 5}, eps, Vec::Zero(4), s);
    CHECK(rel_err(Vec(with_z.x - without.x), Vec(std::sqrt(s.beta(5)) * z)) < 1e-12);
}

TEST_CASE("ddpm_reverse_step: t=0 rejected") {
    const Schedule s = make_schedule(8);
    CHECK_THROWS_AS(ddpm_reverse_step({Vec::Zero(2), 0}, Vec::Zero(2), Vec::Zero(2), s),
                    std::invalid_argument);
}

TEST_CASE("ddim_reverse_step: eta=0 pure rescaling") {
    const Schedule s = make_schedule(6);
    Vec x(3);
    x << 1.0, 2.0, 3.0;
    const Sample prev = ddim_reverse_step({x, 4}, Vec::Zero(3), {0.0}, Vec::Zero(3), s);
    const double a = std::sqrt(s.alpha_bar(3) / s.alpha_bar(4));
    CHECK(rel_err(prev.x, Vec(a * x)) < 1e-15);
}

TEST_CASE("ddim_reverse_step: scalar coefficient case") {
    const Schedule s = make_schedule(2, 0.5, 0.5); // alpha_bar: 0.5, 0.25
    const Sample prev = ddim_reverse_step({scalar_vec(1.0), 2}, scalar_vec(1.0), {0.0}, scalar_vec(0.0), s);
    const double a = std::sqrt(2.0);
    const double b = -std::sqrt(0.5 * 0.75 / 0.25) + std::sqrt(0.5);
    CHECK(ddim_a(s, 2) == doctest::Approx(a).epsilon(1e-15));
    CHECK(ddim_b(s, 2) == doctest::Approx(b).epsilon(1e-15));
    CHECK(prev.x[0] == doctest::Approx(a + b).epsilon(1e-12));
}

TEST_CASE("ddim_reverse_step: eta=1 recovers the DDPM posterior variance family") {
    const Schedule s = make_schedule(1000);
    const ReverseStepParams ddpm_like{1.0};
    for (int t : {2, 10, 500, 1000}) {
        const double sigma2 = ddpm_like.sigma(t, s) * ddpm_like.sigma(t, s);
        const double posterior = s.beta(t) * (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t));
        CHECK(rel_err(sigma2, posterior) < 1e-12);
    }
    // At large t the posterior variance approaches beta_t itself.
    const double sigma2_T = ddpm_like.sigma(1000, s) * ddpm_like.sigma(1000, s);
    CHECK(rel_err(sigma2_T, s.beta(1000)) < 0.05);
}

TEST_CASE("Sample: rejects non-finite coordinates") {
    Sample s{Vec::Constant(2, std::nan("")), 3};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.x = Vec::Zero(2);
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("ReverseStepParams: eta=0 means sigma=0 at every t") {
    const Schedule s = make_schedule(100);
    const ReverseStepParams det{0.0};
    for (int t = 1; t <= 100; ++t) CHECK(det.sigma(t, s) == 0.0);
}

TEST_CASE("ddim_reverse_step: rejects t=0 and eta outside [0,1]") {
    const Schedule s = make_schedule(4);
    CHECK_THROWS_AS(ddim_reverse_step({Vec::Zero(2), 0}, Vec::Zero(2), {0.0}, Vec::Zero(2), s),
                    std::invalid_argument);
    CHECK_THROWS_AS(ddim_reverse_step({Vec::Zero(2), 2}, Vec::Zero(2), {1.5}, Vec::Zero(2), s),
                    std::invalid_argument);
    CHECK_THROWS_AS(ddim_reverse_step({Vec::Zero(2), 2}, Vec::Zero(2), {-0.1}, Vec::Zero(2), s),
                    std::invalid_argument);
}

TEST_CASE("ddim_invert: zero score field is a pure rescaling chain") {
    const Schedule s = make_schedule(40);
    const ZeroField field(3, 40);
    Rng rng(11);
    const Vec x0 = rng.normal_vec(3);
    const Sample x_tau = ddim_invert({x0, 0}, 25, field, s);
    CHECK(x_tau.t == 25);
    CHECK(rel_err(x_tau.x, Vec(std::sqrt(s.alpha_bar(25)) * x0)) < 1e-12);
}

TEST_CASE("ddim_generate: zero score field telescopes back") {
    const Schedule s = make_schedule(40);
    const ZeroField field(3, 40);
    Rng rng(12);
    const Vec x_tau = rng.normal_vec(3);
    const Sample x0 = ddim_generate({x_tau, 25}, field, s);
    CHECK(x0.t == 0);
    CHECK(rel_err(x0.x, Vec(x_tau / std::sqrt(s.alpha_bar(25)))) < 1e-12);
}

TEST_CASE("ddim_invert: tau out of range rejected") {
    const Schedule s = make_schedule(10);
    const ZeroField field(2, 10);
    CHECK_THROWS_AS(ddim_invert({Vec::Zero(2), 0}, 0, field, s), std::invalid_argument);
    CHECK_THROWS_AS(ddim_invert({Vec::Zero(2), 0}, 11, field, s), std::invalid_argument);
}

TEST_CASE("ddim round trip: error shrinks as the schedule refines") {
    // Beta bounds scale with 1000/T so every T reaches the same noise level
    // at tau = 0.4 T; what varies is only the step size.
    const Vec x0 = scalar_vec(0.7);
    double prev_err = std::numeric_limits<double>::infinity();
    for (int T : {50, 200, 1000}) {
        const double scale = 1000.0 / T;
        const Schedule s = make_schedule(T, 1e-4 * scale, 0.02 * scale);
        const MixtureScoreField field(single_gaussian_1d(0.3, 1.2), s);
        const int tau = (2 * T) / 5;
        const Sample inverted = ddim_invert({x0, 0}, tau, field, s);
        const Sample back = ddim_generate(inverted, field, s);
        const double err = (back.x - x0).norm();
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-3);
}

TEST_CASE("ddim round trip: T=1000 MSE bound up to tau = 0.6 T") {
    const Schedule s = make_schedule(1000);
    Rng rng(9);
    Vec x0(4);
    for (int i = 0; i < 4; ++i) x0[i] = rng.normal();
    const MixtureDensity base4 = single_gaussian(Vec::Zero(4), Mat::Identity(4, 4));
    const MixtureScoreField field4(base4, s);
    for (int tau : {200, 400, 600}) {
        const Sample back = ddim_generate(ddim_invert({x0, 0}, tau, field4, s), field4, s);
        CHECK((back.x - x0).squaredNorm() / 4.0 <= 1e-2);
    }
}

TEST_CASE("ddim operations are deterministic") {
    const Schedule s = make_schedule(100);
    const MixtureScoreField field(single_gaussian_1d(0.5, 0.8), s);
    const Vec x0 = scalar_vec(-0.4);
    const Sample a = ddim_invert({x0, 0}, 60, field, s);
    const Sample b = ddim_invert({x0, 0}, 60, field, s);
    CHECK(a.x[0] == b.x[0]);
    const Sample ga = ddim_generate(a, field, s);
    const Sample gb = ddim_generate(b, field, s);
    CHECK(ga.x[0] == gb.x[0]);
}

TEST_CASE("forward chain matches closed-form marginal in distribution") {
    const Schedule s = make_schedule(20);
    const int t_check = 12;
    Vec x0(2);
    x0 << 1.5, -0.5;
    Rng rng(21);
    const int n_draws = 10000;
    Mat draws(n_draws, 2);
    for (int d = 0; d < n_draws; ++d) {
        Vec x = x0;
        for (int t = 1; t <= t_check; ++t)
            x = std::sqrt(1.0 - s.beta(t)) * x + std::sqrt(s.beta(t)) * rng.normal_vec(2);
        draws.row(d) = x.transpose();
    }
    const Vec mean_true = std::sqrt(s.alpha_bar(t_check)) * x0;
    const double var_true = 1.0 - s.alpha_bar(t_check);
    for (int j = 0; j < 2; ++j) {
        const double mean_emp = draws.col(j).mean();
        const double var_emp = (draws.col(j).array() - mean_emp).square().sum() / (n_draws - 1);
        CHECK(std::abs(mean_emp - mean_true[j]) < 3.0 * std::sqrt(var_true / n_draws));
        CHECK(std::abs(var_emp - var_true) < 3.0 * var_true * std::sqrt(2.0 / (n_draws - 1)));
    }
}

// Regression anchor produced by the first verified build.
TEST_CASE("ddim_generate: fixed-seed regression value") {
    const Schedule s = make_schedule(100);
    const MixtureScoreField field(single_gaussian_1d(0.25, 1.5), s);
    const Sample out = ddim_generate({scalar_vec(1.0), 50}, field, s);
    CHECK(out.x[0] == doctest::Approx(1.0589016473255073).epsilon(1e-13));
}

TEST_CASE("deterministic reverse chain lands near the Gaussian mean") {
    const int T = 200;
    const Schedule s = make_schedule(T);
    Vec mu(2);
    mu << 1.0, -2.0;
    const MixtureScoreField field(single_gaussian(mu, Mat::Identity(2, 2)), s);
    Rng rng(31);
    const Vec x0 = mu + rng.normal_vec(2);
    Sample cur{std::sqrt(s.alpha_bar(T)) * x0, T};
    const ReverseStepParams det{0.0};
    for (int t = T; t >= 1; --t) {
        const Vec eps = eps_from_score(field, cur.x, t, s);
        cur = ddim_reverse_step(cur, eps, det, Vec::Zero(2), s);
    }
    CHECK(all_finite(cur.x));
    CHECK((cur.x - mu).norm() < 10.0); // unit covariance: within 10 standard deviations
}
