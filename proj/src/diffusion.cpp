#include "scoregeo/diffusion.hpp"

#include <cmath>

namespace scoregeo {

void Sample::validate() const {
    if (!all_finite(x)) throw std::invalid_argument("Sample: non-finite coordinates");
    if (t < 0) throw std::invalid_argument("Sample: negative time");
}

double ReverseStepParams::sigma(int t, const Schedule& schedule) const {
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("ReverseStepParams: eta outside [0,1]");
    if (eta == 0.0) return 0.0;
    const double ab_t = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - 1);
    return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_prev);
}

Sample forward_marginal(const Sample& x0, int t, const Vec& noise, const Schedule& schedule) {
    if (x0.t != 0) throw std::invalid_argument("forward_marginal: input sample must be at t=0");
    if (t < 1 || t > schedule.T) throw std::invalid_argument("forward_marginal: t out of [1, T]");
    if (noise.size() != x0.x.size()) throw std::invalid_argument("forward_marginal: noise dimension mismatch");
    const double ab = schedule.alpha_bar(t);
    return {std::sqrt(ab) * x0.x + std::sqrt(1.0 - ab) * noise, t};
}

Sample ddpm_reverse_step(const Sample& x, const Vec& eps_pred, const Vec& z, const Schedule& schedule) {
    const int t = x.t;
    if (t < 1 || t > schedule.T) throw std::invalid_argument("ddpm_reverse_step: t out of [1, T]");
    if (eps_pred.size() != x.x.size() || z.size() != x.x.size())
        throw std::invalid_argument("ddpm_reverse_step: dimension mismatch");
    const double beta = schedule.beta(t);
    const double ab = schedule.alpha_bar(t);
    Vec out = (x.x - beta / std::sqrt(1.0 - ab) * eps_pred) / std::sqrt(1.0 - beta) + std::sqrt(beta) * z;
    return {std::move(out), t - 1};
}

double ddim_a(const Schedule& schedule, int t) {
    return std::sqrt(schedule.alpha_bar(t - 1) / schedule.alpha_bar(t));
}

double ddim_b(const Schedule& schedule, int t) {
    const double ab_t = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - 1);
    return -std::sqrt(ab_prev * (1.0 - ab_t) / ab_t) + std::sqrt(1.0 - ab_prev);
}

Sample ddim_reverse_step(const Sample& x, const Vec& eps_pred, const ReverseStepParams& params,
                         const Vec& z, const Schedule& schedule) {
    const int t = x.t;
    if (t < 1 || t > schedule.T) throw std::invalid_argument("ddim_reverse_step: t out of [1, T]");
    if (eps_pred.size() != x.x.size() || z.size() != x.x.size())
        throw std::invalid_argument("ddim_reverse_step: dimension mismatch");
    const double sigma = params.sigma(t, schedule); // validates eta
    const double ab_t = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - 1);
    const Vec x0_pred = (x.x - std::sqrt(1.0 - ab_t) * eps_pred) / std::sqrt(ab_t);
    const double dir = std::sqrt(std::max(1.0 - ab_prev - sigma * sigma, 0.0));
    Vec out = std::sqrt(ab_prev) * x0_pred + dir * eps_pred + sigma * z;
    return {std::move(out), t - 1};
}

Vec eps_from_score(const ScoreField& field, const Vec& x, int t, const Schedule& schedule) {
    if (t < 1 || t > schedule.T) throw std::invalid_argument("eps_from_score: t out of [1, T]");
    return -std::sqrt(1.0 - schedule.alpha_bar(t)) * field.score(x, t);
}

Sample ddim_invert(const Sample& x0, int tau, const ScoreField& field, const Schedule& schedule) {
    if (x0.t != 0) throw std::invalid_argument("ddim_invert: input sample must be at t=0");
    if (tau < 1 || tau > schedule.T) throw std::invalid_argument("ddim_invert: tau out of [1, T]");
    Vec x = x0.x;
    for (int t = 1; t <= tau; ++t) {
        // First-order substitution eps(x_t, t) ~ eps(x_{t-1}, t).
        const Vec eps = eps_from_score(field, x, t, schedule);
        x = (x - ddim_b(schedule, t) * eps) / ddim_a(schedule, t);
        if (!all_finite(x)) throw numerical_error("ddim_invert: non-finite state at t=" + std::to_string(t));
    }
    return {std::move(x), tau};
}

Sample ddim_generate(const Sample& x_tau, const ScoreField& field, const Schedule& schedule) {
    const int tau = x_tau.t;
    if (tau < 1 || tau > schedule.T) throw std::invalid_argument("ddim_generate: tau out of [1, T]");
    Sample cur = x_tau;
    const ReverseStepParams det{0.0};
    const Vec zero = Vec::Zero(x_tau.x.size());
    for (int t = tau; t >= 1; --t) {
        const Vec eps = eps_from_score(field, cur.x, t, schedule);
        cur = ddim_reverse_step(cur, eps, det, zero, schedule);
        if (!all_finite(cur.x)) throw numerical_error("ddim_generate: non-finite state at t=" + std::to_string(t));
    }
    return cur;
}

} // namespace scoregeo
