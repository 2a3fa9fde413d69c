#pragma once

#include "scoregeo/schedule.hpp"
#include "scoregeo/score_field.hpp"

namespace scoregeo {

// A point of the diffusion process: coordinates plus the time index they
// live at (t=0 is data, t=T is near-isotropic noise).
struct Sample {
    Vec x;
    int t = 0;

    int dim() const { return static_cast<int>(x.size()); }
    void validate() const;
};

// DDIM stochasticity control. eta = 0 is the deterministic sampler, eta = 1
// recovers the DDPM posterior variance family.
struct ReverseStepParams {
    double eta = 0.0;

    // sigma_t = eta sqrt((1-abar_{t-1})/(1-abar_t)) sqrt(1 - abar_t/abar_{t-1})
    double sigma(int t, const Schedule& schedule) const;
};

// Closed-form marginal x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) noise.
Sample forward_marginal(const Sample& x0, int t, const Vec& noise, const Schedule& schedule);

// x_{t-1} = (x_t - beta_t/sqrt(1-abar_t) eps) / sqrt(1-beta_t) + sqrt(beta_t) z
Sample ddpm_reverse_step(const Sample& x, const Vec& eps_pred, const Vec& z, const Schedule& schedule);

Sample ddim_reverse_step(const Sample& x, const Vec& eps_pred, const ReverseStepParams& params,
                         const Vec& z, const Schedule& schedule);

// Deterministic (eta=0) DDIM coefficients: x_{t-1} = a_t x_t + b_t eps.
double ddim_a(const Schedule& schedule, int t);
double ddim_b(const Schedule& schedule, int t);

// eps_theta(x, t) = -sqrt(1 - abar_t) s(x, t); the score is canonical and
// the noise prediction is a view of it.
Vec eps_from_score(const ScoreField& field, const Vec& x, int t, const Schedule& schedule);

// Iterates x_t = (x_{t-1} - b_t eps(x_{t-1}, t)) / a_t from t=1 to tau.
Sample ddim_invert(const Sample& x0, int tau, const ScoreField& field, const Schedule& schedule);

// eta=0 chain of reverse steps from tau down to 0.
Sample ddim_generate(const Sample& x_tau, const ScoreField& field, const Schedule& schedule);

} // namespace scoregeo
