#pragma once

#include <string>

#include "scoregeo/common.hpp"

namespace scoregeo {

// Variance schedule of the forward process. Time is 1-based for beta and
// alpha_bar, with alpha_bar(0) defined as 1 so the t=1 reverse-step
// coefficients are well-defined.
struct Schedule {
    int T = 0;
    Vec betas;      // betas[i] is beta_{i+1}, size T, each in (0,1)
    Vec alphas_bar; // alphas_bar[i] is the cumulative product up to t=i+1

    std::string kind = "linear";
    double beta_min = 0.0;
    double beta_max = 0.0;

    double beta(int t) const;      // t in [1, T]
    double alpha_bar(int t) const; // t in [0, T]

    // Checks the type invariants: alphas_bar strictly decreasing in (0,1)
    // and consistent with the cumulative product of (1 - beta).
    void validate() const;
};

// Linear beta ramp from beta_min to beta_max over T steps.
Schedule make_schedule(int T, double beta_min = 1e-4, double beta_max = 0.02);

std::string schedule_to_config(const Schedule& s);
Schedule schedule_from_config(const std::string& text);

} // namespace scoregeo
