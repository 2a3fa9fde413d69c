#pragma once

#include <vector>

#include "scoregeo/diffusion.hpp"
#include "scoregeo/geodesic_types.hpp"
#include "scoregeo/score_field.hpp"

namespace scoregeo {

// |v|_g = || J_x v ||_2; never materializes the metric matrix.
double metric_vector_length(const ScoreField& field, const Vec& x, int t, const Vec& v);

// Second-order stencils: one-sided three-point at the ends, central inside.
// Returns one velocity per path point, (N+1) x D.
Mat finite_diff_velocities(const Path& path);

// Population variance of the N segment Euclidean lengths.
double variance_regularizer(const Path& path);

// Trapezoidal curve length with local integrand l(s_i) = ||J v_i||.
// Throws numerical_error (with the offending index) on non-finite l.
LengthReport curve_length(const ScoreField& field, const Path& path, double lambda = 0.0);

// The optimizer's objective L + lambda Var and its gradient with respect
// to every path point (callers pin the endpoint rows). The length here is
// the same trapezoidal quadrature with the velocity sampled per segment
// rather than per node: centered stencils have even-odd null modes that
// let folded paths undercount their length, and the segment form does not.
// On smooth paths the two quadratures agree to O(ds^2); curve_length stays
// the reporting form.
struct ObjectiveEval {
    double length;
    double reg;
    double objective;
    Mat grad; // (N+1) x D
};
ObjectiveEval objective_value_and_grad(const ScoreField& field, const Path& path, double lambda);

// Minimizes the discrete curve length plus the segment-variance penalty
// over the interior points, endpoints held fixed. Returns the best iterate.
GeodesicResult geodesic_optimize(const ScoreField& field, const Vec& x_start, const Vec& x_end, int t,
                                 const GeodesicConfig& cfg, const Path* init = nullptr);

// Full pipeline: DDIM-invert both endpoints to tau, optimize the geodesic
// there, DDIM-generate every path point back to t=0. The first and last
// returned samples are the endpoint reconstructions.
struct InterpolationResult {
    std::vector<Sample> samples0; // N+1 samples at t=0
    Path tau_path;                // optimized path at t=tau
    GeodesicResult geodesic;
    Sample a_tau, b_tau;          // inverted endpoints
};
InterpolationResult interpolate_end_to_end(const ScoreField& field, const Schedule& schedule,
                                           const Sample& x0_a, const Sample& x0_b, int tau,
                                           const GeodesicConfig& cfg);

} // namespace scoregeo
