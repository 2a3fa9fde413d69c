#pragma once

#include "scoregeo/geodesic_types.hpp"

namespace scoregeo {

struct InterpolationRequest {
    Vec x_a;
    Vec x_b;
    int n_steps = 10; // N; the path has N+1 points
    int t = 0;        // diffusion time tag of both endpoints

    void validate() const;
};

// x^(s) = (1-s) x_a + s x_b on the uniform grid s_i = i/N.
Path lerp(const InterpolationRequest& req);

// Great-circle interpolation x^(s) = sin((1-s)theta)/sin(theta) x_a
// + sin(s theta)/sin(theta) x_b. Falls back to lerp for near-parallel
// inputs; rejects zero-norm and near-antipodal inputs.
Path slerp(const InterpolationRequest& req);

} // namespace scoregeo
