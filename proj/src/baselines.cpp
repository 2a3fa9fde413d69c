#include "scoregeo/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace scoregeo {

void InterpolationRequest::validate() const {
    if (x_a.size() != x_b.size()) throw std::invalid_argument("InterpolationRequest: dimension mismatch");
    if (n_steps < 1) throw std::invalid_argument("InterpolationRequest: N must be >= 1");
    if (!all_finite(x_a) || !all_finite(x_b))
        throw std::invalid_argument("InterpolationRequest: non-finite endpoint");
}

Path lerp(const InterpolationRequest& req) {
    req.validate();
    const int n = req.n_steps;
    Path path;
    path.t = req.t;
    path.points.resize(n + 1, req.x_a.size());
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        path.points.row(i) = (1.0 - s) * req.x_a.transpose() + s * req.x_b.transpose();
    }
    return path;
}

Path slerp(const InterpolationRequest& req) {
    req.validate();
    const double na = req.x_a.norm();
    const double nb = req.x_b.norm();
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("slerp: zero-norm endpoint");
    const double cos_theta = std::clamp(req.x_a.dot(req.x_b) / (na * nb), -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    if (theta > M_PI - 1e-6) throw std::invalid_argument("slerp: endpoints are near-antipodal");
    if (theta < 1e-8) return lerp(req); // sin(theta) -> 0; lerp agrees to machine precision

    const int n = req.n_steps;
    const double sin_theta = std::sin(theta);
    Path path;
    path.t = req.t;
    path.points.resize(n + 1, req.x_a.size());
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const double wa = std::sin((1.0 - s) * theta) / sin_theta;
        const double wb = std::sin(s * theta) / sin_theta;
        path.points.row(i) = wa * req.x_a.transpose() + wb * req.x_b.transpose();
    }
    path.points.row(0) = req.x_a.transpose();
    path.points.row(n) = req.x_b.transpose();
    return path;
}

} // namespace scoregeo
