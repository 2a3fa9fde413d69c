#include "scoregeo/score_field.hpp"

#include <algorithm>
#include <string>

namespace scoregeo {

void ScoreField::check_time(int t) const {
    if (t < min_time() || t > max_time())
        throw std::invalid_argument("ScoreField: t=" + std::to_string(t) + " outside supported range [" +
                                    std::to_string(min_time()) + ", " + std::to_string(max_time()) + "]");
}

void ScoreField::check_dim(const Vec& v, const char* what) const {
    if (v.size() != dim())
        throw std::invalid_argument(std::string("ScoreField: dimension mismatch for ") + what);
}

Vec ScoreField::vjp(const Vec& x, int t, const Vec& w) const {
    check_dim(w, "vjp cotangent");
    Vec out(dim());
    Vec e = Vec::Zero(dim());
    for (int i = 0; i < dim(); ++i) {
        e[i] = 1.0;
        out[i] = w.dot(jvp(x, t, e)); // (J' w)_i = w . (J e_i)
        e[i] = 0.0;
    }
    return out;
}

Vec ScoreField::grad_jvp_form(const Vec& x, int t, const Vec& u, const Vec& v) const {
    const double h = 1e-5 * std::max(1.0, x.norm());
    Vec out(dim());
    Vec xp = x;
    for (int i = 0; i < dim(); ++i) {
        const double xi = x[i];
        xp[i] = xi + h;
        const double fp = u.dot(jvp(xp, t, v));
        xp[i] = xi - h;
        const double fm = u.dot(jvp(xp, t, v));
        xp[i] = xi;
        out[i] = (fp - fm) / (2.0 * h);
    }
    return out;
}

Mat ScoreField::jacobian(const Vec& x, int t) const {
    Mat J(dim(), dim());
    Vec e = Vec::Zero(dim());
    for (int j = 0; j < dim(); ++j) {
        e[j] = 1.0;
        J.col(j) = jvp(x, t, e);
        e[j] = 0.0;
    }
    return J;
}

} // namespace scoregeo
