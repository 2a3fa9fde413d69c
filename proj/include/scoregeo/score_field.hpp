#pragma once

#include "scoregeo/common.hpp"

namespace scoregeo {

// Evaluatable score s(x, t) ~ grad log p_t(x) together with its
// Jacobian-vector product v -> J_x v, J_x = d s(x,t) / d x.
//
// score and jvp are pure and safe to call concurrently. The two extra
// hooks (vjp and the position gradient of u'J(x)v) are what the geodesic
// optimizer needs; the base class supplies numerical fallbacks built on
// jvp, which concrete backends override with exact versions.
class ScoreField {
  public:
    virtual ~ScoreField() = default;

    virtual int dim() const = 0;
    virtual int min_time() const { return 0; }
    virtual int max_time() const = 0;

    virtual Vec score(const Vec& x, int t) const = 0;
    virtual Vec jvp(const Vec& x, int t, const Vec& v) const = 0;

    // J(x)' w. Fallback assembles J column by column through jvp.
    virtual Vec vjp(const Vec& x, int t, const Vec& w) const;

    // grad_x [ u' J(x) v ]. Fallback: central differences of the jvp.
    virtual Vec grad_jvp_form(const Vec& x, int t, const Vec& u, const Vec& v) const;

    // Dense Jacobian, assembled column by column through jvp.
    Mat jacobian(const Vec& x, int t) const;

    void check_time(int t) const;
    void check_dim(const Vec& v, const char* what) const;
};

} // namespace scoregeo
