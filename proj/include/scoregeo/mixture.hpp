#pragma once

#include <memory>
#include <vector>

#include "scoregeo/rng.hpp"
#include "scoregeo/schedule.hpp"
#include "scoregeo/score_field.hpp"

namespace scoregeo {

// Gaussian mixture with full covariances. Serves as the closed-form ground
// truth density for validating score/JVP machinery.
struct MixtureDensity {
    Vec weights;            // K, nonnegative, sums to 1
    std::vector<Vec> means; // K vectors of dimension D
    std::vector<Mat> covs;  // K symmetric positive-definite D x D matrices

    int num_components() const { return static_cast<int>(weights.size()); }
    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
    void validate() const;
};

// Law of x_t when x_0 ~ m: component k becomes
// mean sqrt(abar_t) mu_k, covariance abar_t Sigma_k + (1 - abar_t) I.
MixtureDensity mixture_diffuse(const MixtureDensity& m, int t, const Schedule& schedule);

// Frozen factorizations of one mixture: log-density, score (grad log p),
// Hessian-vector products and the third-order contraction the geodesic
// optimizer needs. All methods are const and safe to call concurrently.
class MixtureEval {
  public:
    explicit MixtureEval(const MixtureDensity& m);

    int dim() const { return dim_; }
    double log_density(const Vec& x) const;
    Vec score(const Vec& x) const;

    // H(x) v with H the Hessian of log p.
    Vec hessian_vp(const Vec& x, const Vec& v) const;
    Mat hessian(const Vec& x) const;

    // grad_x [ u' H(x) v ].
    Vec grad_quadratic_form(const Vec& x, const Vec& u, const Vec& v) const;

  private:
    struct Component {
        double log_weight;
        Vec mean;
        Mat precision; // Sigma^-1
        double log_norm; // -0.5 logdet(Sigma) - D/2 log(2 pi)
    };
    // Responsibilities r_k(x) and per-component scores g_k = -A_k (x - mu_k).
    void responsibilities(const Vec& x, Vec& r, std::vector<Vec>& g) const;

    int dim_;
    std::vector<Component> comps_;
};

double mixture_log_density(const MixtureDensity& m, const Vec& x);
Vec mixture_score(const MixtureDensity& m, const Vec& x);
Vec mixture_jvp(const MixtureDensity& m, const Vec& x, const Vec& v);

// ScoreField backed by the closed-form diffusion of a base mixture.
// Evaluators for every t in [0, T] are precomputed at construction, so the
// object is immutable afterwards and concurrency-safe.
class MixtureScoreField final : public ScoreField {
  public:
    MixtureScoreField(MixtureDensity base, Schedule schedule);

    int dim() const override { return base_.dim(); }
    int max_time() const override { return schedule_.T; }
    Vec score(const Vec& x, int t) const override;
    Vec jvp(const Vec& x, int t, const Vec& v) const override;
    Vec vjp(const Vec& x, int t, const Vec& w) const override; // Hessian is symmetric
    Vec grad_jvp_form(const Vec& x, int t, const Vec& u, const Vec& v) const override;

    double log_density(const Vec& x, int t) const;
    const MixtureDensity& base() const { return base_; }
    const Schedule& schedule() const { return schedule_; }
    const MixtureEval& eval_at(int t) const;

  private:
    MixtureDensity base_;
    Schedule schedule_;
    std::vector<MixtureEval> evals_; // index t in [0, T]
};

// Key-value serialization (keys mixture.k, mixture.weight.<i>,
// mixture.mean.<i>, mixture.cov.<i> with row-major covariance entries).
std::string mixture_to_config(const MixtureDensity& m);
MixtureDensity mixture_from_config(const std::string& text);

// Two interleaved arcs approximated by per_moon isotropic components each.
MixtureDensity make_two_moons_mixture(int per_moon = 6, double sigma = 0.12);

Vec sample_mixture(const MixtureDensity& m, Rng& rng);

} // namespace scoregeo
