#include "scoregeo/mixture.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <sstream>

#include "scoregeo/config.hpp"

namespace scoregeo {

void MixtureDensity::validate() const {
    const int k = num_components();
    if (k < 1) throw std::invalid_argument("MixtureDensity: need at least one component");
    if (static_cast<int>(means.size()) != k || static_cast<int>(covs.size()) != k)
        throw std::invalid_argument("MixtureDensity: component count mismatch");
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        if (weights[i] < 0.0) throw std::invalid_argument("MixtureDensity: negative weight");
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("MixtureDensity: weights must sum to 1");
    const int d = dim();
    for (int i = 0; i < k; ++i) {
        if (means[i].size() != d || covs[i].rows() != d || covs[i].cols() != d)
            throw std::invalid_argument("MixtureDensity: dimension mismatch");
        if (!covs[i].isApprox(covs[i].transpose(), 1e-10))
            throw std::invalid_argument("MixtureDensity: covariance not symmetric");
        Eigen::LLT<Mat> llt(covs[i]);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("MixtureDensity: covariance not positive-definite");
    }
}

MixtureDensity mixture_diffuse(const MixtureDensity& m, int t, const Schedule& schedule) {
    if (t < 0 || t > schedule.T) throw std::invalid_argument("mixture_diffuse: t out of [0, T]");
    const double ab = schedule.alpha_bar(t);
    MixtureDensity out = m;
    const Mat eye = Mat::Identity(m.dim(), m.dim());
    for (int k = 0; k < m.num_components(); ++k) {
        out.means[k] = std::sqrt(ab) * m.means[k];
        out.covs[k] = ab * m.covs[k] + (1.0 - ab) * eye;
    }
    return out;
}

MixtureEval::MixtureEval(const MixtureDensity& m) : dim_(m.dim()) {
    m.validate();
    const double d = static_cast<double>(dim_);
    comps_.reserve(m.num_components());
    for (int k = 0; k < m.num_components(); ++k) {
        Component c;
        // Zero-weight components cannot contribute; drop them so log w is finite.
        if (m.weights[k] <= 0.0) continue;
        c.log_weight = std::log(m.weights[k]);
        c.mean = m.means[k];
        Eigen::LLT<Mat> llt(m.covs[k]);
        c.precision = llt.solve(Mat::Identity(dim_, dim_));
        double log_det = 0.0;
        for (int i = 0; i < dim_; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
        c.log_norm = -0.5 * log_det - 0.5 * d * std::log(2.0 * M_PI);
        comps_.push_back(std::move(c));
    }
}

void MixtureEval::responsibilities(const Vec& x, Vec& r, std::vector<Vec>& g) const {
    const int k = static_cast<int>(comps_.size());
    r.resize(k);
    g.resize(k);
    double max_log = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
        const Vec delta = x - comps_[i].mean;
        g[i] = -(comps_[i].precision * delta);
        r[i] = comps_[i].log_weight + comps_[i].log_norm + 0.5 * delta.dot(g[i]);
        max_log = std::max(max_log, r[i]);
    }
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += std::exp(r[i] - max_log);
    const double log_p = max_log + std::log(sum);
    for (int i = 0; i < k; ++i) r[i] = std::max(std::exp(r[i] - log_p), 1e-300);
}

double MixtureEval::log_density(const Vec& x) const {
    double max_log = -std::numeric_limits<double>::infinity();
    Vec logs(static_cast<int>(comps_.size()));
    for (size_t i = 0; i < comps_.size(); ++i) {
        const Vec delta = x - comps_[i].mean;
        logs[static_cast<int>(i)] = comps_[i].log_weight + comps_[i].log_norm -
                                    0.5 * delta.dot(comps_[i].precision * delta);
        max_log = std::max(max_log, logs[static_cast<int>(i)]);
    }
    double sum = 0.0;
    for (int i = 0; i < logs.size(); ++i) sum += std::exp(logs[i] - max_log);
    return max_log + std::log(sum);
}

Vec MixtureEval::score(const Vec& x) const {
    Vec r;
    std::vector<Vec> g;
    responsibilities(x, r, g);
    Vec s = Vec::Zero(dim_);
    for (size_t i = 0; i < comps_.size(); ++i) s += r[static_cast<int>(i)] * g[i];
    return s;
}

Vec MixtureEval::hessian_vp(const Vec& x, const Vec& v) const {
    Vec r;
    std::vector<Vec> g;
    responsibilities(x, r, g);
    Vec s = Vec::Zero(dim_);
    for (size_t i = 0; i < comps_.size(); ++i) s += r[static_cast<int>(i)] * g[i];
    Vec hv = Vec::Zero(dim_);
    for (size_t i = 0; i < comps_.size(); ++i) {
        const double ri = r[static_cast<int>(i)];
        hv -= ri * (comps_[i].precision * v);
        hv += ri * g[i] * g[i].dot(v);
    }
    hv -= s * s.dot(v);
    return hv;
}

Mat MixtureEval::hessian(const Vec& x) const {
    Vec r;
    std::vector<Vec> g;
    responsibilities(x, r, g);
    Vec s = Vec::Zero(dim_);
    for (size_t i = 0; i < comps_.size(); ++i) s += r[static_cast<int>(i)] * g[i];
    Mat h = Mat::Zero(dim_, dim_);
    for (size_t i = 0; i < comps_.size(); ++i) {
        const double ri = r[static_cast<int>(i)];
        h -= ri * comps_[i].precision;
        h += ri * g[i] * g[i].transpose();
    }
    h -= s * s.transpose();
    return h;
}

Vec MixtureEval::grad_quadratic_form(const Vec& x, const Vec& u, const Vec& v) const {
    Vec r;
    std::vector<Vec> g;
    responsibilities(x, r, g);
    Vec s = Vec::Zero(dim_);
    for (size_t i = 0; i < comps_.size(); ++i) s += r[static_cast<int>(i)] * g[i];

    // phi(x) = u' H(x) v with
    //   H = -sum_k r_k A_k + sum_k r_k g_k g_k' - s s'
    // Differentiating through r_k (grad r_k = r_k (g_k - s)), g_k
    // (grad g_k = -A_k) and s (grad s = H) term by term:
    Vec grad = Vec::Zero(dim_);
    Vec hu = Vec::Zero(dim_);
    Vec hv = Vec::Zero(dim_);
    for (size_t i = 0; i < comps_.size(); ++i) {
        const double ri = r[static_cast<int>(i)];
        const Vec au = comps_[i].precision * u;
        const Vec av = comps_[i].precision * v;
        const double ugi = u.dot(g[i]);
        const double giv = g[i].dot(v);
        const double phi_k = -u.dot(av) + ugi * giv;
        grad += ri * phi_k * (g[i] - s);
        grad -= ri * (au * giv + av * ugi);
        hu += ri * (-au + g[i] * ugi);
        hv += ri * (-av + g[i] * giv);
    }
    hu -= s * s.dot(u);
    hv -= s * s.dot(v);
    grad -= hu * s.dot(v) + hv * u.dot(s);
    return grad;
}

double mixture_log_density(const MixtureDensity& m, const Vec& x) { return MixtureEval(m).log_density(x); }
Vec mixture_score(const MixtureDensity& m, const Vec& x) { return MixtureEval(m).score(x); }
Vec mixture_jvp(const MixtureDensity& m, const Vec& x, const Vec& v) { return MixtureEval(m).hessian_vp(x, v); }

MixtureScoreField::MixtureScoreField(MixtureDensity base, Schedule schedule)
    : base_(std::move(base)), schedule_(std::move(schedule)) {
    base_.validate();
    schedule_.validate();
    evals_.reserve(schedule_.T + 1);
    for (int t = 0; t <= schedule_.T; ++t) evals_.emplace_back(mixture_diffuse(base_, t, schedule_));
}

const MixtureEval& MixtureScoreField::eval_at(int t) const {
    check_time(t);
    return evals_[static_cast<size_t>(t)];
}

Vec MixtureScoreField::score(const Vec& x, int t) const {
    check_dim(x, "score input");
    return eval_at(t).score(x);
}

Vec MixtureScoreField::jvp(const Vec& x, int t, const Vec& v) const {
    check_dim(x, "jvp input");
    check_dim(v, "jvp direction");
    return eval_at(t).hessian_vp(x, v);
}

Vec MixtureScoreField::vjp(const Vec& x, int t, const Vec& w) const {
    return jvp(x, t, w);
}

Vec MixtureScoreField::grad_jvp_form(const Vec& x, int t, const Vec& u, const Vec& v) const {
    return eval_at(t).grad_quadratic_form(x, u, v);
}

double MixtureScoreField::log_density(const Vec& x, int t) const {
    return eval_at(t).log_density(x);
}

std::string mixture_to_config(const MixtureDensity& m) {
    std::ostringstream out;
    out << "mixture.k = " << m.num_components() << "\n";
    out << "mixture.dim = " << m.dim() << "\n";
    for (int k = 0; k < m.num_components(); ++k) {
        out << "mixture.weight." << k << " = " << format_real(m.weights[k]) << "\n";
        out << "mixture.mean." << k << " = " << format_vec(m.means[k]) << "\n";
        Vec flat(m.dim() * m.dim());
        for (int i = 0; i < m.dim(); ++i)
            for (int j = 0; j < m.dim(); ++j) flat[i * m.dim() + j] = m.covs[k](i, j);
        out << "mixture.cov." << k << " = " << format_vec(flat) << "\n";
    }
    return out.str();
}

MixtureDensity mixture_from_config(const std::string& text) {
    const KvConfig cfg = KvConfig::parse(text);
    const int k = cfg.get_int("mixture.k");
    if (k < 1) throw config_error("mixture.k must be >= 1");
    MixtureDensity m;
    m.weights.resize(k);
    m.means.resize(k);
    m.covs.resize(k);
    int d = cfg.get_int("mixture.dim", -1);
    for (int i = 0; i < k; ++i) {
        const std::string idx = std::to_string(i);
        m.weights[i] = cfg.get_real("mixture.weight." + idx);
        m.means[i] = cfg.get_vec("mixture.mean." + idx);
        if (d < 0) d = static_cast<int>(m.means[i].size());
        const Vec flat = cfg.get_vec("mixture.cov." + idx);
        if (flat.size() != d * d)
            throw config_error("mixture.cov." + idx + ": expected " + std::to_string(d * d) + " entries");
        Mat cov(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) cov(r, c) = flat[r * d + c];
        m.covs[i] = cov;
    }
    m.validate();
    return m;
}

MixtureDensity make_two_moons_mixture(int per_moon, double sigma) {
    if (per_moon < 1) throw std::invalid_argument("make_two_moons_mixture: per_moon must be >= 1");
    MixtureDensity m;
    const int k = 2 * per_moon;
    m.weights = Vec::Constant(k, 1.0 / k);
    m.means.resize(k);
    m.covs.assign(k, sigma * sigma * Mat::Identity(2, 2));
    for (int j = 0; j < per_moon; ++j) {
        const double theta = M_PI * (j + 0.5) / per_moon;
        Vec a(2), b(2);
        a << std::cos(theta), std::sin(theta);
        b << 1.0 - std::cos(theta), 0.5 - std::sin(theta);
        m.means[j] = a;
        m.means[per_moon + j] = b;
    }
    return m;
}

Vec sample_mixture(const MixtureDensity& m, Rng& rng) {
    const double u = rng.uniform();
    int pick = m.num_components() - 1;
    double cum = 0.0;
    for (int k = 0; k < m.num_components(); ++k) {
        cum += m.weights[k];
        if (u < cum) {
            pick = k;
            break;
        }
    }
    Eigen::LLT<Mat> llt(m.covs[pick]);
    return m.means[pick] + llt.matrixL() * rng.normal_vec(m.dim());
}

} // namespace scoregeo
