#include "scoregeo/schedule.hpp"

#include <cmath>
#include <sstream>

#include "scoregeo/config.hpp"

namespace scoregeo {

double Schedule::beta(int t) const {
    if (t < 1 || t > T) throw std::invalid_argument("Schedule::beta: t out of [1, T]");
    return betas[t - 1];
}

double Schedule::alpha_bar(int t) const {
    if (t < 0 || t > T) throw std::invalid_argument("Schedule::alpha_bar: t out of [0, T]");
    return t == 0 ? 1.0 : alphas_bar[t - 1];
}

void Schedule::validate() const {
    if (T < 2) throw std::invalid_argument("Schedule: T must be >= 2");
    if (betas.size() != T || alphas_bar.size() != T)
        throw std::invalid_argument("Schedule: beta/alpha_bar size mismatch with T");
    double prev = 1.0;
    for (int i = 0; i < T; ++i) {
        const double b = betas[i];
        const double ab = alphas_bar[i];
        if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("Schedule: beta out of (0,1)");
        if (!(ab > 0.0 && ab < 1.0)) throw std::invalid_argument("Schedule: alpha_bar out of (0,1)");
        if (!(ab < prev)) throw std::invalid_argument("Schedule: alpha_bar not strictly decreasing");
        const double expected = prev * (1.0 - b);
        if (std::abs(ab - expected) > 1e-12 * expected)
            throw std::invalid_argument("Schedule: alpha_bar inconsistent with cumulative product");
        prev = ab;
    }
}

Schedule make_schedule(int T, double beta_min, double beta_max) {
    if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
    if (!std::isfinite(beta_min) || !std::isfinite(beta_max))
        throw std::invalid_argument("make_schedule: non-finite beta bounds");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_min <= beta_max < 1");

    Schedule s;
    s.T = T;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.betas.resize(T);
    s.alphas_bar.resize(T);
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        s.betas[i] = beta_min + (beta_max - beta_min) * static_cast<double>(i) / static_cast<double>(T - 1);
        prod *= 1.0 - s.betas[i];
        s.alphas_bar[i] = prod;
    }
    s.validate();
    return s;
}

std::string schedule_to_config(const Schedule& s) {
    std::ostringstream out;
    out << "schedule.T = " << s.T << "\n";
    out << "schedule.beta_min = " << format_real(s.beta_min) << "\n";
    out << "schedule.beta_max = " << format_real(s.beta_max) << "\n";
    out << "schedule.kind = " << s.kind << "\n";
    return out.str();
}

Schedule schedule_from_config(const std::string& text) {
    const KvConfig cfg = KvConfig::parse(text);
    const std::string kind = cfg.get_str("schedule.kind", "linear");
    if (kind != "linear") throw config_error("schedule.kind: only 'linear' is supported");
    return make_schedule(cfg.get_int("schedule.T"),
                         cfg.get_real("schedule.beta_min", 1e-4),
                         cfg.get_real("schedule.beta_max", 0.02));
}

} // namespace scoregeo
