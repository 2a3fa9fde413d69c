#include "scoregeo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <utility>

#include "scoregeo/baselines.hpp"
#include "scoregeo/config.hpp"

namespace scoregeo {

void GridGraphSpec::validate() const {
    if (lo.size() != 2 || hi.size() != 2) throw std::invalid_argument("GridGraphSpec: oracle is 2-D only");
    if (nx < 16 || ny < 16) throw std::invalid_argument("GridGraphSpec: resolution must be >= 16 per axis");
    if (!(lo[0] < hi[0] && lo[1] < hi[1])) throw std::invalid_argument("GridGraphSpec: empty bounding box");
}

namespace {

struct QueueEntry {
    double dist;
    int node;
    bool operator>(const QueueEntry& o) const { return dist > o.dist; }
};

} // namespace

DijkstraResult dijkstra_geodesic(const ScoreField& field, const GridGraphSpec& spec, const Vec& x_a,
                                 const Vec& x_b, int t) {
    spec.validate();
    if (field.dim() != 2) throw std::invalid_argument("dijkstra_geodesic: field must be 2-D");
    if (x_a.size() != 2 || x_b.size() != 2) throw std::invalid_argument("dijkstra_geodesic: endpoints must be 2-D");
    for (int d = 0; d < 2; ++d) {
        if (x_a[d] < spec.lo[d] || x_a[d] > spec.hi[d] || x_b[d] < spec.lo[d] || x_b[d] > spec.hi[d])
            throw std::invalid_argument("dijkstra_geodesic: endpoint outside bounding box");
    }

    const int nx = spec.nx, ny = spec.ny;
    const double dx = (spec.hi[0] - spec.lo[0]) / (nx - 1);
    const double dy = (spec.hi[1] - spec.lo[1]) / (ny - 1);
    const int n_nodes = nx * ny;
    auto node_of = [&](int ix, int iy) { return iy * nx + ix; };
    auto coord_of = [&](int node) {
        Vec p(2);
        p[0] = spec.lo[0] + (node % nx) * dx;
        p[1] = spec.lo[1] + (node / nx) * dy;
        return p;
    };
    auto snap = [&](const Vec& x) {
        const int ix = static_cast<int>(std::lround((x[0] - spec.lo[0]) / dx));
        const int iy = static_cast<int>(std::lround((x[1] - spec.lo[1]) / dy));
        return node_of(std::clamp(ix, 0, nx - 1), std::clamp(iy, 0, ny - 1));
    };

    // Cache the Jacobian columns per node; |J v| is then two axpys + a norm
    // per edge instead of a fresh jvp pair.
    Mat jcol0(2, n_nodes), jcol1(2, n_nodes);
    {
        Vec e0(2), e1(2);
        e0 << 1.0, 0.0;
        e1 << 0.0, 1.0;
        for (int node = 0; node < n_nodes; ++node) {
            const Vec p = coord_of(node);
            jcol0.col(node) = field.jvp(p, t, e0);
            jcol1.col(node) = field.jvp(p, t, e1);
            if (!jcol0.col(node).allFinite() || !jcol1.col(node).allFinite())
                throw numerical_error("dijkstra_geodesic: non-finite metric at node " + std::to_string(node));
        }
    }
    auto local_len = [&](int node, double vx, double vy) {
        return (vx * jcol0.col(node) + vy * jcol1.col(node)).norm();
    };

    const int start = snap(x_a);
    const int goal = snap(x_b);
    std::vector<double> dist(static_cast<size_t>(n_nodes), std::numeric_limits<double>::infinity());
    std::vector<int> prev(static_cast<size_t>(n_nodes), -1);
    std::vector<bool> done(static_cast<size_t>(n_nodes), false);
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> queue;
    dist[static_cast<size_t>(start)] = 0.0;
    queue.push({0.0, start});

    const int offsets[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    while (!queue.empty()) {
        const QueueEntry top = queue.top();
        queue.pop();
        if (done[static_cast<size_t>(top.node)]) continue;
        done[static_cast<size_t>(top.node)] = true;
        if (top.node == goal) break;
        const int ix = top.node % nx;
        const int iy = top.node / nx;
        for (const auto& off : offsets) {
            const int jx = ix + off[0];
            const int jy = iy + off[1];
            if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
            const int other = node_of(jx, jy);
            if (done[static_cast<size_t>(other)]) continue;
            const double vx = off[0] * dx;
            const double vy = off[1] * dy;
            const double w = 0.5 * (local_len(top.node, vx, vy) + local_len(other, vx, vy));
            const double cand = top.dist + w;
            if (cand < dist[static_cast<size_t>(other)]) {
                dist[static_cast<size_t>(other)] = cand;
                prev[static_cast<size_t>(other)] = top.node;
                queue.push({cand, other});
            }
        }
    }

    DijkstraResult result;
    result.length = dist[static_cast<size_t>(goal)];
    if (!std::isfinite(result.length)) throw numerical_error("dijkstra_geodesic: goal unreachable");
    std::vector<int> chain;
    for (int node = goal; node != -1; node = prev[static_cast<size_t>(node)]) chain.push_back(node);
    result.polyline.resize(static_cast<int>(chain.size()), 2);
    for (size_t i = 0; i < chain.size(); ++i)
        result.polyline.row(static_cast<int>(chain.size() - 1 - i)) = coord_of(chain[i]).transpose();
    return result;
}

double reconstruction_mse(const Sample& original, const Sample& reconstructed) {
    if (original.dim() != reconstructed.dim())
        throw std::invalid_argument("reconstruction_mse: dimension mismatch");
    return (original.x - reconstructed.x).squaredNorm() / original.dim();
}

void MethodReport::validate() const {
    if (!std::isfinite(recon_mse) || !std::isfinite(length_g) || !std::isfinite(seg_variance) ||
        !logp_tau.allFinite() || !logp_data.allFinite())
        throw numerical_error("MethodReport: non-finite entry for method " + method);
}

namespace {

Vec profile_under(const MixtureEval& eval, const Mat& points) {
    Vec out(points.rows());
    for (int i = 0; i < points.rows(); ++i) out[i] = eval.log_density(points.row(i).transpose());
    return out;
}

} // namespace

EvalReport compare_methods(const ScoreField& field, const Schedule& schedule, const Sample& x0_a,
                           const Sample& x0_b, int tau, const GeodesicConfig& cfg,
                           const MixtureDensity* reference) {
    const MixtureDensity* base = reference;
    const auto* mixture_field = dynamic_cast<const MixtureScoreField*>(&field);
    if (base == nullptr) {
        if (mixture_field == nullptr)
            throw std::invalid_argument(
                "compare_methods: a reference mixture is required for non-mixture fields");
        base = &mixture_field->base();
    }
    const MixtureEval eval_tau(mixture_diffuse(*base, tau, schedule));
    const MixtureEval eval_data(*base);

    const Sample a_tau = ddim_invert(x0_a, tau, field, schedule);
    const Sample b_tau = ddim_invert(x0_b, tau, field, schedule);
    const Sample recon_a = ddim_generate(a_tau, field, schedule);
    const Sample recon_b = ddim_generate(b_tau, field, schedule);
    const double recon_mse = 0.5 * (reconstruction_mse(x0_a, recon_a) + reconstruction_mse(x0_b, recon_b));

    const InterpolationRequest req{a_tau.x, b_tau.x, cfg.n_steps, tau};
    Path lerp_path = lerp(req);
    Path slerp_path = slerp(req);
    Path geo_path = geodesic_optimize(field, a_tau.x, b_tau.x, tau, cfg).path;

    EvalReport report;
    report.tau = tau;
    report.n_steps = cfg.n_steps;
    const std::pair<std::string, const Path*> methods[] = {
        {"lerp", &lerp_path}, {"slerp", &slerp_path}, {"geodesic", &geo_path}};
    for (const auto& [name, path] : methods) {
        MethodReport row;
        row.method = name;
        row.recon_mse = recon_mse;
        const LengthReport len = curve_length(field, *path, 0.0);
        row.length_g = len.total_length;
        row.seg_variance = variance_regularizer(*path);
        row.logp_tau = profile_under(eval_tau, path->points);
        Mat generated(path->points.rows(), path->points.cols());
        for (int i = 0; i < path->points.rows(); ++i) {
            const Sample at_tau{path->points.row(i).transpose(), tau};
            generated.row(i) = ddim_generate(at_tau, field, schedule).x.transpose();
        }
        row.logp_data = profile_under(eval_data, generated);
        row.validate();
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string eval_report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "method,recon_mse,length_g,seg_variance,logp_tau_min,logp_data_min";
    for (int i = 0; i <= report.n_steps; ++i) out << ",logp_tau_" << i;
    for (int i = 0; i <= report.n_steps; ++i) out << ",logp_data_" << i;
    out << "\n";
    for (const MethodReport& row : report.rows) {
        out << row.method << ',' << format_real(row.recon_mse) << ',' << format_real(row.length_g) << ','
            << format_real(row.seg_variance) << ',' << format_real(row.logp_tau.minCoeff()) << ','
            << format_real(row.logp_data.minCoeff());
        for (int i = 0; i < row.logp_tau.size(); ++i) out << ',' << format_real(row.logp_tau[i]);
        for (int i = 0; i < row.logp_data.size(); ++i) out << ',' << format_real(row.logp_data[i]);
        out << "\n";
    }
    return out.str();
}

} // namespace scoregeo
