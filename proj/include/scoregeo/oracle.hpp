#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scoregeo/geodesic.hpp"
#include "scoregeo/mixture.hpp"

namespace scoregeo {

// 2-D grid graph for the brute-force shortest-path oracle. Resolution is
// the node count per axis; connectivity is 8-neighbor.
struct GridGraphSpec {
    Vec lo; // 2
    Vec hi; // 2
    int nx = 256;
    int ny = 256;

    void validate() const;
};

struct DijkstraResult {
    Mat polyline; // node coordinates along the shortest path, one per row
    double length;
};

// Exact shortest path on the grid under edge weights
//   w(u,v) = 1/2 ( |v-u|_g at u + |v-u|_g at v ),
// the two-point trapezoid of the local metric. Endpoints snap to the
// nearest grid node. Length converges to the continuous geodesic length
// from above as resolution grows (modulo the 8-neighbor direction bias).
DijkstraResult dijkstra_geodesic(const ScoreField& field, const GridGraphSpec& spec, const Vec& x_a,
                                 const Vec& x_b, int t);

// (1/D) sum_i (x_i - y_i)^2.
double reconstruction_mse(const Sample& original, const Sample& reconstructed);

struct MethodReport {
    std::string method;
    double recon_mse;     // mean over the two endpoints
    double length_g;      // path length under the metric at tau
    double seg_variance;  // segment-length variance of the tau path
    Vec logp_tau;         // log-density profile along the tau path
    Vec logp_data;        // log-density of the generated t=0 samples

    void validate() const; // all entries finite
};

struct EvalReport {
    int tau = 0;
    int n_steps = 0;
    std::vector<MethodReport> rows; // lerp, slerp, geodesic
};

// Runs lerp / slerp / geodesic through the shared DDIM inversion pipeline
// and tabulates the metrics. The three methods share endpoints and the
// deterministic inversion and generation maps, so their reconstruction
// errors are identical to the last bit.
//
// Log-density profiles are evaluated under `reference` (the data mixture,
// diffused to tau for the tau profile). When `reference` is null the field
// itself must be a MixtureScoreField, whose base mixture is used.
EvalReport compare_methods(const ScoreField& field, const Schedule& schedule, const Sample& x0_a,
                           const Sample& x0_b, int tau, const GeodesicConfig& cfg,
                           const MixtureDensity* reference = nullptr);

std::string eval_report_csv(const EvalReport& report);

} // namespace scoregeo
