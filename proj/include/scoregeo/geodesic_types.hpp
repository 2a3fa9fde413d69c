#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scoregeo/common.hpp"

namespace scoregeo {

// Discretized curve x^(0)..x^(N) at a fixed diffusion time, on the uniform
// parameter grid s_i = i/N.
struct Path {
    Mat points; // (N+1) x D, one point per row
    int t = 0;  // common diffusion time

    int n_steps() const { return static_cast<int>(points.rows()) - 1; }
    int dim() const { return static_cast<int>(points.cols()); }
    double ds() const { return 1.0 / n_steps(); }

    // The velocity stencil needs three points, so N >= 2.
    void validate() const;
};

struct GeodesicConfig {
    int n_steps = 10;      // N
    double lambda = -1.0;  // regularization weight; negative = auto-normalized
    int iters = 5000;
    double lr0 = 1e-2;
    enum class LrSchedule { Cosine, Constant } lr_schedule = LrSchedule::Cosine;
    enum class Init { Slerp, Lerp } init = Init::Slerp;
    uint64_t seed = 0;

    void validate() const;
};

struct LengthReport {
    double total_length = 0.0;
    Vec local_lengths;      // l(s_i), N+1 entries
    double reg_value = 0.0; // variance of segment Euclidean lengths
    double lambda = 0.0;
    double objective = 0.0; // total_length + lambda * reg_value
};

struct TraceRow {
    int iteration;
    double length;
    double reg;
    double objective;
    double step_size;
};

struct GeodesicResult {
    Path path; // best iterate seen
    std::vector<TraceRow> trace;
    double final_objective = 0.0;
    double lambda_used = 0.0;
    bool aborted = false;   // optimizer hit a non-finite objective
    std::string diagnostic; // non-empty when aborted
};

} // namespace scoregeo
