#pragma once

#include <string>
#include <vector>

#include "scoregeo/diffusion.hpp"
#include "scoregeo/geodesic_types.hpp"

namespace scoregeo {

// Sample/path CSV: header "t,s_index,x_1,...,x_D", one row per point.
std::string samples_to_csv(const std::vector<Sample>& samples);
std::string path_to_csv(const Path& path);
std::vector<Sample> samples_from_csv(const std::string& text);
Path path_from_csv(const std::string& text);

// Optimization trace CSV: iteration,length,reg,objective,step_size.
std::string trace_to_csv(const std::vector<TraceRow>& trace);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace scoregeo
