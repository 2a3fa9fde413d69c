#include "scoregeo/csv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scoregeo/config.hpp"

namespace scoregeo {

namespace {

std::string header_for(int dim) {
    std::string h = "t,s_index";
    for (int i = 1; i <= dim; ++i) h += ",x_" + std::to_string(i);
    return h;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

struct ParsedRows {
    std::vector<Sample> samples;
    std::vector<int> s_index;
};

ParsedRows parse_rows(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("sample CSV: empty input");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "t" || header[1] != "s_index")
        throw std::invalid_argument("sample CSV: bad header");
    const int dim = static_cast<int>(header.size()) - 2;

    ParsedRows rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != dim + 2)
            throw std::invalid_argument("sample CSV: row width mismatch");
        Sample s;
        s.t = std::atoi(fields[0].c_str());
        rows.s_index.push_back(std::atoi(fields[1].c_str()));
        s.x.resize(dim);
        for (int i = 0; i < dim; ++i) {
            char* end = nullptr;
            s.x[i] = std::strtod(fields[static_cast<size_t>(i + 2)].c_str(), &end);
            if (end == fields[static_cast<size_t>(i + 2)].c_str())
                throw std::invalid_argument("sample CSV: bad number: " + fields[static_cast<size_t>(i + 2)]);
        }
        rows.samples.push_back(std::move(s));
    }
    return rows;
}

} // namespace

std::string samples_to_csv(const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("samples_to_csv: empty sample list");
    std::ostringstream out;
    out << header_for(samples[0].dim()) << "\n";
    for (size_t i = 0; i < samples.size(); ++i) {
        out << samples[i].t << ',' << i;
        for (int j = 0; j < samples[i].dim(); ++j) out << ',' << format_real(samples[i].x[j]);
        out << "\n";
    }
    return out.str();
}

std::string path_to_csv(const Path& path) {
    std::ostringstream out;
    out << header_for(path.dim()) << "\n";
    for (int i = 0; i < path.points.rows(); ++i) {
        out << path.t << ',' << i;
        for (int j = 0; j < path.dim(); ++j) out << ',' << format_real(path.points(i, j));
        out << "\n";
    }
    return out.str();
}

std::vector<Sample> samples_from_csv(const std::string& text) { return parse_rows(text).samples; }

Path path_from_csv(const std::string& text) {
    const ParsedRows rows = parse_rows(text);
    if (rows.samples.empty()) throw std::invalid_argument("path CSV: no points");
    Path path;
    path.t = rows.samples[0].t;
    path.points.resize(static_cast<int>(rows.samples.size()), rows.samples[0].dim());
    for (size_t i = 0; i < rows.samples.size(); ++i) {
        if (rows.samples[i].t != path.t) throw std::invalid_argument("path CSV: mixed diffusion times");
        if (rows.s_index[i] != static_cast<int>(i)) throw std::invalid_argument("path CSV: bad s_index order");
        path.points.row(static_cast<int>(i)) = rows.samples[i].x.transpose();
    }
    return path;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream out;
    out << "iteration,length,reg,objective,step_size\n";
    for (const TraceRow& row : trace) {
        out << row.iteration << ',' << format_real(row.length) << ',' << format_real(row.reg) << ','
            << format_real(row.objective) << ',' << format_real(row.step_size) << "\n";
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace scoregeo
