#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "scoregeo/common.hpp"

namespace scoregeo {

// Shortest representation that round-trips a double exactly.
std::string format_real(double x);
std::string format_vec(const Vec& v);

// Flat key-value text config with dotted sections:
//
//   schedule.T = 1000
//   mixture.mean.0 = -2 0      # vectors are whitespace-separated
//
// Lines starting with '#' (or anything after '#') are comments.
class KvConfig {
  public:
    KvConfig() = default;

    static KvConfig parse(const std::string& text);
    static KvConfig parse_file(const std::string& path);

    bool has(const std::string& key) const;

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key) const;
    double get_real(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    Vec get_vec(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    void set_real(const std::string& key, double value);
    void set_int(const std::string& key, long long value);
    void set_vec(const std::string& key, const Vec& value);

    // Sorted key order; hashing and replay operate on this form.
    std::string canonical_text() const;
    uint64_t hash() const; // FNV-1a over canonical_text

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
};

} // namespace scoregeo
