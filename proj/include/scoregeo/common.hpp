#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace scoregeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Raised when a run fails for numerical reasons (divergence, non-finite
// values) as opposed to bad inputs. The CLI maps this to exit code 3.
class numerical_error : public std::runtime_error {
  public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised by config parsing/validation. The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline constexpr const char* kVersion = "0.1.0";

} // namespace scoregeo
