#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace xmal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy mapped onto CLI exit codes (see cli.hpp):
//   ConfigError  -> 1  bad usage, bad config file, invalid parameter values
//   DataError    -> 2  missing or malformed data artifacts, broken invariants
//   NumericError -> 3  non-finite values, zero norms, numerical failures
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace xmal
