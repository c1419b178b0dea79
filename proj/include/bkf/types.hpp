#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace bkf {

// Row-major so that an observation (row) is contiguous for the kernel layer.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ResponseKind { Linear, Probit };

/// n x p feature matrix with an n-vector response.
struct Dataset {
  Matrix x;
  Vector y;
  std::vector<std::string> feature_names;
  ResponseKind response = ResponseKind::Linear;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

}  // namespace bkf
