#pragma once

#include <Eigen/Dense>

namespace geolp::detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by the Golub-Welsch eigenproblem.
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w);

} // namespace geolp::detail
