#pragma once

// Column-wise z-score scaling, fitted on one sample set and applied to others.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dhc/errors.hpp"

namespace dhc {

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // std, or 1 for a constant column
  Eigen::RowVectorXd min;
  Eigen::RowVectorXd max;

  Eigen::Index dim() const { return mean.size(); }

  static Standardizer fit(const Eigen::MatrixXd& x) {
    if (x.rows() == 0) throw InvalidArgument("Standardizer::fit: no samples");
    Standardizer s;
    s.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - s.mean;
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
      if (!(s.scale(j) > 1e-12 * std::max(1.0, std::abs(s.mean(j))))) s.scale(j) = 1.0;
    s.min = x.colwise().minCoeff();
    s.max = x.colwise().maxCoeff();
    return s;
  }

  // Identity scaling for `dim` columns.
  static Standardizer identity(Eigen::Index dim) {
    Standardizer s;
    s.mean = Eigen::RowVectorXd::Zero(dim);
    s.scale = Eigen::RowVectorXd::Ones(dim);
    s.min = Eigen::RowVectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
    s.max = Eigen::RowVectorXd::Constant(dim, std::numeric_limits<double>::infinity());
    return s;
  }

  template <typename Derived>
  Eigen::MatrixXd apply(const Eigen::MatrixBase<Derived>& x) const {
    if (x.cols() != dim()) throw ShapeError("Standardizer::apply: column count mismatch");
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }

  template <typename Derived>
  Eigen::MatrixXd invert(const Eigen::MatrixBase<Derived>& z) const {
    if (z.cols() != dim()) throw ShapeError("Standardizer::invert: column count mismatch");
    return (z.array().rowwise() * scale.array()).matrix().rowwise() + mean;
  }

  // True when every value lies within the observed range widened by
  // `margin` times its width on both sides.
  template <typename Derived>
  bool within(const Eigen::MatrixBase<Derived>& x, double margin) const {
    for (Eigen::Index j = 0; j < dim(); ++j) {
      const double pad = margin * (max(j) - min(j));
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (x(i, j) < min(j) - pad || x(i, j) > max(j) + pad) return false;
    }
    return true;
  }
};

}  // namespace dhc
