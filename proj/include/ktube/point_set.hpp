#pragma once

#include <Eigen/Dense>

#include <cstddef>

#include "ktube/errors.hpp"

namespace ktube {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Points in R^d stored row-wise. May be empty, but always carries its dimension.
class PointSet {
public:
  explicit PointSet(Index dim = 1) : coords_(0, dim) { require(dim >= 1, "PointSet: dimension must be >= 1"); }
  explicit PointSet(Matrix coords) : coords_(std::move(coords)) {
    require(coords_.cols() >= 1, "PointSet: dimension must be >= 1");
  }

  Index size() const { return coords_.rows(); }
  Index dim() const { return coords_.cols(); }
  bool empty() const { return coords_.rows() == 0; }

  auto point(Index i) const { return coords_.row(i); }
  const Matrix& coords() const { return coords_; }

  void push_back(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
    require(p.size() == dim(), "PointSet: dimension mismatch on insert");
    coords_.conservativeResize(coords_.rows() + 1, Eigen::NoChange);
    coords_.row(coords_.rows() - 1) = p;
  }

  /// Subset in the order given by `indices`.
  template <class Range>
  PointSet select(const Range& indices) const {
    Matrix out(static_cast<Index>(std::size(indices)), dim());
    Index r = 0;
    for (auto i : indices) out.row(r++) = coords_.row(static_cast<Index>(i));
    return PointSet(std::move(out));
  }

private:
  Matrix coords_;
};

}  // namespace ktube
