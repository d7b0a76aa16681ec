#ifndef LACAL_KDTREE_HPP
#define LACAL_KDTREE_HPP

#include "lacal/common.hpp"

#include <vector>

namespace lacal {

/// Static k-d tree over the rows of a point matrix. Neighbors are ordered by
/// (squared distance, row index), so ties resolve to the smallest index.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const DesignMatrix& points, Index leaf_size = 16);

  Index size() const { return points_.rows(); }

  /// The k nearest rows to `query`, closest first.
  std::vector<Index> nearest(const Eigen::Ref<const Vector>& query, Index k) const;

 private:
  struct Node {
    Index begin = 0;
    Index end = 0;
    Index split_dim = -1;
    double split_value = 0.0;
    Index left = -1;
    Index right = -1;
  };

  Index build(Index begin, Index end);

  DesignMatrix points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  Index leaf_size_ = 16;
};

}  // namespace lacal

#endif  // LACAL_KDTREE_HPP
