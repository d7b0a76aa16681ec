#include "lacal/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace lacal {

KdTree::KdTree(const DesignMatrix& points, Index leaf_size) : points_(points), leaf_size_(std::max<Index>(1, leaf_size)) {
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), Index{0});
  if (points_.rows() > 0) build(0, points_.rows());
}

Index KdTree::build(Index begin, Index end) {
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  Index best_dim = 0;
  double best_spread = -1.0;
  for (Index j = 0; j < points_.cols(); ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Index i = begin; i < end; ++i) {
      const double v = points_(order_[static_cast<std::size_t>(i)], j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = j;
    }
  }
  if (best_spread <= 0.0) return id;

  const Index mid = begin + (end - begin) / 2;
  auto first = order_.begin() + begin;
  std::nth_element(first, order_.begin() + mid, order_.begin() + end, [&](Index a, Index b) {
    const double va = points_(a, best_dim), vb = points_(b, best_dim);
    return va < vb || (va == vb && a < b);
  });
  const double split = points_(order_[static_cast<std::size_t>(mid)], best_dim);
  const Index left = build(begin, mid);
  const Index right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.split_dim = best_dim;
  node.split_value = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Index> KdTree::nearest(const Eigen::Ref<const Vector>& query, Index k) const {
  require(query.size() == points_.cols(), "kdtree: query dimension mismatch");
  require(k >= 0 && k <= size(), "kdtree: k out of range");
  if (k == 0) return {};

  using Entry = std::pair<double, Index>;  // max-heap on (d2, index)
  std::priority_queue<Entry> heap;
  auto worst = [&]() { return heap.size() < static_cast<std::size_t>(k) ? std::numeric_limits<double>::infinity() : heap.top().first; };

  // Explicit stack of (node, lower bound on squared distance to its region).
  std::vector<std::pair<Index, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > worst()) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.split_dim < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        const Index row = order_[static_cast<std::size_t>(i)];
        const double d2 = (points_.row(row).transpose() - query).squaredNorm();
        const Entry e{d2, row};
        if (heap.size() < static_cast<std::size_t>(k)) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      continue;
    }
    const double diff = query[node.split_dim] - node.split_value;
    const Index near_child = diff < 0.0 ? node.left : node.right;
    const Index far_child = diff < 0.0 ? node.right : node.left;
    // Far side first on the stack so the near side is explored first.
    stack.emplace_back(far_child, std::max(bound, diff * diff));
    stack.emplace_back(near_child, bound);
  }

  std::vector<Index> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

}  // namespace lacal
