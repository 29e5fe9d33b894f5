// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/parallel.hpp"
#include "eevi/core/rng.hpp"

namespace eevi {

struct KnnEntropyConfig {
  std::size_t k = 4;
  bool jitter_duplicates = true;
  double jitter_scale = 1e-10;
  std::uint64_t jitter_seed = 0;
  std::size_t brute_force_below = 512;
  unsigned workers = 1;
};

// Row-major sample matrix: N points of dimension d.
struct SampleMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;

  const double* row(std::size_t i) const { return data.data() + i * d; }
};

namespace detail {

inline double max_dist(const double* a, const double* b, std::size_t d) {
  double m = 0.0;
  for (std::size_t j = 0; j < d; ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

// k-d tree over a sample matrix, max-norm nearest neighbours.
class KdTree {
 public:
  explicit KdTree(const SampleMatrix& s) : s_(s), idx_(s.n) {
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    nodes_.reserve(2 * s.n / kLeaf + 2);
    build(0, s.n, 0);
  }

  // Distance from point q (itself excluded) to its k-th nearest neighbour.
  double kth_distance(std::size_t q, std::size_t k) const {
    std::priority_queue<double> heap;  // k smallest so far, max on top
    search(0, q, k, heap);
    return heap.top();
  }

 private:
  static constexpr std::size_t kLeaf = 16;

  struct Node {
    std::size_t begin, end;
    std::size_t dim = 0;
    double split = 0.0;
    std::size_t left = 0, right = 0;  // 0 means leaf
  };

  std::size_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeaf) return id;
    // Split on the widest dimension at the median.
    std::size_t best = 0;
    double spread = -1.0;
    for (std::size_t j = 0; j < s_.d; ++j) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = s_.row(idx_[i])[j];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > spread) {
        spread = hi - lo;
        best = j;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(idx_.begin() + static_cast<std::ptrdiff_t>(begin),
                     idx_.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return s_.row(a)[best] < s_.row(b)[best];
                     });
    const double split = s_.row(idx_[mid])[best];
    const auto l = build(begin, mid, depth + 1);
    const auto r = build(mid, end, depth + 1);
    nodes_[id].dim = best;
    nodes_[id].split = split;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void search(std::size_t id, std::size_t q, std::size_t k,
              std::priority_queue<double>& heap) const {
    const Node& nd = nodes_[id];
    const double* p = s_.row(q);
    if (nd.left == 0) {
      for (std::size_t i = nd.begin; i < nd.end; ++i) {
        if (idx_[i] == q) continue;
        const double dist = max_dist(p, s_.row(idx_[i]), s_.d);
        if (heap.size() < k) heap.push(dist);
        else if (dist < heap.top()) {
          heap.pop();
          heap.push(dist);
        }
      }
      return;
    }
    const double diff = p[nd.dim] - nd.split;
    const auto near = diff < 0 ? nd.left : nd.right;
    const auto far = diff < 0 ? nd.right : nd.left;
    search(near, q, k, heap);
    if (heap.size() < k || std::abs(diff) <= heap.top()) search(far, q, k, heap);
  }

  const SampleMatrix& s_;
  std::vector<std::size_t> idx_;
  std::vector<Node> nodes_;
};

}  // namespace detail

// k-th neighbour max-norm distances, by brute force.
inline std::vector<double> knn_distances_brute(const SampleMatrix& s, std::size_t k) {
  std::vector<double> out(s.n);
  std::vector<double> d(s.n > 0 ? s.n - 1 : 0);
  for (std::size_t i = 0; i < s.n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < s.n; ++j)
      if (j != i) d[c++] = detail::max_dist(s.row(i), s.row(j), s.d);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    out[i] = d[k - 1];
  }
  return out;
}

inline std::vector<double> knn_distances_tree(const SampleMatrix& s, std::size_t k,
                                              unsigned workers = 1) {
  detail::KdTree tree(s);
  std::vector<double> out(s.n);
  parallel_for(s.n, workers, [&](std::size_t i) { out[i] = tree.kth_distance(i, k); });
  return out;
}

// Kozachenko-Leonenko entropy estimate under the max norm:
//   psi(N) - psi(k) + (d / N) sum_i ln(2 r_i)
// with r_i the distance from point i to its k-th nearest neighbour.
inline double knn_entropy(SampleMatrix s, const KnnEntropyConfig& cfg = {}) {
  require(s.d >= 1 && s.data.size() == s.n * s.d, ErrorCode::invalid_argument,
          "sample matrix shape mismatch");
  require(cfg.k >= 1 && s.n > cfg.k, ErrorCode::invalid_argument,
          "kNN entropy needs N > k >= 1");
  auto dist = [&] {
    return s.n < cfg.brute_force_below ? knn_distances_brute(s, cfg.k)
                                       : knn_distances_tree(s, cfg.k, cfg.workers);
  };
  auto r = dist();
  if (std::any_of(r.begin(), r.end(), [](double x) { return x <= 0.0; })) {
    require(cfg.jitter_duplicates, ErrorCode::degenerate_sample,
            "duplicate points give a zero neighbour distance");
    Rng rng(derive_seed(cfg.jitter_seed, {0x6a6974ULL}));
    for (auto& x : s.data) x += cfg.jitter_scale * (rng.uniform() - 0.5);
    r = dist();
    require(std::none_of(r.begin(), r.end(), [](double x) { return x <= 0.0; }),
            ErrorCode::degenerate_sample, "more than k coincident points after jitter");
  }
  std::vector<double> logs(s.n);
  for (std::size_t i = 0; i < s.n; ++i) logs[i] = std::log(2.0 * r[i]);
  const double n = static_cast<double>(s.n);
  return boost::math::digamma(n) - boost::math::digamma(static_cast<double>(cfg.k)) +
         static_cast<double>(s.d) * pairwise_sum(logs) / n;
}

struct TimingRecord {
  std::string estimator;
  double parameter = 0.0;
  double wall_time_ms = 0.0;
  std::vector<double> values;
};

struct TimingTask {
  std::string estimator;
  std::vector<double> grid;  // increasing
  std::function<std::vector<double>(double)> run;
};

// Runs each task at each grid value and records wall times and outputs.
inline std::vector<TimingRecord> runtime_profile(const std::vector<TimingTask>& tasks) {
  std::vector<TimingRecord> out;
  for (const auto& task : tasks) {
    require(!task.grid.empty(), ErrorCode::invalid_argument, "empty parameter grid");
    for (std::size_t i = 1; i < task.grid.size(); ++i)
      require(task.grid[i] > task.grid[i - 1], ErrorCode::invalid_argument,
              "parameter grid must increase");
    for (double p : task.grid) {
      const auto t0 = std::chrono::steady_clock::now();
      auto values = task.run(p);
      const auto t1 = std::chrono::steady_clock::now();
      out.push_back({task.estimator, p,
                     std::chrono::duration<double, std::milli>(t1 - t0).count(),
                     std::move(values)});
    }
  }
  return out;
}

}  // namespace eevi
