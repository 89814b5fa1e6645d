#pragma once

#include <cstddef>
#include <vector>

namespace ocm::route {

/// Dense square cost matrix, row-major. cost(i, j) is the cost of sending
/// row i to column j.
class CostMatrix {
 public:
  explicit CostMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  [[nodiscard]] std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// Exact minimum-cost perfect matching (Hungarian method with row/column
/// potentials, O(n^3)). result[i] is the column assigned to row i.
std::vector<std::size_t> solve_assignment(const CostMatrix& cost);

double assignment_cost(const CostMatrix& cost, const std::vector<std::size_t>& assignment);

}  // namespace ocm::route
