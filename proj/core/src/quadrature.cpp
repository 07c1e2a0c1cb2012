#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "cjsis/error.hpp"
#include "cjsis/likelihood.hpp"

namespace cjsis {
namespace {

GaussHermiteRule golub_welsch(int n) {
  // Jacobi matrix of the probabilists' Hermite recurrence He_{k+1} = x He_k - k He_{k-1}.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw Error("Gauss-Hermite eigen-decomposition failed");
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.log_weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double v0 = solver.eigenvectors()(0, k);
    rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
    rule.log_weights[static_cast<std::size_t>(k)] = 2.0 * std::log(std::fabs(v0));
  }
  // Symmetrize: the exact rule is symmetric about 0.
  for (int k = 0; k < n / 2; ++k) {
    auto lo = static_cast<std::size_t>(k);
    auto hi = static_cast<std::size_t>(n - 1 - k);
    const double x = 0.5 * (rule.nodes[hi] - rule.nodes[lo]);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    const double w = 0.5 * (rule.log_weights[lo] + rule.log_weights[hi]);
    rule.log_weights[lo] = rule.log_weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int nodes) {
  if (nodes < 1) throw ConfigError("quadrature needs at least one node");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  const std::lock_guard lock(mutex);
  auto& slot = cache[nodes];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(golub_welsch(nodes));
  return *slot;
}

}  // namespace cjsis
