#pragma once

#include <boost/math/special_functions/legendre.hpp>

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "qiup/types.hpp"

namespace qiup::quad {

/// Gauss-Legendre rule on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline Rule build_gauss_legendre(unsigned n) {
  // boost returns the nonnegative zeros in ascending order
  const auto half = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
  Rule r;
  r.nodes.reserve(n);
  r.weights.reserve(n);
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = half.rbegin(); it != half.rend(); ++it) {
    if (*it == 0.0) continue;
    r.nodes.push_back(-*it);
    r.weights.push_back(weight(*it));
  }
  for (double x : half) {
    r.nodes.push_back(x);
    r.weights.push_back(weight(x));
  }
  return r;
}

}  // namespace detail

/// Cached n-point Gauss-Legendre rule; thread-safe.
inline const Rule& gauss_legendre(unsigned n) {
  if (n == 0) throw DomainError("Gauss-Legendre order must be positive");
  static std::mutex mtx;
  static std::map<unsigned, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mtx);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Rule>(detail::build_gauss_legendre(n));
  return *slot;
}

/// One quadrature node on the real line.
struct Node1D {
  double x;
  double w;
};

/// Composite Gauss-Legendre over consecutive panels [b0,b1], [b1,b2], ...
inline std::vector<Node1D> composite(std::span<const double> breaks, unsigned order) {
  const Rule& r = gauss_legendre(order);
  std::vector<Node1D> out;
  out.reserve(order * (breaks.size() > 0 ? breaks.size() - 1 : 0));
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    if (!(b > a)) continue;
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) out.push_back({c + h * r.nodes[i], h * r.weights[i]});
  }
  return out;
}

/// Gauss-Legendre over [a, b] split into equal panels.
inline std::vector<Node1D> panels(double a, double b, unsigned n_panels, unsigned order) {
  std::vector<double> br(n_panels + 1);
  for (unsigned i = 0; i <= n_panels; ++i) br[i] = a + (b - a) * static_cast<double>(i) / n_panels;
  return composite(br, order);
}

/// Periodic trapezoid nodes on [0, 2 pi).
inline std::vector<Node1D> periodic(unsigned n) {
  std::vector<Node1D> out(n);
  const double h = 2.0 * pi / n;
  for (unsigned i = 0; i < n; ++i) out[i] = {h * i, h};
  return out;
}

}  // namespace qiup::quad
