#include <gtest/gtest.h>

#include <cmath>

#include "qiup/parallel.hpp"
#include "qiup/quadrature.hpp"

using namespace qiup;

TEST(GaussLegendre, ExactForPolynomialsUpToDegree2nMinus1) {
  for (unsigned n : {1u, 4u, 8u, 16u}) {
    const auto& r = quad::gauss_legendre(n);
    for (unsigned d = 0; d < 2 * n; ++d) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], d);
      const double exact = d % 2 ? 0.0 : 2.0 / (d + 1.0);
      EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " degree=" << d;
    }
  }
}

TEST(GaussLegendre, RejectsZeroOrder) { EXPECT_THROW(quad::gauss_legendre(0), std::invalid_argument); }

TEST(Composite, IntegratesSmoothFunctionOverPanels) {
  double s = 0.0;
  for (const auto& n : quad::panels(0.0, 3.0, 5, 8)) s += n.w * std::exp(-n.x) * std::cos(4.0 * n.x);
  // int_0^3 e^{-x} cos 4x dx
  const double exact = (1.0 - std::exp(-3.0) * (std::cos(12.0) - 4.0 * std::sin(12.0))) / 17.0;
  EXPECT_NEAR(s, exact, 1e-13);
}

TEST(Periodic, ExactForLowHarmonics) {
  const auto r = quad::periodic(16);
  for (int m = 0; m < 16; ++m) {
    double s = 0.0;
    for (const auto& n : r) s += n.w * std::cos(m * n.x);
    EXPECT_NEAR(s, m == 0 ? 2.0 * pi : 0.0, 1e-13) << m;
  }
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  set_thread_count(3);
  std::vector<int> hits(101, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  set_thread_count(1);
}
