#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qiup {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Thrown when an input violates a documented precondition or invariant.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical integral misses its tolerance. Carries the
/// achieved relative change between the last two refinement levels.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved relative change " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  [[nodiscard]] double achieved() const noexcept { return achieved_; }

private:
  double achieved_;
};

/// Cartesian point, micrometers.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Point3 operator*(double s, Point3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(const Point3&, const Point3&) = default;

  [[nodiscard]] double norm() const { return std::sqrt(x * x + y * y + z * z); }
  [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Vacuum wavenumber k = 2 pi / lambda in rad/um.
class WaveNumber {
public:
  explicit WaveNumber(double k) : k_(k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("wavenumber must be positive and finite");
  }
  static WaveNumber from_wavelength_um(double lambda_um) { return WaveNumber(2.0 * pi / lambda_um); }
  static WaveNumber from_wavelength_nm(double lambda_nm) { return from_wavelength_um(lambda_nm * 1e-3); }

  [[nodiscard]] double value() const noexcept { return k_; }
  [[nodiscard]] double wavelength_um() const noexcept { return 2.0 * pi / k_; }

private:
  double k_;
};

/// Dense 3x3 tensor indexed (row, col) over (x, y, z).
template <typename T>
struct Tensor3 {
  std::array<T, 9> m{};

  constexpr T& operator()(int i, int j) { return m[static_cast<std::size_t>(3 * i + j)]; }
  constexpr const T& operator()(int i, int j) const { return m[static_cast<std::size_t>(3 * i + j)]; }

  static constexpr Tensor3 zero() { return {}; }
  static constexpr Tensor3 identity() {
    Tensor3 t;
    t(0, 0) = t(1, 1) = t(2, 2) = T(1);
    return t;
  }

  [[nodiscard]] constexpr Tensor3 transposed() const {
    Tensor3 t;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t(i, j) = (*this)(j, i);
    return t;
  }

  Tensor3& operator+=(const Tensor3& o) {
    for (std::size_t i = 0; i < 9; ++i) m[i] += o.m[i];
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    for (std::size_t i = 0; i < 9; ++i) m[i] -= o.m[i];
    return *this;
  }
  template <typename S>
  Tensor3& operator*=(S s) {
    for (auto& v : m) v *= s;
    return *this;
  }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  template <typename S>
  friend Tensor3 operator*(S s, Tensor3 a) { return a *= s; }

  friend Tensor3 operator*(const Tensor3& a, const Tensor3& b) {
    Tensor3 c;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        T acc{};
        for (int k = 0; k < 3; ++k) acc += a(i, k) * b(k, j);
        c(i, j) = acc;
      }
    return c;
  }
};

using ComplexTensor3 = Tensor3<cplx>;
using RealTensor3 = Tensor3<double>;

inline RealTensor3 imag_part(const ComplexTensor3& t) {
  RealTensor3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = t.m[i].imag();
  return r;
}

inline ComplexTensor3 conj(const ComplexTensor3& t) {
  ComplexTensor3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = std::conj(t.m[i]);
  return r;
}

inline double frobenius(const ComplexTensor3& t) {
  double s = 0.0;
  for (const auto& v : t.m) s += std::norm(v);
  return std::sqrt(s);
}

inline bool all_finite(const ComplexTensor3& t) {
  for (const auto& v : t.m)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

/// Polar-angle band [theta_min, theta_max] in degrees measured from the +z axis.
/// theta_min acts as a high-pass cutoff, theta_max as the collection aperture.
struct AngularFilter {
  double theta_min_deg = 0.0;
  double theta_max_deg = 90.0;

  AngularFilter() = default;
  AngularFilter(double lo, double hi) : theta_min_deg(lo), theta_max_deg(hi) { validate(); }

  void validate() const {
    if (!(theta_min_deg >= 0.0 && theta_min_deg <= theta_max_deg && theta_max_deg <= 90.0))
      throw DomainError("angular filter requires 0 <= theta_min <= theta_max <= 90 degrees");
  }
  [[nodiscard]] double theta_min_rad() const { return theta_min_deg * pi / 180.0; }
  [[nodiscard]] double theta_max_rad() const { return theta_max_deg * pi / 180.0; }
  [[nodiscard]] bool empty() const { return theta_min_deg >= theta_max_deg; }
  [[nodiscard]] static AngularFilter high_pass(double theta_deg) { return {theta_deg, 90.0}; }
};

}  // namespace qiup
