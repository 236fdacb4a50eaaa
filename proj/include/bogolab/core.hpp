#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bogolab {

/// Raised for invalid arguments and failed numerical certificates.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <int Dim>
using Vec = std::array<double, Dim>;

template <int Dim>
using Mat = std::array<std::array<double, Dim>, Dim>;

template <int Dim>
using Tensor3 = std::array<Mat<Dim>, Dim>;

template <int Dim>
inline constexpr void check_dim() {
  static_assert(Dim == 2 || Dim == 3, "only dimensions 2 and 3 are supported");
}

template <int Dim>
constexpr double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (int i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

template <int Dim>
double norm(const Vec<Dim>& a) {
  return std::sqrt(dot<Dim>(a, a));
}

// Arithmetic on std::array<double, N>; N is std::size_t so deduction works for Vec<Dim>.
template <std::size_t N>
constexpr std::array<double, N> operator+(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t N>
constexpr std::array<double, N> operator-(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t N>
constexpr std::array<double, N> operator*(double s, const std::array<double, N>& a) {
  std::array<double, N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
  return r;
}

template <int Dim>
constexpr Mat<Dim> zero_mat() {
  return Mat<Dim>{};
}

/// Surface measure of the unit sphere S^{n-1}.
constexpr double unit_sphere_area(int dim) {
  return dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

/// Volume of the unit ball in R^n.
constexpr double unit_ball_volume(int dim) {
  return dim == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
}

}  // namespace bogolab
