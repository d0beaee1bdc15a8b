#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace roughfio {

using Complex = std::complex<double>;

// Points in x-space or xi-space. The cast keeps Dim out of deduction, so a
// function template deduces Dim from its Grid/Phase arguments instead.
template <int Dim>
using Vec = std::array<double, static_cast<std::size_t>(Dim)>;

// Lattice multi-index.
template <int Dim>
using Index = std::array<std::int64_t, static_cast<std::size_t>(Dim)>;

// Multi-index for derivatives.
template <int Dim>
using MultiIndex = std::array<int, static_cast<std::size_t>(Dim)>;

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

/// Thrown for violated preconditions (bad sizes, out-of-range exponents, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical evaluation produces something unusable.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

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

template <std::size_t N>
constexpr std::array<double, N> operator+(std::array<double, N> a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
  return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator-(std::array<double, N> a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
  return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator*(double s, std::array<double, N> a) {
  for (std::size_t i = 0; i < N; ++i) a[i] *= s;
  return a;
}

template <int Dim>
Eigen::Matrix<double, Dim, 1> to_eigen(const Vec<Dim>& v) {
  Eigen::Matrix<double, Dim, 1> e;
  for (int i = 0; i < Dim; ++i) e(i) = v[i];
  return e;
}

template <int Dim>
Vec<Dim> from_eigen(const Eigen::Matrix<double, Dim, 1>& e) {
  Vec<Dim> v{};
  for (int i = 0; i < Dim; ++i) v[i] = e(i);
  return v;
}

template <int Dim>
int order(const MultiIndex<Dim>& alpha) {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

template <int Dim>
std::string to_string(const Vec<Dim>& v) {
  std::string s = "(";
  for (int i = 0; i < Dim; ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

inline bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

/// Runs `fn.template operator()<D>()` for the runtime dimension `dim`.
template <class Fn>
decltype(auto) dispatch_dim(int dim, Fn&& fn) {
  switch (dim) {
    case 1: return fn.template operator()<1>();
    case 2: return fn.template operator()<2>();
    case 3: return fn.template operator()<3>();
    default: throw DomainError("dimension must be 1, 2 or 3, got " + std::to_string(dim));
  }
}

}  // namespace roughfio
