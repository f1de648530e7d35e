#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace msbd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Periodic lattice a signal lives on. One-dimensional signals use rows == 1;
/// images are stored row-major so that index = r * cols + c.
struct Shape {
  std::size_t rows = 1;
  std::size_t cols = 0;

  static Shape line(std::size_t n) { return Shape{1, n}; }

  [[nodiscard]] std::size_t size() const { return rows * cols; }
  [[nodiscard]] bool is_line() const { return rows == 1; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class Sign : int { Plus = 1, Minus = -1 };

inline double to_double(Sign s) { return s == Sign::Plus ? 1.0 : -1.0; }
inline char to_char(Sign s) { return s == Sign::Plus ? '+' : '-'; }

}  // namespace msbd
