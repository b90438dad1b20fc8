#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace splinecop {

enum class BasisMode { value, derivative, antiderivative };

// Clamped cubic B-spline basis with K functions on [lo, hi] and K-3
// equidistant intervals. Each interval stores the local polynomial pieces of
// its four active functions in t = (s - left) / h, so value, derivative and
// antiderivative are exact Horner evaluations.
class BSplineBasis {
 public:
  static constexpr int degree = 3;

  BSplineBasis(double lo, double hi, int size);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  int size() const noexcept { return size_; }
  int intervals() const noexcept { return size_ - degree; }
  double spacing() const noexcept { return h_; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  // Full K-vector in the requested mode. Value and derivative clamp s into
  // [lo, hi]; the antiderivative is anchored at lo and constant above hi.
  std::vector<double> eval(double s, BasisMode mode) const;

  // The four active functions at s (s clamped into [lo, hi]). `first` is
  // the index of the first active function.
  struct Local {
    int first = 0;
    std::array<double, 4> value{};
    std::array<double, 4> derivative{};
    std::array<double, 4> second{};
    std::array<double, 4> integral{};  // from lo to s
  };
  Local local(double s) const;

  struct LocalValues {
    int first = 0;
    std::array<double, 4> value{};
  };
  LocalValues local_values(double s) const;

  // Integral of b_k over the whole domain.
  double total_integral(int k) const { return totals_[k]; }

 private:
  using Poly = std::array<double, 4>;  // c0 + c1 t + c2 t^2 + c3 t^3

  int locate(double s, double& t) const noexcept;

  double lo_;
  double hi_;
  int size_;
  double h_;
  std::vector<double> knots_;
  std::vector<std::array<Poly, 4>> pieces_;            // [interval][active]
  std::vector<std::array<double, 4>> cumulative_;      // int_lo^{left_j} b_{j+a}
  std::vector<double> totals_;
};

// rth-order difference penalty P = D_r' D_r + ridge * I.
struct PenaltyMatrix {
  Eigen::MatrixXd matrix;
  int order = 0;
  double ridge = 0.0;
  int rank = 0;

  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& c) const {
    return c.dot(matrix * c);
  }
};

Eigen::MatrixXd difference_matrix(int size, int order);
PenaltyMatrix difference_penalty(int size, int order, double ridge = 0.0);

}  // namespace splinecop
