#include "splinecop/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "splinecop/error.hpp"

namespace splinecop {

namespace {

using Poly = std::array<double, 4>;

// (offset + slope * t) * p, truncated to cubic.
Poly mul_linear(double offset, double slope, const Poly& p) {
  Poly r{};
  for (int m = 0; m < 4; ++m) {
    r[m] += offset * p[m];
    if (m + 1 < 4) r[m + 1] += slope * p[m];
  }
  return r;
}

Poly add(const Poly& a, const Poly& b) {
  Poly r{};
  for (int m = 0; m < 4; ++m) r[m] = a[m] + b[m];
  return r;
}

double horner(const Poly& p, double t) {
  return ((p[3] * t + p[2]) * t + p[1]) * t + p[0];
}

double horner_d1(const Poly& p, double t) {
  return (3.0 * p[3] * t + 2.0 * p[2]) * t + p[1];
}

double horner_d2(const Poly& p, double t) { return 6.0 * p[3] * t + 2.0 * p[2]; }

// int_0^t p
double horner_int(const Poly& p, double t) {
  return (((p[3] * 0.25 * t + p[2] / 3.0) * t + p[1] * 0.5) * t + p[0]) * t;
}

}  // namespace

BSplineBasis::BSplineBasis(double lo, double hi, int size) : lo_(lo), hi_(hi), size_(size) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw Error(Errc::invalid_domain, "basis requires finite lo < hi");
  }
  if (size < degree + 1) {
    throw Error(Errc::too_few_functions, "cubic basis needs at least 4 functions");
  }
  const int nint = size - degree;
  h_ = (hi - lo) / nint;

  knots_.resize(size + degree + 1);
  for (int i = 0; i <= degree; ++i) {
    knots_[i] = lo;
    knots_[size + i] = hi;
  }
  for (int j = 1; j < nint; ++j) knots_[degree + j] = lo + j * h_;

  pieces_.resize(nint);
  for (int j = 0; j < nint; ++j) {
    const int span = j + degree;
    const double left = knots_[span];
    // Cox-de Boor recursion on polynomials in the local coordinate t.
    std::array<Poly, 4> n{};
    n[degree] = Poly{1.0, 0.0, 0.0, 0.0};  // N_{span,0}, stored at slot 3
    for (int p = 1; p <= degree; ++p) {
      std::array<Poly, 4> next{};
      for (int slot = degree - p; slot <= degree; ++slot) {
        const int k = span - degree + slot;
        Poly term{};
        const double d1 = knots_[k + p] - knots_[k];
        if (d1 > 0.0 && slot >= degree - p + 1) {
          term = add(term, mul_linear((left - knots_[k]) / d1, h_ / d1, n[slot]));
        }
        const double d2 = knots_[k + p + 1] - knots_[k + 1];
        if (d2 > 0.0 && slot + 1 <= degree) {
          term = add(term, mul_linear((knots_[k + p + 1] - left) / d2, -h_ / d2, n[slot + 1]));
        }
        next[slot] = term;
      }
      n = next;
    }
    pieces_[j] = n;
  }

  totals_.assign(size, 0.0);
  cumulative_.resize(nint);
  std::vector<double> running(size, 0.0);
  for (int j = 0; j < nint; ++j) {
    for (int a = 0; a < 4; ++a) cumulative_[j][a] = running[j + a];
    for (int a = 0; a < 4; ++a) running[j + a] += h_ * horner_int(pieces_[j][a], 1.0);
  }
  totals_ = running;
}

int BSplineBasis::locate(double s, double& t) const noexcept {
  const int nint = intervals();
  if (!(s > lo_)) {
    t = 0.0;
    return 0;
  }
  if (!(s < hi_)) {
    t = 1.0;
    return nint - 1;
  }
  const double pos = (s - lo_) / h_;
  int j = static_cast<int>(pos);
  j = std::clamp(j, 0, nint - 1);
  t = std::clamp(pos - j, 0.0, 1.0);
  return j;
}

BSplineBasis::LocalValues BSplineBasis::local_values(double s) const {
  LocalValues out;
  double t = 0.0;
  const int j = locate(s, t);
  out.first = j;
  for (int a = 0; a < 4; ++a) out.value[a] = horner(pieces_[j][a], t);
  return out;
}

BSplineBasis::Local BSplineBasis::local(double s) const {
  Local out;
  double t = 0.0;
  const int j = locate(s, t);
  out.first = j;
  const double inv_h = 1.0 / h_;
  for (int a = 0; a < 4; ++a) {
    const Poly& p = pieces_[j][a];
    out.value[a] = horner(p, t);
    out.derivative[a] = horner_d1(p, t) * inv_h;
    out.second[a] = horner_d2(p, t) * inv_h * inv_h;
    out.integral[a] = cumulative_[j][a] + h_ * horner_int(p, t);
  }
  return out;
}

std::vector<double> BSplineBasis::eval(double s, BasisMode mode) const {
  if (!std::isfinite(s)) throw Error(Errc::non_finite, "basis evaluation at non-finite point");
  std::vector<double> out(size_, 0.0);
  switch (mode) {
    case BasisMode::value: {
      const auto loc = local_values(s);
      for (int a = 0; a < 4; ++a) out[loc.first + a] = loc.value[a];
      break;
    }
    case BasisMode::derivative: {
      const auto loc = local(s);
      for (int a = 0; a < 4; ++a) out[loc.first + a] = loc.derivative[a];
      break;
    }
    case BasisMode::antiderivative: {
      if (s <= lo_) break;
      if (s >= hi_) return totals_;
      const auto loc = local(s);
      for (int k = 0; k < loc.first; ++k) out[k] = totals_[k];
      for (int a = 0; a < 4; ++a) out[loc.first + a] = loc.integral[a];
      break;
    }
  }
  return out;
}

Eigen::MatrixXd difference_matrix(int size, int order) {
  if (order < 1 || order >= size) {
    throw Error(Errc::invalid_order, "difference order must satisfy 1 <= r < K");
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(size, size);
  for (int r = 0; r < order; ++r) {
    const Eigen::Index rows = d.rows() - 1;
    d = (d.bottomRows(rows) - d.topRows(rows)).eval();
  }
  return d;
}

PenaltyMatrix difference_penalty(int size, int order, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw Error(Errc::invalid_order, "ridge must be finite and nonnegative");
  }
  const Eigen::MatrixXd d = difference_matrix(size, order);
  PenaltyMatrix p;
  p.matrix = d.transpose() * d;
  if (ridge > 0.0) p.matrix.diagonal().array() += ridge;
  p.order = order;
  p.ridge = ridge;
  p.rank = ridge > 0.0 ? size : size - order;
  return p;
}

}  // namespace splinecop
