#ifndef FUNNELPLOT_TRANSFORM_HPP
#define FUNNELPLOT_TRANSFORM_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "funnelplot/error.hpp"

namespace funnelplot {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Moment coefficient of skewness g1 = m3 / m2^(3/2), central moments with
/// divisor n. Throws Error(DegenerateSample) for fewer than three values or a
/// constant sample.
template <typename Derived>
typename Derived::Scalar sample_skewness(const Eigen::MatrixBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() < 3)
    throw Error(ErrorKind::DegenerateSample, "skewness needs at least three values");
  if (values.minCoeff() == values.maxCoeff())
    throw Error(ErrorKind::DegenerateSample, "skewness of a constant sample is undefined");
  const Scalar mean = values.mean();
  const auto centered = (values.array() - mean).eval();
  const Scalar m2 = centered.square().mean();
  const Scalar m3 = centered.cube().mean();
  if (!(m2 > Scalar(0)))
    throw Error(ErrorKind::DegenerateSample, "sample has zero variance");
  using std::pow;
  return m3 / pow(m2, Scalar(1.5));
}

/// Elementwise ln(x + delta). Throws Error(NonPositiveShift) unless delta > 0
/// and every shifted value is positive.
template <typename Derived>
Vector<typename Derived::Scalar> log_shift_transform(const Eigen::MatrixBase<Derived>& values,
                                                     typename Derived::Scalar delta) {
  using Scalar = typename Derived::Scalar;
  if (!(delta > Scalar(0)))
    throw Error(ErrorKind::NonPositiveShift, "log shift must be positive");
  if (values.size() > 0 && !(values.minCoeff() + delta > Scalar(0)))
    throw Error(ErrorKind::NonPositiveShift, "shifted values must be positive");
  return (values.array() + delta).log().matrix();
}

struct SolverOptions {
  double lower = 1e-9;
  double upper = 10.0;
  double tolerance = 1e-9;
  int max_iterations = 200;
  // the upper end is doubled until the skewness changes sign or this cap
  double upper_cap = 1e6;
};

struct TransformSpec {
  double delta = 0.0;
  double achieved_skewness = 0.0;
  double bracket_lower = 0.0;
  double bracket_upper = 0.0;
  int iterations = 0;
  bool converged = false;
  // false when delta was supplied instead of solved
  bool solved = true;
};

/// Bisection for the root of a skewness curve over delta > 0. Midpoints are
/// taken on the log scale so that brackets spanning several decades shrink
/// evenly. The upper end is doubled up to options.upper_cap until the curve
/// changes sign; if it never does, NoSignChangeError reports the endpoint
/// with the smaller |skewness|.
template <typename SkewnessAt>
TransformSpec solve_zero_skewness(SkewnessAt&& skewness_at, const SolverOptions& options) {
  double lo = options.lower;
  double hi = options.upper;
  double f_lo = skewness_at(lo);
  double f_hi = skewness_at(hi);

  TransformSpec spec;
  auto finish = [&](double delta, double skew, int iterations) {
    spec.delta = delta;
    spec.achieved_skewness = skew;
    spec.iterations = iterations;
    spec.converged = std::abs(skew) <= options.tolerance;
    return spec;
  };

  while (std::signbit(f_lo) == std::signbit(f_hi) && std::abs(f_lo) > options.tolerance &&
         std::abs(f_hi) > options.tolerance && hi < options.upper_cap) {
    hi = std::min(2.0 * hi, options.upper_cap);
    f_hi = skewness_at(hi);
  }
  spec.bracket_lower = lo;
  spec.bracket_upper = hi;

  if (std::abs(f_lo) <= options.tolerance) return finish(lo, f_lo, 0);
  if (std::abs(f_hi) <= options.tolerance) return finish(hi, f_hi, 0);
  if (std::signbit(f_lo) == std::signbit(f_hi)) {
    if (std::abs(f_lo) <= std::abs(f_hi)) throw NoSignChangeError(lo, f_lo, lo, hi);
    throw NoSignChangeError(hi, f_hi, lo, hi);
  }

  int iteration = 0;
  while (iteration < options.max_iterations) {
    ++iteration;
    const double mid = std::sqrt(lo) * std::sqrt(hi);
    if (!(mid > lo && mid < hi)) break;
    const double f_mid = skewness_at(mid);
    if (std::abs(f_mid) <= options.tolerance) return finish(mid, f_mid, iteration);
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  if (std::abs(f_lo) <= std::abs(f_hi)) return finish(lo, f_lo, iteration);
  return finish(hi, f_hi, iteration);
}

/// Shift delta for which ln(x + delta) has zero sample skewness.
template <typename Derived>
TransformSpec zero_skewness_delta(const Eigen::MatrixBase<Derived>& values,
                                  const SolverOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  if (values.size() < 3)
    throw Error(ErrorKind::DegenerateSample, "zero-skewness shift needs at least three values");
  Vector<Scalar> sorted = values;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  if (sorted(0) == sorted(sorted.size() - 1))
    throw Error(ErrorKind::DegenerateSample, "zero-skewness shift of a constant sample");
  if (sorted(0) < Scalar(0))
    throw Error(ErrorKind::NonPositiveShift, "log-shift transform needs non-negative values");

  const Vector<Scalar> x = values;
  return solve_zero_skewness(
      [&x](double delta) {
        return static_cast<double>(sample_skewness(log_shift_transform(x, Scalar(delta))));
      },
      options);
}

}  // namespace funnelplot

#endif  // FUNNELPLOT_TRANSFORM_HPP
