#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "splatcamo/common.hpp"

namespace splatcamo {

/// Highest SH degree supported; the camouflage mechanism never needs more.
inline constexpr int kMaxShOrder = 2;

/// Coefficients per color channel for degree-l real SH: (l+1)^2.
inline int sh_coeff_count(int order) {
  require(order >= 0 && order <= kMaxShOrder, "SH order must be in {0, 1, 2}");
  return (order + 1) * (order + 1);
}

/// View-dependent color of one splat: a 3 x (l+1)^2 coefficient matrix over
/// the real SH basis, decoded as clamp(coeffs * Y(d) + 0.5, 0, inf).
struct ShColor {
  int order = 0;
  Eigen::Matrix<double, 3, Eigen::Dynamic> coeffs;

  static ShColor zeros(int order) {
    ShColor c;
    c.order = order;
    c.coeffs = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, sh_coeff_count(order));
    return c;
  }

  /// View-independent color: DC term only, higher bands zero.
  static ShColor constant(int order, const Vec3& rgb);

  void validate() const;
};

/// Real SH basis values [Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22] at a
/// unit direction, ascending (l, m), graphics normalization constants.
Eigen::VectorXd eval_sh_basis(const Vec3& unit_dir, int order);

/// Tangential gradient of each basis function at a unit direction
/// (radial component projected out); column k is d(Y_k)/d(dir).
Eigen::Matrix<double, 3, Eigen::Dynamic> eval_sh_basis_gradient(const Vec3& unit_dir, int order);

/// Decoded RGB at a view direction: per channel max(0, c . Y(d) + 0.5).
/// No upper clamp; rasters clamp at image write instead.
Vec3 eval_sh_color(const ShColor& color, const Vec3& unit_dir);

struct ShFit {
  ShColor color;
  /// RMS of the linear predictor residual over samples and channels
  /// (the decode's lower clamp is not part of the fitted model).
  double residual = 0.0;
};

/// Direct least-squares fit of SH coefficients to directional RGB targets.
/// Solves the normal equations with a column-pivoted QR; throws if the basis
/// matrix is rank-deficient (message names the achieved rank).
ShFit fit_sh(const std::vector<std::pair<Vec3, Vec3>>& samples, int order);

}  // namespace splatcamo
