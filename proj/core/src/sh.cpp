#include "splatcamo/sh.hpp"

#include <cmath>
#include <string>

namespace splatcamo {

namespace {

// Real SH normalization constants, 12 significant digits.
constexpr double kSh0 = 0.282094791774;   // 1/(2 sqrt(pi))
constexpr double kSh1 = 0.488602511903;   // sqrt(3/(4 pi))
constexpr double kSh2xy = 1.09254843059;  // 1/2 sqrt(15/pi), for xy, yz, xz
constexpr double kSh2zz = 0.315391565253; // 1/4 sqrt(5/pi),  for 3z^2 - 1
constexpr double kSh2xx = 0.546274215296; // 1/4 sqrt(15/pi), for x^2 - y^2

void check_unit(const Vec3& d) {
  require(std::abs(d.norm() - 1.0) <= 1e-9, "view direction must be unit-norm");
}

}  // namespace

ShColor ShColor::constant(int order, const Vec3& rgb) {
  ShColor c = zeros(order);
  c.coeffs.col(0) = (rgb - Vec3::Constant(0.5)) / kSh0;
  return c;
}

void ShColor::validate() const {
  require(order >= 0 && order <= kMaxShOrder, "SH order must be in {0, 1, 2}");
  require(coeffs.rows() == 3 && coeffs.cols() == sh_coeff_count(order),
          "SH coefficient matrix must be 3 x (order+1)^2");
  require(coeffs.allFinite(), "SH coefficients must be finite");
}

Eigen::VectorXd eval_sh_basis(const Vec3& d, int order) {
  check_unit(d);
  Eigen::VectorXd y(sh_coeff_count(order));
  const double x = d.x(), yy = d.y(), z = d.z();
  y[0] = kSh0;
  if (order >= 1) {
    y[1] = kSh1 * yy;
    y[2] = kSh1 * z;
    y[3] = kSh1 * x;
  }
  if (order >= 2) {
    y[4] = kSh2xy * x * yy;
    y[5] = kSh2xy * yy * z;
    y[6] = kSh2zz * (3.0 * z * z - 1.0);
    y[7] = kSh2xy * x * z;
    y[8] = kSh2xx * (x * x - yy * yy);
  }
  return y;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> eval_sh_basis_gradient(const Vec3& d, int order) {
  check_unit(d);
  Eigen::Matrix<double, 3, Eigen::Dynamic> g(3, sh_coeff_count(order));
  const double x = d.x(), y = d.y(), z = d.z();
  g.col(0).setZero();
  if (order >= 1) {
    g.col(1) = Vec3(0, kSh1, 0);
    g.col(2) = Vec3(0, 0, kSh1);
    g.col(3) = Vec3(kSh1, 0, 0);
  }
  if (order >= 2) {
    g.col(4) = kSh2xy * Vec3(y, x, 0);
    g.col(5) = kSh2xy * Vec3(0, z, y);
    g.col(6) = kSh2zz * Vec3(0, 0, 6.0 * z);
    g.col(7) = kSh2xy * Vec3(z, 0, x);
    g.col(8) = kSh2xx * Vec3(2.0 * x, -2.0 * y, 0);
  }
  // The basis lives on the sphere; remove the radial component so the
  // gradient matches directional (tangential) perturbations.
  for (int k = 0; k < g.cols(); ++k) {
    g.col(k) -= d * d.dot(g.col(k));
  }
  return g;
}

Vec3 eval_sh_color(const ShColor& color, const Vec3& d) {
  color.validate();
  const Eigen::VectorXd y = eval_sh_basis(d, color.order);
  Vec3 rgb = color.coeffs * y + Vec3::Constant(0.5);
  return rgb.cwiseMax(0.0);
}

ShFit fit_sh(const std::vector<std::pair<Vec3, Vec3>>& samples, int order) {
  const int k = sh_coeff_count(order);
  require(static_cast<int>(samples.size()) >= k,
          "fit_sh needs at least (order+1)^2 samples, got " + std::to_string(samples.size()));

  Eigen::MatrixXd basis(samples.size(), k);
  Eigen::MatrixXd targets(samples.size(), 3);
  for (size_t i = 0; i < samples.size(); ++i) {
    basis.row(i) = eval_sh_basis(samples[i].first, order).transpose();
    targets.row(i) = (samples[i].second - Vec3::Constant(0.5)).transpose();
  }

  const Eigen::MatrixXd normal = basis.transpose() * basis;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  qr.setThreshold(1e-10);  // relative to the largest pivot
  const int rank = static_cast<int>(qr.rank());
  if (rank < k) {
    throw std::invalid_argument("fit_sh: sample directions span rank " + std::to_string(rank) +
                                " < " + std::to_string(k) + " basis functions");
  }

  ShFit fit;
  fit.color.order = order;
  fit.color.coeffs.resize(3, k);
  const Eigen::MatrixXd rhs = basis.transpose() * targets;  // k x 3
  const Eigen::MatrixXd solution = qr.solve(rhs);           // k x 3
  fit.color.coeffs = solution.transpose();

  const Eigen::MatrixXd err = basis * solution - targets;
  fit.residual = std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
  return fit;
}

}  // namespace splatcamo
