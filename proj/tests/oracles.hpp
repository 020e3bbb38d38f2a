// Slow reference implementations used only by the tests.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "skrock/types.hpp"

namespace oracle {

using skrock::Matrix;
using skrock::Vector;

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

/// T_s by its trigonometric / hyperbolic closed form.
inline double cheb_t_closed(int s, double x) {
  if (std::abs(x) <= 1.0) return std::cos(s * std::acos(x));
  const double v = std::cosh(s * std::acosh(std::abs(x)));
  return (x < 0 && s % 2 == 1) ? -v : v;
}

/// Central difference of a scalar function along every coordinate.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Direct periodic convolution y(i, j) = sum k(a, b) x(i - a + c, j - b + c).
inline Matrix circular_convolve(const Matrix& x, const Matrix& k) {
  const Eigen::Index r = x.rows(), c = x.cols(), h = k.rows() / 2, w = k.cols() / 2;
  Matrix y = Matrix::Zero(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index a = 0; a < k.rows(); ++a)
        for (Eigen::Index b = 0; b < k.cols(); ++b) {
          const Eigen::Index ii = ((i - (a - h)) % r + r) % r;
          const Eigen::Index jj = ((j - (b - w)) % c + c) % c;
          y(i, j) += k(a, b) * x(ii, jj);
        }
  return y;
}

/// Unitary 2-D DFT by the definition, column-major flattening.
inline Eigen::VectorXcd dft2(const Matrix& x) {
  const Eigen::Index r = x.rows(), c = x.cols();
  Eigen::VectorXcd out(r * c);
  const double pi = std::acos(-1.0);
  for (Eigen::Index u = 0; u < r; ++u)
    for (Eigen::Index v = 0; v < c; ++v) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
          acc += x(i, j) * std::polar(1.0, -2.0 * pi * (double(u * i) / r + double(v * j) / c));
      out[u + v * r] = acc / std::sqrt(double(r * c));
    }
  return out;
}

/// Isotropic TV with forward differences and replicate boundary.
inline double tv(const Matrix& u) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      const double dx = i + 1 < u.rows() ? u(i + 1, j) - u(i, j) : 0.0;
      const double dy = j + 1 < u.cols() ? u(i, j + 1) - u(i, j) : 0.0;
      s += std::hypot(dx, dy);
    }
  return s;
}

/// Minimises tau*TV(u) + |u - f|^2/2 by smoothed gradient descent with a
/// continuation on the smoothing parameter.
inline Matrix tv_denoise_slow(const Matrix& f, double tau) {
  Matrix u = f;
  const Eigen::Index r = f.rows(), c = f.cols();
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
    const double step = 1.0 / (1.0 + 8.0 * tau / eps);
    for (int it = 0; it < 200000; ++it) {
      Matrix g = u - f;
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) {
          const double dx = i + 1 < r ? u(i + 1, j) - u(i, j) : 0.0;
          const double dy = j + 1 < c ? u(i, j + 1) - u(i, j) : 0.0;
          const double n = std::sqrt(dx * dx + dy * dy + eps * eps);
          const double px = tau * dx / n, py = tau * dy / n;
          if (i + 1 < r) g(i + 1, j) += px, g(i, j) -= px;
          if (j + 1 < c) g(i, j + 1) += py, g(i, j) -= py;
        }
      u -= step * g;
      if (g.cwiseAbs().maxCoeff() < 1e-10) break;
    }
  }
  return u;
}

/// U_n by its closed form, with the removable singularities at +-1.
inline double cheb_u_closed(int n, double x) {
  if (x == 1.0) return n + 1.0;
  if (x == -1.0) return (n % 2 ? -1.0 : 1.0) * (n + 1.0);
  if (std::abs(x) < 1.0) {
    const double t = std::acos(x);
    return std::sin((n + 1) * t) / std::sin(t);
  }
  const double t = std::acosh(std::abs(x));
  const double v = std::sinh((n + 1) * t) / std::sinh(t);
  return (x < 0 && n % 2 == 1) ? -v : v;
}

/// SK-ROCK stability polynomials written out from the Chebyshev closed forms.
struct SkrockPolys {
  int s;
  double w0, w1;

  SkrockPolys(int stages, double eta) : s(stages), w0(1.0 + eta / (stages * stages)) {
    w1 = cheb_t_closed(s, w0) / (s * cheb_u_closed(s - 1, w0));
  }
  double r1(double z) const { return cheb_t_closed(s, w0 + w1 * z) / cheb_t_closed(s, w0); }
  double r2(double z) const {
    return cheb_u_closed(s - 1, w0 + w1 * z) / cheb_u_closed(s - 1, w0) * (1.0 + w1 * z / 2.0);
  }
};

}  // namespace oracle
