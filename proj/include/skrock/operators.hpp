#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "skrock/types.hpp"

namespace skrock {

/// A real linear map R^n -> R^m with its adjoint and a bound on |A|^2.
/// Implementations are immutable after construction and reentrant.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index input_size() const = 0;
  virtual Eigen::Index output_size() const = 0;
  virtual void apply(ConstVectorRef x, VectorRef y) const = 0;
  virtual void apply_adjoint(ConstVectorRef y, VectorRef x) const = 0;
  /// Squared spectral norm, exact or an upper bound.
  virtual double operator_norm_sq() const = 0;

  /// A^T A x. The default composes apply and apply_adjoint.
  virtual void apply_normal(ConstVectorRef x, VectorRef out) const;

  Vector apply(ConstVectorRef x) const;
  Vector apply_adjoint(ConstVectorRef y) const;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class Fft2d;

/// Circular convolution with an odd-sized kernel centred on its middle entry.
class BlurOperator final : public LinearOperator {
 public:
  BlurOperator(const Matrix& kernel, Eigen::Index rows, Eigen::Index cols);
  ~BlurOperator() override;

  Eigen::Index input_size() const override { return rows_ * cols_; }
  Eigen::Index output_size() const override { return rows_ * cols_; }
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;
  void apply_normal(ConstVectorRef x, VectorRef out) const override;
  double operator_norm_sq() const override { return norm_sq_; }

  const Matrix& kernel() const { return kernel_; }

 private:
  void filter(ConstVectorRef x, VectorRef y, int mode) const;

  Matrix kernel_;
  Eigen::Index rows_;
  Eigen::Index cols_;
  std::unique_ptr<Fft2d> fft_;
  std::vector<std::complex<double>> transfer_;
  double norm_sq_ = 0.0;
};

enum class MaskPattern { radial, uniform };

/// Unitary 2-D DFT followed by selection of a subset of coefficients. The
/// complex observations are returned stacked: real parts, then imaginary parts.
class FourierMaskOperator final : public LinearOperator {
 public:
  FourierMaskOperator(Eigen::Index rows, Eigen::Index cols, std::vector<Eigen::Index> selected);
  ~FourierMaskOperator() override;

  Eigen::Index input_size() const override { return rows_ * cols_; }
  Eigen::Index output_size() const override { return 2 * static_cast<Eigen::Index>(selected_.size()); }
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;
  double operator_norm_sq() const override { return 1.0; }

  /// Column-major linear indices of the retained coefficients, ascending.
  const std::vector<Eigen::Index>& selected() const { return selected_; }

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  std::vector<Eigen::Index> selected_;
  std::unique_ptr<Fft2d> fft_;
};

/// Left multiplication of a (k endmembers) x (n pixels) abundance stack by an
/// m x k endmember matrix. Abundances are stored one endmember map after
/// another; observations one band after another.
class MixingOperator final : public LinearOperator {
 public:
  MixingOperator(Matrix endmembers, Eigen::Index n_pixels);

  Eigen::Index input_size() const override { return endmembers_.cols() * n_pixels_; }
  Eigen::Index output_size() const override { return endmembers_.rows() * n_pixels_; }
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;
  double operator_norm_sq() const override { return norm_sq_; }

  const Matrix& endmembers() const { return endmembers_; }

 private:
  Matrix endmembers_;
  Eigen::Index n_pixels_;
  double norm_sq_;
};

/// Largest eigenvalue of A^T A by power iteration, stopping at the given
/// relative change.
double spectral_norm_sq(const Matrix& a, double rel_tol = 1e-8, int max_iter = 100000);

std::shared_ptr<BlurOperator> make_blur(const Matrix& kernel, Eigen::Index rows, Eigen::Index cols);

/// k x k kernel with every entry 1/k^2.
Matrix uniform_kernel(Eigen::Index size);

/// Keeps ceil(keep_fraction * rows * cols) coefficients, DC always included.
std::shared_ptr<FourierMaskOperator> make_fourier_mask(Eigen::Index rows, Eigen::Index cols,
                                                       double keep_fraction, std::uint64_t seed,
                                                       MaskPattern pattern = MaskPattern::radial);

std::shared_ptr<MixingOperator> make_mixing(const Matrix& endmembers, Eigen::Index n_pixels);

}  // namespace skrock
