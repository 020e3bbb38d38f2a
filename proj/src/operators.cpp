#include "skrock/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fft.hpp"
#include "skrock/error.hpp"

namespace skrock {

using cplx = std::complex<double>;

void LinearOperator::apply_normal(ConstVectorRef x, VectorRef out) const {
  Vector tmp(output_size());
  apply(x, tmp);
  apply_adjoint(tmp, out);
}

Vector LinearOperator::apply(ConstVectorRef x) const {
  Vector y(output_size());
  apply(x, y);
  return y;
}

Vector LinearOperator::apply_adjoint(ConstVectorRef y) const {
  Vector x(input_size());
  apply_adjoint(y, x);
  return x;
}

namespace {

void check_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(want) + " entries, got " +
                          std::to_string(got));
  }
}

}  // namespace

// BlurOperator

BlurOperator::BlurOperator(const Matrix& kernel, Eigen::Index rows, Eigen::Index cols)
    : kernel_(kernel), rows_(rows), cols_(cols) {
  if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0) {
    throw InvalidArgument("blur kernel dimensions must be odd");
  }
  if (kernel.rows() > rows || kernel.cols() > cols) {
    throw InvalidArgument("blur kernel larger than the image");
  }
  if (!kernel.allFinite()) throw InvalidArgument("blur kernel has non-finite entries");

  fft_ = std::make_unique<Fft2d>(rows, cols);
  transfer_.assign(static_cast<std::size_t>(rows * cols), cplx(0.0, 0.0));
  const Eigen::Index cr = kernel.rows() / 2;
  const Eigen::Index cc = kernel.cols() / 2;
  for (Eigen::Index b = 0; b < kernel.cols(); ++b) {
    for (Eigen::Index a = 0; a < kernel.rows(); ++a) {
      const Eigen::Index i = ((a - cr) % rows + rows) % rows;
      const Eigen::Index j = ((b - cc) % cols + cols) % cols;
      transfer_[i + j * rows] += kernel(a, b);
    }
  }
  fft_->forward(transfer_.data());
  for (const auto& t : transfer_) norm_sq_ = std::max(norm_sq_, std::norm(t));
}

BlurOperator::~BlurOperator() = default;

// mode 0: H, 1: H^T, 2: H^T H
void BlurOperator::filter(ConstVectorRef x, VectorRef y, int mode) const {
  const Eigen::Index n = rows_ * cols_;
  check_size(x.size(), n, "blur input");
  check_size(y.size(), n, "blur output");
  std::vector<cplx> buf(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) buf[i] = cplx(x[i], 0.0);
  fft_->forward(buf.data());
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (mode) {
      case 0: buf[i] *= transfer_[i]; break;
      case 1: buf[i] *= std::conj(transfer_[i]); break;
      default: buf[i] *= std::norm(transfer_[i]); break;
    }
  }
  fft_->backward(buf.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = buf[i].real() * scale;
}

void BlurOperator::apply(ConstVectorRef x, VectorRef y) const { filter(x, y, 0); }
void BlurOperator::apply_adjoint(ConstVectorRef y, VectorRef x) const { filter(y, x, 1); }
void BlurOperator::apply_normal(ConstVectorRef x, VectorRef out) const { filter(x, out, 2); }

Matrix uniform_kernel(Eigen::Index size) {
  if (size < 1) throw InvalidArgument("kernel size must be positive");
  return Matrix::Constant(size, size, 1.0 / static_cast<double>(size * size));
}

std::shared_ptr<BlurOperator> make_blur(const Matrix& kernel, Eigen::Index rows, Eigen::Index cols) {
  return std::make_shared<BlurOperator>(kernel, rows, cols);
}

// FourierMaskOperator

FourierMaskOperator::FourierMaskOperator(Eigen::Index rows, Eigen::Index cols,
                                         std::vector<Eigen::Index> selected)
    : rows_(rows), cols_(cols), selected_(std::move(selected)) {
  if (rows < 1 || cols < 1) throw InvalidArgument("Fourier mask needs a non-empty image");
  std::sort(selected_.begin(), selected_.end());
  selected_.erase(std::unique(selected_.begin(), selected_.end()), selected_.end());
  if (selected_.empty()) throw InvalidArgument("Fourier mask keeps no coefficients");
  if (selected_.front() < 0 || selected_.back() >= rows * cols) {
    throw InvalidArgument("Fourier mask index out of range");
  }
  fft_ = std::make_unique<Fft2d>(rows, cols);
}

FourierMaskOperator::~FourierMaskOperator() = default;

void FourierMaskOperator::apply(ConstVectorRef x, VectorRef y) const {
  const Eigen::Index n = rows_ * cols_;
  const auto p = static_cast<Eigen::Index>(selected_.size());
  check_size(x.size(), n, "Fourier mask input");
  check_size(y.size(), 2 * p, "Fourier mask output");
  std::vector<cplx> buf(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) buf[i] = cplx(x[i], 0.0);
  fft_->forward(buf.data());
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index k = 0; k < p; ++k) {
    const cplx c = buf[selected_[k]] * scale;
    y[k] = c.real();
    y[p + k] = c.imag();
  }
}

void FourierMaskOperator::apply_adjoint(ConstVectorRef y, VectorRef x) const {
  const Eigen::Index n = rows_ * cols_;
  const auto p = static_cast<Eigen::Index>(selected_.size());
  check_size(y.size(), 2 * p, "Fourier mask adjoint input");
  check_size(x.size(), n, "Fourier mask adjoint output");
  std::vector<cplx> buf(static_cast<std::size_t>(n), cplx(0.0, 0.0));
  for (Eigen::Index k = 0; k < p; ++k) buf[selected_[k]] = cplx(y[k], y[p + k]);
  fft_->backward(buf.data());
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) x[i] = buf[i].real() * scale;
}

namespace {

std::vector<Eigen::Index> radial_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index target,
                                      std::mt19937_64& rng) {
  const Eigen::Index n = rows * cols;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(target));
  auto take = [&](Eigen::Index idx) {
    if (!taken[idx] && static_cast<Eigen::Index>(out.size()) < target) {
      taken[idx] = 1;
      out.push_back(idx);
    }
  };
  take(0);  // DC

  // Lines through the origin of the centred spectrum at golden-angle
  // increments from a seeded start, each filled from the centre outwards.
  std::uniform_real_distribution<double> unif(0.0, std::numbers::pi);
  const double theta0 = unif(rng);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double radius = 0.5 * static_cast<double>(std::max(rows, cols)) + 1.0;
  const Eigen::Index max_lines = 16 * std::max(rows, cols);
  for (Eigen::Index line = 0; line < max_lines && static_cast<Eigen::Index>(out.size()) < target; ++line) {
    const double theta = theta0 + golden * static_cast<double>(line);
    const double cu = std::cos(theta);
    const double cv = std::sin(theta);
    for (double r = 0.5; r <= radius && static_cast<Eigen::Index>(out.size()) < target; r += 0.5) {
      for (const double sgn : {1.0, -1.0}) {
        const auto u = static_cast<Eigen::Index>(std::lround(sgn * r * cu));
        const auto v = static_cast<Eigen::Index>(std::lround(sgn * r * cv));
        if (u < -rows / 2 || u >= rows - rows / 2 || v < -cols / 2 || v >= cols - cols / 2) continue;
        take(((u % rows) + rows) % rows + (((v % cols) + cols) % cols) * rows);
      }
    }
  }
  if (static_cast<Eigen::Index>(out.size()) < target) {
    // Remaining corners the rasterised lines never reached.
    std::vector<Eigen::Index> rest;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!taken[i]) rest.push_back(i);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    for (Eigen::Index idx : rest) take(idx);
  }
  return out;
}

std::vector<Eigen::Index> uniform_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index target,
                                       std::mt19937_64& rng) {
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 1; i < rows * cols; ++i) rest.push_back(i);
  std::shuffle(rest.begin(), rest.end(), rng);
  std::vector<Eigen::Index> out{0};
  for (Eigen::Index k = 0; k + 1 < target; ++k) out.push_back(rest[k]);
  return out;
}

}  // namespace

std::shared_ptr<FourierMaskOperator> make_fourier_mask(Eigen::Index rows, Eigen::Index cols,
                                                       double keep_fraction, std::uint64_t seed,
                                                       MaskPattern pattern) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw InvalidArgument("keep_fraction must lie in (0, 1]");
  }
  if (rows < 1 || cols < 1) throw InvalidArgument("Fourier mask needs a non-empty image");
  const Eigen::Index n = rows * cols;
  const auto target = std::min<Eigen::Index>(
      n, static_cast<Eigen::Index>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9)));
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> selected;
  if (target == n) {
    selected.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) selected[i] = i;
  } else if (pattern == MaskPattern::radial) {
    selected = radial_mask(rows, cols, target, rng);
  } else {
    selected = uniform_mask(rows, cols, target, rng);
  }
  return std::make_shared<FourierMaskOperator>(rows, cols, std::move(selected));
}

// MixingOperator

double spectral_norm_sq(const Matrix& a, double rel_tol, int max_iter) {
  if (a.size() == 0) throw InvalidArgument("spectral norm of an empty matrix");
  const Matrix gram = a.transpose() * a;
  // Deterministic start with every component non-zero.
  Vector v = Vector::LinSpaced(gram.rows(), 1.0, 2.0).normalized();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector w = gram * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - estimate) <= rel_tol * std::abs(next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // Rayleigh quotient at the final iterate.
  return v.dot(gram * v);
}

MixingOperator::MixingOperator(Matrix endmembers, Eigen::Index n_pixels)
    : endmembers_(std::move(endmembers)), n_pixels_(n_pixels) {
  if (endmembers_.rows() < 1 || endmembers_.cols() < 1) {
    throw InvalidArgument("endmember matrix must be non-empty");
  }
  if (n_pixels < 1) throw InvalidArgument("mixing operator needs at least one pixel");
  norm_sq_ = spectral_norm_sq(endmembers_);
}

void MixingOperator::apply(ConstVectorRef x, VectorRef y) const {
  check_size(x.size(), input_size(), "mixing input");
  check_size(y.size(), output_size(), "mixing output");
  Eigen::Map<const Matrix> abund(x.data(), n_pixels_, endmembers_.cols());
  Eigen::Map<Matrix> obs(y.data(), n_pixels_, endmembers_.rows());
  obs.noalias() = abund * endmembers_.transpose();
}

void MixingOperator::apply_adjoint(ConstVectorRef y, VectorRef x) const {
  check_size(y.size(), output_size(), "mixing adjoint input");
  check_size(x.size(), input_size(), "mixing adjoint output");
  Eigen::Map<const Matrix> obs(y.data(), n_pixels_, endmembers_.rows());
  Eigen::Map<Matrix> abund(x.data(), n_pixels_, endmembers_.cols());
  abund.noalias() = obs * endmembers_;
}

std::shared_ptr<MixingOperator> make_mixing(const Matrix& endmembers, Eigen::Index n_pixels) {
  return std::make_shared<MixingOperator>(endmembers, n_pixels);
}

}  // namespace skrock
