#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace skrock {

// Thin RAII wrapper over FFTW plans for an unnormalised in-place complex 2-D
// DFT on column-major rows x cols data. Execution is reentrant.
class Fft2d {
 public:
  Fft2d(Eigen::Index rows, Eigen::Index cols);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  void forward(std::complex<double>* data) const;
  void backward(std::complex<double>* data) const;

  Eigen::Index size() const { return rows_ * cols_; }

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

// Unnormalised in-place complex 1-D DFT of length n.
class Fft1d {
 public:
  explicit Fft1d(Eigen::Index n);
  ~Fft1d();
  Fft1d(const Fft1d&) = delete;
  Fft1d& operator=(const Fft1d&) = delete;

  void forward(std::complex<double>* data) const;
  void backward(std::complex<double>* data) const;

 private:
  Eigen::Index n_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

}  // namespace skrock
