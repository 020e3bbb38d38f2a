#include "fft.hpp"

#include <mutex>

#include <fftw3.h>

namespace skrock {

namespace {

// FFTW's planner is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

}  // namespace

Fft2d::Fft2d(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {
  std::vector<std::complex<double>> scratch(static_cast<std::size_t>(rows * cols));
  std::lock_guard<std::mutex> lock(planner_mutex());
  // Column-major rows x cols is row-major cols x rows.
  forward_plan_ = fftw_plan_dft_2d(static_cast<int>(cols), static_cast<int>(rows), as_fftw(scratch.data()),
                                   as_fftw(scratch.data()), FFTW_FORWARD, kFlags);
  backward_plan_ = fftw_plan_dft_2d(static_cast<int>(cols), static_cast<int>(rows), as_fftw(scratch.data()),
                                    as_fftw(scratch.data()), FFTW_BACKWARD, kFlags);
}

Fft2d::~Fft2d() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void Fft2d::forward(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(data), as_fftw(data));
}

void Fft2d::backward(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), as_fftw(data), as_fftw(data));
}

Fft1d::Fft1d(Eigen::Index n) : n_(n) {
  std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n));
  std::lock_guard<std::mutex> lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                   FFTW_FORWARD, kFlags);
  backward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                    FFTW_BACKWARD, kFlags);
}

Fft1d::~Fft1d() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void Fft1d::forward(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(data), as_fftw(data));
}

void Fft1d::backward(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), as_fftw(data), as_fftw(data));
}

}  // namespace skrock
