#include "skrock/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skrock/error.hpp"

namespace skrock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Divergence of the dual field (px, py), the negative adjoint of the forward
// difference gradient with replicate boundary.
inline double divergence_at(const double* px, const double* py, Eigen::Index i, Eigen::Index j,
                            Eigen::Index rows, Eigen::Index cols) {
  const Eigen::Index idx = i + j * rows;
  double d = 0.0;
  if (i < rows - 1) d += px[idx];
  if (i > 0) d -= px[idx - 1];
  if (j < cols - 1) d += py[idx];
  if (j > 0) d -= py[idx - rows];
  return d;
}

double channel_tv(const double* u, Eigen::Index rows, Eigen::Index cols) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Index idx = i + j * rows;
      const double gx = i < rows - 1 ? u[idx + 1] - u[idx] : 0.0;
      const double gy = j < cols - 1 ? u[idx + rows] - u[idx] : 0.0;
      total += std::sqrt(gx * gx + gy * gy);
    }
  }
  return total;
}

int channel_prox_tv(const double* g, Eigen::Index rows, Eigen::Index cols, double tau,
                    const TvSolverOptions& opts, double* out) {
  const Eigen::Index n = rows * cols;
  if (tau == 0.0) {
    std::copy(g, g + n, out);
    return 0;
  }
  constexpr double step = 0.125;
  const double inv_tau = 1.0 / tau;
  std::vector<double> px(n, 0.0), py(n, 0.0), w(n);

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::Index idx = i + j * rows;
        w[idx] = divergence_at(px.data(), py.data(), i, j, rows, cols) - g[idx] * inv_tau;
      }
    }
    double max_update = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::Index idx = i + j * rows;
        const double gx = i < rows - 1 ? w[idx + 1] - w[idx] : 0.0;
        const double gy = j < cols - 1 ? w[idx + rows] - w[idx] : 0.0;
        const double denom = 1.0 + step * std::sqrt(gx * gx + gy * gy);
        const double nx = (px[idx] + step * gx) / denom;
        const double ny = (py[idx] + step * gy) / denom;
        max_update = std::max({max_update, std::abs(nx - px[idx]), std::abs(ny - py[idx])});
        px[idx] = nx;
        py[idx] = ny;
      }
    }
    if (max_update < opts.tol) {
      ++iter;
      break;
    }
  }

  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Index idx = i + j * rows;
      out[idx] = g[idx] - tau * divergence_at(px.data(), py.data(), i, j, rows, cols);
    }
  }
  return iter;
}

void check_shape(ConstVectorRef x, const ImageShape& shape) {
  if (x.size() != shape.size()) {
    throw InvalidArgument("image stack has " + std::to_string(x.size()) + " entries, shape expects " +
                          std::to_string(shape.size()));
  }
}

}  // namespace

Vector ProxOperator::evaluate(ConstVectorRef x, double lambda) const {
  Vector out(x.size());
  evaluate(x, lambda, out);
  return out;
}

Vector soft_threshold(ConstVectorRef x, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("soft threshold requires tau >= 0");
  return x.unaryExpr([tau](double v) { return std::copysign(std::max(std::abs(v) - tau, 0.0), v); });
}

Vector project_box(ConstVectorRef x, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("box projection requires lo <= hi");
  return x.cwiseMax(lo).cwiseMin(hi);
}

double tv_value(const Matrix& image) { return channel_tv(image.data(), image.rows(), image.cols()); }

double tv_value(ConstVectorRef stack, const ImageShape& shape) {
  check_shape(stack, shape);
  double total = 0.0;
  for (Eigen::Index c = 0; c < shape.channels; ++c) {
    total += channel_tv(stack.data() + c * shape.pixels(), shape.rows, shape.cols);
  }
  return total;
}

int prox_tv(ConstVectorRef stack, const ImageShape& shape, double tau, const TvSolverOptions& opts,
            VectorRef out) {
  check_shape(stack, shape);
  if (!(tau >= 0.0)) throw InvalidArgument("TV prox requires tau >= 0");
  if (!stack.allFinite()) throw InvalidArgument("TV prox received a non-finite image");
  // Per-channel solves read from a copy so that out may alias stack.
  const Vector input = stack;
  int worst = 0;
  for (Eigen::Index c = 0; c < shape.channels; ++c) {
    const Eigen::Index offset = c * shape.pixels();
    worst = std::max(worst, channel_prox_tv(input.data() + offset, shape.rows, shape.cols, tau, opts,
                                            out.data() + offset));
  }
  return worst;
}

Matrix prox_tv(const Matrix& image, double tau, double tol, int max_iter) {
  Matrix out(image.rows(), image.cols());
  const ImageShape shape{image.rows(), image.cols(), 1};
  Eigen::Map<const Vector> in(image.data(), image.size());
  Eigen::Map<Vector> res(out.data(), out.size());
  prox_tv(in, shape, tau, TvSolverOptions{tol, max_iter}, res);
  return out;
}

// ZeroPenalty

void ZeroPenalty::evaluate(ConstVectorRef x, double, VectorRef out) const { out = x; }

double ZeroPenalty::penalty_value(ConstVectorRef) const { return 0.0; }

// L1Penalty

L1Penalty::L1Penalty(double weight) : weight_(weight) {
  if (!(weight >= 0.0)) throw InvalidArgument("l1 weight must be non-negative");
}

void L1Penalty::evaluate(ConstVectorRef x, double lambda, VectorRef out) const {
  const double tau = lambda * weight_;
  out = x.unaryExpr([tau](double v) { return std::copysign(std::max(std::abs(v) - tau, 0.0), v); });
}

double L1Penalty::penalty_value(ConstVectorRef x) const { return weight_ * x.lpNorm<1>(); }

// BoxIndicator

BoxIndicator::BoxIndicator(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(lo <= hi)) throw InvalidArgument("box indicator requires lo <= hi");
}

void BoxIndicator::evaluate(ConstVectorRef x, double, VectorRef out) const {
  out = x.cwiseMax(lo_).cwiseMin(hi_);
}

double BoxIndicator::penalty_value(ConstVectorRef x) const {
  if (x.size() == 0) return 0.0;
  return (x.minCoeff() >= lo_ && x.maxCoeff() <= hi_) ? 0.0 : kInf;
}

// TotalVariation

TotalVariation::TotalVariation(double weight, ImageShape shape, TvSolverOptions opts)
    : weight_(weight), shape_(shape), opts_(opts) {
  if (!(weight >= 0.0)) throw InvalidArgument("TV weight must be non-negative");
  if (shape.rows < 1 || shape.cols < 1 || shape.channels < 1) {
    throw InvalidArgument("TV penalty needs a non-empty image shape");
  }
}

void TotalVariation::evaluate(ConstVectorRef x, double lambda, VectorRef out) const {
  prox_tv(x, shape_, lambda * weight_, opts_, out);
}

double TotalVariation::penalty_value(ConstVectorRef x) const { return weight_ * tv_value(x, shape_); }

// CompositePenalty

CompositePenalty::CompositePenalty(std::vector<ProxPtr> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw InvalidArgument("composite penalty needs at least one term");
}

void CompositePenalty::evaluate(ConstVectorRef x, double lambda, VectorRef out) const {
  out = x;
  for (const auto& term : terms_) term->evaluate(out, lambda, out);
}

double CompositePenalty::penalty_value(ConstVectorRef x) const {
  double total = 0.0;
  for (const auto& term : terms_) total += term->penalty_value(x);
  return total;
}

std::string CompositePenalty::name() const {
  std::string n;
  for (const auto& term : terms_) n += (n.empty() ? "" : "+") + term->name();
  return n;
}

// MoreauEnvelope

MoreauEnvelope::MoreauEnvelope(ProxPtr base, double lambda) : base_(std::move(base)), lambda_(lambda) {
  if (!base_) throw InvalidArgument("Moreau envelope needs a penalty");
  if (!(lambda > 0.0)) throw InvalidArgument("Moreau envelope needs lambda > 0");
}

double MoreauEnvelope::value(ConstVectorRef x) const {
  const Vector p = base_->evaluate(x, lambda_);
  return base_->penalty_value(p) + (x - p).squaredNorm() / (2.0 * lambda_);
}

void MoreauEnvelope::gradient(ConstVectorRef x, VectorRef out) const {
  if (out.data() == x.data()) {
    const Vector p = base_->evaluate(x, lambda_);
    out = (out - p) / lambda_;
    return;
  }
  base_->evaluate(x, lambda_, out);
  out = (x - out) / lambda_;
}

Vector MoreauEnvelope::gradient(ConstVectorRef x) const {
  Vector out(x.size());
  gradient(x, out);
  return out;
}

Vector my_envelope_gradient(const MoreauEnvelope& envelope, ConstVectorRef x) { return envelope.gradient(x); }

}  // namespace skrock
