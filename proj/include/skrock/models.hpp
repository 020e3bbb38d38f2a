#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "skrock/operators.hpp"
#include "skrock/prox.hpp"
#include "skrock/types.hpp"

namespace skrock {

/// The smooth part f of -log pi.
class SmoothTerm {
 public:
  virtual ~SmoothTerm() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual double value(ConstVectorRef x) const = 0;
  /// grad f(x) into out; scratch has the model's scratch size.
  virtual void gradient(ConstVectorRef x, VectorRef out, VectorRef scratch) const = 0;
  virtual double lipschitz() const = 0;
  virtual Eigen::Index scratch_size() const { return 0; }
};

using SmoothPtr = std::shared_ptr<const SmoothTerm>;

class ZeroSmooth final : public SmoothTerm {
 public:
  explicit ZeroSmooth(Eigen::Index dim) : dim_(dim) {}
  Eigen::Index dimension() const override { return dim_; }
  double value(ConstVectorRef) const override { return 0.0; }
  void gradient(ConstVectorRef, VectorRef out, VectorRef) const override { out.setZero(); }
  double lipschitz() const override { return 0.0; }

 private:
  Eigen::Index dim_;
};

/// f(x) = sum_i (x_i - m_i)^2 / (2 sigma_i^2)
class DiagonalGaussian final : public SmoothTerm {
 public:
  DiagonalGaussian(Vector variances, Vector mean);
  Eigen::Index dimension() const override { return variances_.size(); }
  double value(ConstVectorRef x) const override;
  void gradient(ConstVectorRef x, VectorRef out, VectorRef scratch) const override;
  double lipschitz() const override { return 1.0 / variances_.minCoeff(); }

  const Vector& variances() const { return variances_; }
  const Vector& mean() const { return mean_; }

 private:
  Vector variances_;
  Vector mean_;
  Vector precision_;
};

/// f(x) = |y - A x|^2 / (2 sigma^2)
class LeastSquares final : public SmoothTerm {
 public:
  LeastSquares(OperatorPtr op, Vector y, double sigma);
  Eigen::Index dimension() const override { return op_->input_size(); }
  double value(ConstVectorRef x) const override;
  void gradient(ConstVectorRef x, VectorRef out, VectorRef scratch) const override;
  double lipschitz() const override { return op_->operator_norm_sq() / (sigma_ * sigma_); }
  Eigen::Index scratch_size() const override { return op_->output_size(); }

  const LinearOperator& op() const { return *op_; }
  const Vector& observation() const { return y_; }
  double sigma() const { return sigma_; }

 private:
  OperatorPtr op_;
  Vector y_;
  Vector aty_;
  double sigma_;
};

/// pi(x) ~ exp(-f(x) - g(x)) and its Moreau-Yosida surrogate
/// pi^lambda(x) ~ exp(-f(x) - g^lambda(x)).
///
/// Immutable apart from the gradient counter, which counts evaluations of
/// grad log pi^lambda across all threads.
class PosteriorModel {
 public:
  PosteriorModel(std::string name, SmoothPtr f, ProxPtr g, double lambda);

  const std::string& name() const { return name_; }
  Eigen::Index dimension() const { return f_->dimension(); }
  double lipschitz_f() const { return f_->lipschitz(); }
  double lambda() const { return lambda_; }
  bool has_penalty() const { return has_penalty_; }
  /// L = L_f + 1/lambda; the envelope term drops out without a penalty.
  double lipschitz_total() const;

  const SmoothTerm& smooth() const { return *f_; }
  const ProxOperator& penalty() const { return *g_; }
  const ProxPtr& penalty_ptr() const { return g_; }

  void grad_f(ConstVectorRef x, VectorRef out) const;
  /// -f(x)
  double log_density_smooth(ConstVectorRef x) const;
  double penalty_value(ConstVectorRef x) const;
  /// Unnormalised log pi^lambda(x) = -f(x) - g^lambda(x).
  double log_pi_lambda(ConstVectorRef x) const;

  /// -grad f(x) - (x - prox_g^lambda(x)) / lambda into out. scratch must hold
  /// scratch_size() entries; out must not alias x. Counts one evaluation and
  /// throws PoisonedChain if the result is not finite.
  void log_gradient(ConstVectorRef x, VectorRef out, VectorRef scratch) const;
  Eigen::Index scratch_size() const;

  std::int64_t gradient_evals() const { return counter_.load(std::memory_order_relaxed); }
  void reset_counter() const { counter_.store(0, std::memory_order_relaxed); }

  /// Image geometry of the state vector, if any.
  const ImageShape& shape() const { return shape_; }
  void set_shape(const ImageShape& shape) { shape_ = shape; }

  /// Default chain start and a label recording how it was built.
  const Vector& initial_state() const { return init_; }
  const std::string& initial_label() const { return init_label_; }
  void set_initial_state(Vector x0, std::string label);

 private:
  std::string name_;
  SmoothPtr f_;
  ProxPtr g_;
  double lambda_;
  bool has_penalty_;
  ImageShape shape_;
  Vector init_;
  std::string init_label_ = "zeros";
  mutable std::atomic<std::int64_t> counter_{0};
};

using ModelPtr = std::shared_ptr<PosteriorModel>;

/// Returns -grad f(x) - (x - prox(x)) / lambda and counts one evaluation.
Vector regularised_log_gradient(const PosteriorModel& model, ConstVectorRef x);

/// lambda = 1/L_f, the usual choice when L_f > 0.
double default_lambda(double lipschitz_f);

/// Order in which the unmixing prior's proxes are composed.
enum class PenaltyTerm { tv, l1, nonnegative };

ModelPtr model_gaussian(const Vector& variances, const Vector& mean = Vector());
ModelPtr model_laplace_1d(double scale, double lambda);
ModelPtr model_uniform_1d(double lambda);

ModelPtr model_deconvolution(const Vector& y, const ImageShape& shape, std::shared_ptr<const BlurOperator> blur,
                             double sigma, double beta, double lambda, TvSolverOptions tv = {});

/// y holds one band after another, each of shape.pixels() entries; the state
/// holds shape.channels abundance maps.
ModelPtr model_unmixing(const Vector& y, const ImageShape& shape, std::shared_ptr<const MixingOperator> mixing,
                        double sigma, double alpha, double beta, double lambda,
                        std::vector<PenaltyTerm> order = {PenaltyTerm::tv, PenaltyTerm::l1,
                                                          PenaltyTerm::nonnegative},
                        TvSolverOptions tv = {});

ModelPtr model_tomography(const Vector& y, const ImageShape& shape, std::shared_ptr<const FourierMaskOperator> mask,
                          double sigma, double beta, double lambda, TvSolverOptions tv = {});

}  // namespace skrock
