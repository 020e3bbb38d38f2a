#pragma once

#include <memory>
#include <string>
#include <vector>

#include "skrock/types.hpp"

namespace skrock {

/// A proper convex lower-semicontinuous penalty g together with its proximal
/// map prox_g^lambda(x) = argmin_u g(u) + |x - u|^2 / (2 lambda).
class ProxOperator {
 public:
  virtual ~ProxOperator() = default;

  /// Writes prox_g^lambda(x) into out. out may alias x.
  virtual void evaluate(ConstVectorRef x, double lambda, VectorRef out) const = 0;

  /// g(x); +infinity outside the domain of an indicator.
  virtual double penalty_value(ConstVectorRef x) const = 0;

  virtual std::string name() const = 0;

  Vector evaluate(ConstVectorRef x, double lambda) const;
};

using ProxPtr = std::shared_ptr<const ProxOperator>;

struct TvSolverOptions {
  double tol = 1e-4;  // stop once the largest dual update falls below tol
  int max_iter = 100;
};

// Elementary closed forms.

Vector soft_threshold(ConstVectorRef x, double tau);
Vector project_box(ConstVectorRef x, double lo, double hi);

/// Isotropic total variation with forward differences and replicate boundary.
double tv_value(const Matrix& image);
double tv_value(ConstVectorRef stack, const ImageShape& shape);

/// Chambolle's dual projection for argmin_u tau*TV(u) + |u - image|^2 / 2.
/// Returns the number of dual iterations performed.
int prox_tv(ConstVectorRef stack, const ImageShape& shape, double tau, const TvSolverOptions& opts,
            VectorRef out);
Matrix prox_tv(const Matrix& image, double tau, double tol = 1e-4, int max_iter = 100);

// Penalties.

class ZeroPenalty final : public ProxOperator {
 public:
  using ProxOperator::evaluate;
  void evaluate(ConstVectorRef x, double lambda, VectorRef out) const override;
  double penalty_value(ConstVectorRef x) const override;
  std::string name() const override { return "zero"; }
};

/// weight * |x|_1
class L1Penalty final : public ProxOperator {
 public:
  explicit L1Penalty(double weight);
  using ProxOperator::evaluate;
  void evaluate(ConstVectorRef x, double lambda, VectorRef out) const override;
  double penalty_value(ConstVectorRef x) const override;
  std::string name() const override { return "l1"; }
  double weight() const { return weight_; }

 private:
  double weight_;
};

/// Indicator of the box [lo, hi]^d; hi may be +infinity.
class BoxIndicator final : public ProxOperator {
 public:
  BoxIndicator(double lo, double hi);
  using ProxOperator::evaluate;
  void evaluate(ConstVectorRef x, double lambda, VectorRef out) const override;
  double penalty_value(ConstVectorRef x) const override;
  std::string name() const override { return "box"; }

 private:
  double lo_;
  double hi_;
};

/// weight * sum over channels of TV(channel).
class TotalVariation final : public ProxOperator {
 public:
  TotalVariation(double weight, ImageShape shape, TvSolverOptions opts = {});
  using ProxOperator::evaluate;
  void evaluate(ConstVectorRef x, double lambda, VectorRef out) const override;
  double penalty_value(ConstVectorRef x) const override;
  std::string name() const override { return "tv"; }
  const ImageShape& shape() const { return shape_; }

 private:
  double weight_;
  ImageShape shape_;
  TvSolverOptions opts_;
};

/// Sum of penalties; its prox is approximated by applying the member proxes
/// one after another in the stored order.
class CompositePenalty final : public ProxOperator {
 public:
  explicit CompositePenalty(std::vector<ProxPtr> terms);
  using ProxOperator::evaluate;
  void evaluate(ConstVectorRef x, double lambda, VectorRef out) const override;
  double penalty_value(ConstVectorRef x) const override;
  std::string name() const override;

 private:
  std::vector<ProxPtr> terms_;
};

/// g^lambda(x) = min_u g(u) + |x - u|^2 / (2 lambda).
class MoreauEnvelope {
 public:
  MoreauEnvelope(ProxPtr base, double lambda);

  double value(ConstVectorRef x) const;
  Vector gradient(ConstVectorRef x) const;
  /// gradient into out, using out as scratch for the prox.
  void gradient(ConstVectorRef x, VectorRef out) const;

  const ProxOperator& base() const { return *base_; }
  double lambda() const { return lambda_; }

 private:
  ProxPtr base_;
  double lambda_;
};

/// (x - prox_g^lambda(x)) / lambda
Vector my_envelope_gradient(const MoreauEnvelope& envelope, ConstVectorRef x);

}  // namespace skrock
