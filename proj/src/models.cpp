#include "skrock/models.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "skrock/error.hpp"

namespace skrock {

namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(field) + " must be positive and finite");
}

void require_shape(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + " has " + std::to_string(got) + " entries, expected " +
                          std::to_string(want));
  }
}

}  // namespace

// DiagonalGaussian

DiagonalGaussian::DiagonalGaussian(Vector variances, Vector mean)
    : variances_(std::move(variances)), mean_(std::move(mean)) {
  if (variances_.size() == 0) throw InvalidArgument("Gaussian target needs at least one variance");
  if (!variances_.allFinite() || variances_.minCoeff() <= 0.0) {
    throw InvalidArgument("Gaussian variances must be positive and finite");
  }
  if (mean_.size() == 0) mean_ = Vector::Zero(variances_.size());
  require_shape(mean_.size(), variances_.size(), "Gaussian mean");
  precision_ = variances_.cwiseInverse();
}

double DiagonalGaussian::value(ConstVectorRef x) const {
  return 0.5 * ((x - mean_).array().square() * precision_.array()).sum();
}

void DiagonalGaussian::gradient(ConstVectorRef x, VectorRef out, VectorRef) const {
  out = (x - mean_).cwiseProduct(precision_);
}

// LeastSquares

LeastSquares::LeastSquares(OperatorPtr op, Vector y, double sigma) : op_(std::move(op)), y_(std::move(y)), sigma_(sigma) {
  if (!op_) throw InvalidArgument("least-squares term needs an operator");
  require_positive(sigma, "sigma");
  require_shape(y_.size(), op_->output_size(), "observation");
  if (!y_.allFinite()) throw InvalidArgument("observation has non-finite entries");
  aty_ = op_->apply_adjoint(y_);
}

double LeastSquares::value(ConstVectorRef x) const {
  return (y_ - op_->apply(x)).squaredNorm() / (2.0 * sigma_ * sigma_);
}

void LeastSquares::gradient(ConstVectorRef x, VectorRef out, VectorRef) const {
  op_->apply_normal(x, out);
  out = (out - aty_) / (sigma_ * sigma_);
}

// PosteriorModel

PosteriorModel::PosteriorModel(std::string name, SmoothPtr f, ProxPtr g, double lambda)
    : name_(std::move(name)), f_(std::move(f)), g_(std::move(g)), lambda_(lambda) {
  if (!f_) throw InvalidArgument("posterior model needs a smooth term");
  if (!g_) g_ = std::make_shared<ZeroPenalty>();
  has_penalty_ = dynamic_cast<const ZeroPenalty*>(g_.get()) == nullptr;
  if (has_penalty_) require_positive(lambda, "lambda");
  else if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  init_ = Vector::Zero(f_->dimension());
}

double PosteriorModel::lipschitz_total() const {
  return f_->lipschitz() + (has_penalty_ ? 1.0 / lambda_ : 0.0);
}

void PosteriorModel::grad_f(ConstVectorRef x, VectorRef out) const {
  Vector scratch(f_->scratch_size());
  f_->gradient(x, out, scratch);
}

double PosteriorModel::log_density_smooth(ConstVectorRef x) const { return -f_->value(x); }

double PosteriorModel::penalty_value(ConstVectorRef x) const { return g_->penalty_value(x); }

double PosteriorModel::log_pi_lambda(ConstVectorRef x) const {
  double envelope = 0.0;
  if (has_penalty_) envelope = MoreauEnvelope(g_, lambda_).value(x);
  return -f_->value(x) - envelope;
}

Eigen::Index PosteriorModel::scratch_size() const { return dimension() + f_->scratch_size(); }

void PosteriorModel::log_gradient(ConstVectorRef x, VectorRef out, VectorRef scratch) const {
  const Eigen::Index d = dimension();
  require_shape(x.size(), d, "state");
  counter_.fetch_add(1, std::memory_order_relaxed);

  auto gf = scratch.head(d);
  auto inner = scratch.tail(scratch.size() - d);
  f_->gradient(x, gf, inner);
  if (has_penalty_) {
    g_->evaluate(x, lambda_, out);
    out = (out - x) / lambda_ - gf;
  } else {
    out = -gf;
  }
  if (!out.allFinite()) throw PoisonedChain("non-finite gradient of log pi^lambda");
}

void PosteriorModel::set_initial_state(Vector x0, std::string label) {
  require_shape(x0.size(), dimension(), "initial state");
  init_ = std::move(x0);
  init_label_ = std::move(label);
}

Vector regularised_log_gradient(const PosteriorModel& model, ConstVectorRef x) {
  Vector out(model.dimension());
  Vector scratch(model.scratch_size());
  model.log_gradient(x, out, scratch);
  return out;
}

double default_lambda(double lipschitz_f) {
  require_positive(lipschitz_f, "L_f");
  return 1.0 / lipschitz_f;
}

// Factories

ModelPtr model_gaussian(const Vector& variances, const Vector& mean) {
  auto f = std::make_shared<DiagonalGaussian>(variances, mean);
  return std::make_shared<PosteriorModel>("gaussian", f, nullptr, std::numeric_limits<double>::infinity());
}

ModelPtr model_laplace_1d(double scale, double lambda) {
  require_positive(scale, "scale");
  require_positive(lambda, "lambda");
  return std::make_shared<PosteriorModel>("laplace1d", std::make_shared<ZeroSmooth>(1),
                                          std::make_shared<L1Penalty>(1.0 / scale), lambda);
}

ModelPtr model_uniform_1d(double lambda) {
  require_positive(lambda, "lambda");
  return std::make_shared<PosteriorModel>("uniform1d", std::make_shared<ZeroSmooth>(1),
                                          std::make_shared<BoxIndicator>(-1.0, 1.0), lambda);
}

ModelPtr model_deconvolution(const Vector& y, const ImageShape& shape, std::shared_ptr<const BlurOperator> blur,
                             double sigma, double beta, double lambda, TvSolverOptions tv) {
  if (!blur) throw InvalidArgument("deconvolution needs a blur operator");
  require_positive(beta, "beta");
  if (shape.channels != 1) throw InvalidArgument("deconvolution expects a single-channel image");
  require_shape(blur->input_size(), shape.size(), "blur operator domain");
  require_shape(y.size(), shape.size(), "observation");
  auto f = std::make_shared<LeastSquares>(blur, y, sigma);
  auto model = std::make_shared<PosteriorModel>("deconvolution", f, std::make_shared<TotalVariation>(beta, shape, tv),
                                                lambda);
  model->set_shape(shape);
  model->set_initial_state(blur->apply_adjoint(y), "adjoint");
  return model;
}

ModelPtr model_unmixing(const Vector& y, const ImageShape& shape, std::shared_ptr<const MixingOperator> mixing,
                        double sigma, double alpha, double beta, double lambda, std::vector<PenaltyTerm> order,
                        TvSolverOptions tv) {
  if (!mixing) throw InvalidArgument("unmixing needs a mixing operator");
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  require_shape(shape.channels, mixing->endmembers().cols(), "endmember count");
  require_shape(mixing->input_size(), shape.size(), "mixing operator domain");
  require_shape(y.size(), mixing->output_size(), "observation");
  if (order.empty()) throw InvalidArgument("unmixing prior order is empty");

  std::vector<ProxPtr> terms;
  for (PenaltyTerm t : order) {
    switch (t) {
      case PenaltyTerm::tv: terms.push_back(std::make_shared<TotalVariation>(beta, shape, tv)); break;
      case PenaltyTerm::l1: terms.push_back(std::make_shared<L1Penalty>(alpha)); break;
      case PenaltyTerm::nonnegative:
        terms.push_back(std::make_shared<BoxIndicator>(0.0, std::numeric_limits<double>::infinity()));
        break;
    }
  }
  auto f = std::make_shared<LeastSquares>(mixing, y, sigma);
  auto model = std::make_shared<PosteriorModel>("unmixing", f, std::make_shared<CompositePenalty>(terms), lambda);
  model->set_shape(shape);

  // Least-squares back-projection (A^T A)^{-1} A^T y per pixel, clipped to the orthant.
  const Matrix& a = mixing->endmembers();
  const Eigen::Index n = shape.pixels();
  Eigen::Map<const Matrix> obs(y.data(), n, a.rows());
  const Matrix gram = a.transpose() * a;
  const Matrix back = (obs * a) * gram.ldlt().solve(Matrix::Identity(a.cols(), a.cols()));
  Vector x0 = Eigen::Map<const Vector>(back.data(), back.size()).cwiseMax(0.0);
  model->set_initial_state(std::move(x0), "least-squares back-projection");
  return model;
}

ModelPtr model_tomography(const Vector& y, const ImageShape& shape, std::shared_ptr<const FourierMaskOperator> mask,
                          double sigma, double beta, double lambda, TvSolverOptions tv) {
  if (!mask) throw InvalidArgument("tomography needs a Fourier mask operator");
  require_positive(beta, "beta");
  if (shape.channels != 1) throw InvalidArgument("tomography expects a single-channel image");
  require_shape(mask->input_size(), shape.size(), "mask operator domain");
  require_shape(y.size(), mask->output_size(), "observation");
  auto f = std::make_shared<LeastSquares>(mask, y, sigma);
  auto model = std::make_shared<PosteriorModel>("tomography", f, std::make_shared<TotalVariation>(beta, shape, tv),
                                                lambda);
  model->set_shape(shape);
  model->set_initial_state(mask->apply_adjoint(y), "adjoint");
  return model;
}

}  // namespace skrock
