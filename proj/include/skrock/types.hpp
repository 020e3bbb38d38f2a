#pragma once

#include <Eigen/Core>

namespace skrock {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;
using VectorRef = Eigen::Ref<Eigen::VectorXd>;

/// Shape carried alongside a flattened image stack. Pixels are stored
/// column-major within one channel; channels are stored one after another.
struct ImageShape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index channels = 1;

  Eigen::Index pixels() const { return rows * cols; }
  Eigen::Index size() const { return rows * cols * channels; }
  bool operator==(const ImageShape&) const = default;
};

}  // namespace skrock
