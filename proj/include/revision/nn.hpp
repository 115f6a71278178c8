#pragma once

// Dense building blocks for the motion prior. Each forward kernel has a matching backward
// kernel; activations are row-major (one row per frame token).

#include <Eigen/Dense>

#include <cmath>

namespace revision::nn {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
constexpr Scalar kLayerNormEps = Scalar(1e-5);

/// y = gamma * (x - mean) / sqrt(var + eps) + beta, per row. Keeps xhat and 1/std for backward.
template <typename Scalar>
void layer_norm(const RowMatrix<Scalar>& x, const Eigen::Ref<const RowVector<Scalar>>& gamma,
                const Eigen::Ref<const RowVector<Scalar>>& beta, RowMatrix<Scalar>& y, RowMatrix<Scalar>& xhat,
                Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rstd) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  xhat.resize(n, d);
  y.resize(n, d);
  rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar mean = x.row(i).mean();
    const Scalar var = (x.row(i).array() - mean).square().mean();
    rstd[i] = Scalar(1) / std::sqrt(var + kLayerNormEps<Scalar>);
    xhat.row(i) = (x.row(i).array() - mean) * rstd[i];
  }
  y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
}

/// Accumulates dgamma/dbeta and returns dx.
template <typename Scalar>
RowMatrix<Scalar> layer_norm_backward(const RowMatrix<Scalar>& dy, const RowMatrix<Scalar>& xhat,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rstd,
                                      const Eigen::Ref<const RowVector<Scalar>>& gamma,
                                      Eigen::Ref<RowVector<Scalar>> dgamma, Eigen::Ref<RowVector<Scalar>> dbeta) {
  const Eigen::Index d = dy.cols();
  dgamma += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  RowMatrix<Scalar> dxhat = (dy.array().rowwise() * gamma.array()).matrix();
  RowMatrix<Scalar> dx(dy.rows(), d);
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const Scalar m1 = dxhat.row(i).mean();
    const Scalar m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
    dx.row(i) = rstd[i] * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
  }
  return dx;
}

// tanh approximation of GELU; smooth everywhere, which keeps finite-difference checks clean.
// The *_from_tanh forms reuse t = tanh(gelu_inner(x)) cached by the forward pass.
template <typename Scalar>
inline Scalar gelu_inner(Scalar x) {
  constexpr Scalar k = Scalar(0.7978845608028654);  // sqrt(2 / pi)
  return k * (x + Scalar(0.044715) * x * x * x);
}

template <typename Scalar>
inline Scalar gelu_from_tanh(Scalar x, Scalar t) {
  return Scalar(0.5) * x * (Scalar(1) + t);
}

template <typename Scalar>
inline Scalar gelu_grad_from_tanh(Scalar x, Scalar t) {
  constexpr Scalar k = Scalar(0.7978845608028654);
  return Scalar(0.5) * (Scalar(1) + t) +
         Scalar(0.5) * x * (Scalar(1) - t * t) * k * (Scalar(1) + Scalar(3) * Scalar(0.044715) * x * x);
}

template <typename Scalar>
inline Scalar gelu(Scalar x) {
  return gelu_from_tanh(x, std::tanh(gelu_inner(x)));
}

template <typename Scalar>
inline Scalar gelu_grad(Scalar x) {
  return gelu_grad_from_tanh(x, std::tanh(gelu_inner(x)));
}

/// Row-wise softmax in place.
template <typename Derived>
void softmax_rows(Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const Scalar m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp().matrix();
    s.row(i) /= s.row(i).sum();
  }
}

/// Gradient through a row-wise softmax: dS = P o (dP - rowsum(dP o P)).
template <typename Scalar>
RowMatrix<Scalar> softmax_rows_backward(const RowMatrix<Scalar>& p, const RowMatrix<Scalar>& dp) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = (dp.array() * p.array()).rowwise().sum();
  return (p.array() * (dp.array().colwise() - dot.array())).matrix();
}

}  // namespace revision::nn
