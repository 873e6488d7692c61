#pragma once

// Dense multi-system tensor algebra on top of Eigen.
//
// Every function here is a free function over Eigen::MatrixBase expressions
// and returns a plain dense matrix of the same scalar type. Square matrices
// acting on a composite space are annotated by a SystemShape; the Kronecker
// convention throughout is "left = most significant", i.e. the combined basis
// index of factors (x_0, ..., x_{n-1}) is the mixed-radix number with x_0 as
// the leading digit.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qcausal/errors.hpp"

namespace qcausal {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Complex = std::complex<double>;
using ComplexMatrix = Matrix<Complex>;

/// Factor positions within a SystemShape.
using FactorList = std::vector<std::size_t>;

inline constexpr double kDefaultEps = 1e-9;

namespace detail {

inline Index checked_mul(Index a, Index b) {
  if (a != 0 && b > std::numeric_limits<Index>::max() / a) {
    throw DimensionError("dimension product overflows the index type");
  }
  return a * b;
}

}  // namespace detail

/// Ordered tensor-factor dimensions of a composite space.
class SystemShape {
 public:
  SystemShape() = default;
  SystemShape(std::initializer_list<Index> dims) : SystemShape(std::vector<Index>(dims)) {}
  explicit SystemShape(std::vector<Index> dims) : dims_(std::move(dims)) {
    for (Index d : dims_) {
      if (d < 1) throw LayoutError("factor dimension must be >= 1, got " + std::to_string(d));
      total_ = detail::checked_mul(total_, d);
    }
  }

  std::size_t size() const { return dims_.size(); }
  Index operator[](std::size_t k) const { return dims_[k]; }
  const std::vector<Index>& dims() const { return dims_; }
  /// Product of all factor dimensions (1 for the empty shape).
  Index total() const { return total_; }

  bool operator==(const SystemShape& other) const { return dims_ == other.dims_; }

 private:
  std::vector<Index> dims_;
  Index total_ = 1;
};

namespace detail {

inline std::vector<bool> factor_mask(const SystemShape& shape, const FactorList& factors) {
  std::vector<bool> mask(shape.size(), false);
  for (std::size_t f : factors) {
    if (f >= shape.size()) {
      throw LayoutError("factor index " + std::to_string(f) + " out of range for " +
                        std::to_string(shape.size()) + " factors");
    }
    if (mask[f]) throw LayoutError("factor index " + std::to_string(f) + " listed twice");
    mask[f] = true;
  }
  return mask;
}

// Flat basis indices grouped by their coordinate on a subset of factors.
// groups[t][r] is the flat index whose coordinate on the selected factors is t
// and whose coordinate on the remaining factors is r. Both coordinates are
// mixed-radix over their factors in ascending position order.
struct FactorSplit {
  Index selected_dim = 1;
  Index rest_dim = 1;
  std::vector<std::vector<Index>> groups;
};

inline FactorSplit split_factors(const SystemShape& shape, const FactorList& selected) {
  const auto mask = factor_mask(shape, selected);
  const std::size_t n = shape.size();

  FactorSplit split;
  std::vector<Index> stride(n, 0);
  for (std::size_t k = n; k-- > 0;) {
    if (mask[k]) {
      stride[k] = split.selected_dim;
      split.selected_dim *= shape[k];
    } else {
      stride[k] = split.rest_dim;
      split.rest_dim *= shape[k];
    }
  }

  split.groups.assign(static_cast<std::size_t>(split.selected_dim),
                      std::vector<Index>(static_cast<std::size_t>(split.rest_dim)));
  std::vector<Index> digit(n, 0);
  Index sel = 0;
  Index rest = 0;
  for (Index flat = 0; flat < shape.total(); ++flat) {
    split.groups[static_cast<std::size_t>(sel)][static_cast<std::size_t>(rest)] = flat;
    for (std::size_t k = n; k-- > 0;) {
      Index& coord = mask[k] ? sel : rest;
      if (++digit[k] < shape[k]) {
        coord += stride[k];
        break;
      }
      coord -= stride[k] * (shape[k] - 1);
      digit[k] = 0;
    }
  }
  return split;
}

template <typename Derived>
void require_square_over(const Eigen::MatrixBase<Derived>& m, const SystemShape& shape) {
  if (m.rows() != m.cols()) {
    throw LayoutError("expected a square matrix, got " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()));
  }
  if (m.rows() != shape.total()) {
    throw LayoutError("matrix side " + std::to_string(m.rows()) +
                      " does not match the product of factor dims " +
                      std::to_string(shape.total()));
  }
}

}  // namespace detail

/// Kronecker product, left operand most significant.
template <typename A, typename B>
Matrix<typename A::Scalar> kron(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::checked_mul(a.rows(), b.rows());
  detail::checked_mul(a.cols(), b.cols());
  Matrix<typename A::Scalar> out = Eigen::kroneckerProduct(a.derived(), b.derived());
  return out;
}

/// Kronecker product of a sequence, first element most significant.
template <typename Scalar>
Matrix<Scalar> kron_all(const std::vector<Matrix<Scalar>>& factors) {
  Matrix<Scalar> out = Matrix<Scalar>::Ones(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

/// Trace over the listed factors. The result acts on the remaining factors in
/// their original relative order.
template <typename Derived>
Matrix<typename Derived::Scalar> partial_trace(const Eigen::MatrixBase<Derived>& m,
                                               const SystemShape& shape,
                                               const FactorList& traced) {
  detail::require_square_over(m, shape);
  const auto split = detail::split_factors(shape, traced);
  Matrix<typename Derived::Scalar> out =
      Matrix<typename Derived::Scalar>::Zero(split.rest_dim, split.rest_dim);
  for (const auto& g : split.groups) out += m(g, g);
  return out;
}

/// Tr_F[m (1 ⊗ op_F)]: multiplies by `op` on the listed factors and traces
/// them out. `op` acts on the listed factors taken in ascending position order.
/// With op = identity this is partial_trace.
template <typename Derived, typename OpDerived>
Matrix<typename Derived::Scalar> contract_factors(const Eigen::MatrixBase<Derived>& m,
                                                  const SystemShape& shape,
                                                  const FactorList& factors,
                                                  const Eigen::MatrixBase<OpDerived>& op) {
  detail::require_square_over(m, shape);
  const auto split = detail::split_factors(shape, factors);
  if (op.rows() != split.selected_dim || op.cols() != split.selected_dim) {
    throw LayoutError("contraction operator has side " + std::to_string(op.rows()) +
                      ", expected " + std::to_string(split.selected_dim));
  }
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = Matrix<Scalar>::Zero(split.rest_dim, split.rest_dim);
  for (Index a = 0; a < split.selected_dim; ++a) {
    for (Index b = 0; b < split.selected_dim; ++b) {
      const Scalar w = op(b, a);
      if (w == Scalar(0)) continue;
      out += w * m(split.groups[static_cast<std::size_t>(a)],
                   split.groups[static_cast<std::size_t>(b)]);
    }
  }
  return out;
}

/// Max entrywise distance between m and (1/d_F) 1_F ⊗ Tr_F m, with the
/// identity placed on the listed factors. Zero means m carries a normalized
/// identity tensor factor there; dimension-1 factor sets are exact.
template <typename Derived>
double identity_factor_deviation(const Eigen::MatrixBase<Derived>& m, const SystemShape& shape,
                                 const FactorList& factors) {
  detail::require_square_over(m, shape);
  const auto split = detail::split_factors(shape, factors);
  if (split.selected_dim == 1) return 0.0;

  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> reduced = Matrix<Scalar>::Zero(split.rest_dim, split.rest_dim);
  for (const auto& g : split.groups) reduced += m(g, g);
  reduced /= static_cast<double>(split.selected_dim);

  double dev = 0.0;
  for (std::size_t a = 0; a < split.groups.size(); ++a) {
    for (std::size_t b = 0; b < split.groups.size(); ++b) {
      const auto block = m(split.groups[a], split.groups[b]);
      const double d = (a == b) ? (block - reduced).cwiseAbs().maxCoeff()
                                : block.cwiseAbs().maxCoeff();
      dev = std::max(dev, d);
    }
  }
  return dev;
}

template <typename Derived>
bool has_identity_factor(const Eigen::MatrixBase<Derived>& m, const SystemShape& shape,
                         const FactorList& factors, double eps = kDefaultEps) {
  return identity_factor_deviation(m, shape, factors) <= eps;
}

/// Shape after moving factor k to position perm[k].
inline SystemShape permuted_shape(const SystemShape& shape, const FactorList& perm) {
  if (perm.size() != shape.size()) {
    throw LayoutError("permutation has " + std::to_string(perm.size()) + " entries for " +
                      std::to_string(shape.size()) + " factors");
  }
  std::vector<Index> dims(shape.size(), 0);
  std::vector<bool> seen(shape.size(), false);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    if (perm[k] >= shape.size() || seen[perm[k]]) throw LayoutError("invalid factor permutation");
    seen[perm[k]] = true;
    dims[perm[k]] = shape[k];
  }
  return SystemShape(std::move(dims));
}

/// Conjugates m by the basis permutation that carries factor k to position perm[k].
template <typename Derived>
Matrix<typename Derived::Scalar> reorder_systems(const Eigen::MatrixBase<Derived>& m,
                                                 const SystemShape& shape,
                                                 const FactorList& perm) {
  detail::require_square_over(m, shape);
  const SystemShape target = permuted_shape(shape, perm);
  const std::size_t n = shape.size();

  std::vector<Index> target_stride(n, 1);
  for (std::size_t k = n; k-- > 1;) target_stride[k - 1] = target_stride[k] * target[k];

  // source[new_flat] = old_flat
  std::vector<Index> source(static_cast<std::size_t>(shape.total()));
  std::vector<Index> digit(n, 0);
  Index mapped = 0;
  for (Index flat = 0; flat < shape.total(); ++flat) {
    source[static_cast<std::size_t>(mapped)] = flat;
    for (std::size_t k = n; k-- > 0;) {
      const Index step = target_stride[perm[k]];
      if (++digit[k] < shape[k]) {
        mapped += step;
        break;
      }
      mapped -= step * (shape[k] - 1);
      digit[k] = 0;
    }
  }
  return m(source, source);
}

/// Max entrywise absolute difference.
template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw LayoutError("cannot compare " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " with " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  }
  if (a.size() == 0) return 0.0;
  return static_cast<double>((a - b).cwiseAbs().maxCoeff());
}

template <typename A, typename B>
bool approx_equal(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                  double eps = kDefaultEps) {
  return max_abs_diff(a, b) <= eps;
}

/// max |m - m^†|
template <typename Derived>
double hermiticity_deviation(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw LayoutError("hermiticity needs a square matrix");
  if (m.size() == 0) return 0.0;
  return static_cast<double>((m - m.adjoint()).cwiseAbs().maxCoeff());
}

/// Smallest eigenvalue of the Hermitian part (m + m^†)/2.
template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw LayoutError("min_eigenvalue needs a square matrix");
  using Plain = Matrix<typename Derived::Scalar>;
  Plain h = (m + m.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Plain> es(h, Eigen::EigenvaluesOnly);
  return static_cast<double>(es.eigenvalues()(0));
}

/// True when the smallest eigenvalue of the Hermitian part is >= -eps.
/// A Cholesky factorization of H + eps*1 settles the common case; the
/// eigensolver only runs when it fails.
template <typename Derived>
bool is_positive_semidefinite(const Eigen::MatrixBase<Derived>& m, double eps) {
  if (m.rows() != m.cols()) throw LayoutError("positivity needs a square matrix");
  using Plain = Matrix<typename Derived::Scalar>;
  {
    Plain h = (m + m.adjoint()) * 0.5;
    h.diagonal().array() += eps;
    Eigen::LLT<Eigen::Ref<Plain>> llt(h);
    if (llt.info() == Eigen::Success) return true;
  }
  return min_eigenvalue(m) >= -eps;
}

inline ComplexMatrix identity_matrix(Index d) { return ComplexMatrix::Identity(d, d); }

}  // namespace qcausal
