#include "qcausal/channel.hpp"

#include <numeric>

namespace qcausal {

namespace {

Index product(const std::vector<Index>& dims) {
  Index d = 1;
  for (Index x : dims) {
    if (x < 1) throw ContractViolation("channel dims must be >= 1");
    d = detail::checked_mul(d, x);
  }
  return d;
}

}  // namespace

Index ChoiMatrix::in_dim() const { return product(in_dims); }
Index ChoiMatrix::out_dim() const { return product(out_dims); }

SystemShape ChoiMatrix::shape() const {
  std::vector<Index> dims = in_dims;
  dims.insert(dims.end(), out_dims.begin(), out_dims.end());
  return SystemShape(std::move(dims));
}

FactorList ChoiMatrix::in_factors() const {
  FactorList f(in_dims.size());
  std::iota(f.begin(), f.end(), std::size_t{0});
  return f;
}

FactorList ChoiMatrix::out_factors() const {
  FactorList f(out_dims.size());
  std::iota(f.begin(), f.end(), in_dims.size());
  return f;
}

void check_dims(const ChoiMatrix& choi) {
  const Index side = detail::checked_mul(choi.in_dim(), choi.out_dim());
  if (choi.matrix.rows() != side || choi.matrix.cols() != side) {
    throw ContractViolation("Choi matrix side " + std::to_string(choi.matrix.rows()) +
                            " does not match in x out = " + std::to_string(side));
  }
}

double trace_preservation_error(const ChoiMatrix& choi) {
  check_dims(choi);
  const ComplexMatrix reduced = partial_trace(choi.matrix, choi.shape(), choi.out_factors());
  return max_abs_diff(reduced, identity_matrix(choi.in_dim()));
}

bool is_cptp(const ChoiMatrix& choi, double eps) {
  return trace_preservation_error(choi) <= eps && is_positive_semidefinite(choi.matrix, eps);
}

ChoiMatrix identity_channel(Index d) { return identity_channel({d}, {d}); }

ChoiMatrix identity_channel(const std::vector<Index>& in_dims, const std::vector<Index>& out_dims) {
  const Index d = product(in_dims);
  if (product(out_dims) != d) {
    throw ContractViolation("identity channel needs equal input and output dimension");
  }
  ComplexMatrix m = ComplexMatrix::Zero(d * d, d * d);
  for (Index j = 0; j < d; ++j) {
    for (Index k = 0; k < d; ++k) m(j * d + j, k * d + k) = 1.0;
  }
  return {std::move(m), in_dims, out_dims};
}

ChoiMatrix unitary_channel(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) throw ContractViolation("unitary channel needs a square matrix");
  const Index d = u.rows();
  ComplexMatrix m(d * d, d * d);
  for (Index j = 0; j < d; ++j) {
    for (Index k = 0; k < d; ++k) m.block(j * d, k * d, d, d) = u.col(j) * u.col(k).adjoint();
  }
  return {std::move(m), {d}, {d}};
}

ChoiMatrix stinespring_channel(const ComplexMatrix& isometry, const std::vector<Index>& in_dims,
                               const std::vector<Index>& out_dims, Index env_dim) {
  const Index din = product(in_dims);
  const Index dout = product(out_dims);
  if (isometry.rows() != dout * env_dim || isometry.cols() != din) {
    throw ContractViolation("isometry shape does not match in/out/env dims");
  }
  ComplexMatrix m(din * dout, din * dout);
  // block (j,k) = Tr_env(v_j v_k^dag) = A_j A_k^dag with A_j the out x env reshape of column j
  std::vector<ComplexMatrix> a(static_cast<std::size_t>(din));
  for (Index j = 0; j < din; ++j) {
    ComplexMatrix aj(dout, env_dim);
    for (Index o = 0; o < dout; ++o) {
      for (Index e = 0; e < env_dim; ++e) aj(o, e) = isometry(o * env_dim + e, j);
    }
    a[static_cast<std::size_t>(j)] = std::move(aj);
  }
  for (Index j = 0; j < din; ++j) {
    for (Index k = 0; k < din; ++k) {
      m.block(j * dout, k * dout, dout, dout) =
          a[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(k)].adjoint();
    }
  }
  return {std::move(m), in_dims, out_dims};
}

}  // namespace qcausal
