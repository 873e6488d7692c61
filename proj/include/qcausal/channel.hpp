#pragma once

#include <vector>

#include "qcausal/tensor.hpp"

namespace qcausal {

/// Matrix of a channel from the in factors to the out factors, in the
/// untransposed convention T = (I ⊗ T)(|phi+><phi+|) on in ⊗ out.
/// Trace preservation reads Tr_out T = 1_in.
struct ChoiMatrix {
  ComplexMatrix matrix;
  std::vector<Index> in_dims;
  std::vector<Index> out_dims;

  Index in_dim() const;
  Index out_dim() const;
  /// in factors followed by out factors.
  SystemShape shape() const;
  FactorList out_factors() const;
  FactorList in_factors() const;
};

/// Throws ContractViolation when the matrix side does not match the dims.
void check_dims(const ChoiMatrix& choi);

/// max |Tr_out T - 1_in|
double trace_preservation_error(const ChoiMatrix& choi);

/// PSD within eps and Tr_out T = 1_in within eps.
bool is_cptp(const ChoiMatrix& choi, double eps = kDefaultEps);

/// sum_jk |jj><kk|, the identity channel on dimension d.
ChoiMatrix identity_channel(Index d);

/// Identity map from one d-dimensional space onto factors out_dims whose
/// product is d.
ChoiMatrix identity_channel(const std::vector<Index>& in_dims, const std::vector<Index>& out_dims);

/// sum_jk |j><k| ⊗ U|j><k|U^dag
ChoiMatrix unitary_channel(const ComplexMatrix& u);

/// Channel rho -> Tr_env(V rho V^dag) for an isometry V: in -> out ⊗ env
/// (out the more significant factor).
ChoiMatrix stinespring_channel(const ComplexMatrix& isometry, const std::vector<Index>& in_dims,
                               const std::vector<Index>& out_dims, Index env_dim);

}  // namespace qcausal
