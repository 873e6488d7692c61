#pragma once

// Index-summation reference implementations and shared fixtures. The
// references walk multi-indices digit by digit and share no code with the
// library's index-group machinery.

#include <algorithm>
#include <random>
#include <vector>

#include <set>
#include <string>

#include "qcausal/discovery.hpp"
#include "qcausal/generator.hpp"

namespace qtest {

using qcausal::Complex;
using qcausal::ComplexMatrix;
using qcausal::Index;

inline std::vector<Index> digits(Index flat, const std::vector<Index>& dims) {
  std::vector<Index> d(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    d[k] = flat % dims[k];
    flat /= dims[k];
  }
  return d;
}

inline Index flatten(const std::vector<Index>& d, const std::vector<Index>& dims) {
  Index flat = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) flat = flat * dims[k] + d[k];
  return flat;
}

inline Index product(const std::vector<Index>& dims) {
  Index p = 1;
  for (Index d : dims) p *= d;
  return p;
}

inline ComplexMatrix ref_kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index k = 0; k < b.rows(); ++k)
        for (Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline ComplexMatrix ref_partial_trace(const ComplexMatrix& m, const std::vector<Index>& dims,
                                       const std::vector<std::size_t>& traced) {
  std::vector<bool> is_traced(dims.size(), false);
  for (auto t : traced) is_traced[t] = true;
  std::vector<Index> kept_dims;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (!is_traced[k]) kept_dims.push_back(dims[k]);
  const Index kd = product(kept_dims);
  ComplexMatrix out = ComplexMatrix::Zero(kd, kd);
  const Index n = product(dims);
  for (Index r = 0; r < n; ++r) {
    const auto dr = digits(r, dims);
    for (Index c = 0; c < n; ++c) {
      const auto dc = digits(c, dims);
      bool diagonal = true;
      std::vector<Index> kr, kc;
      for (std::size_t k = 0; k < dims.size(); ++k) {
        if (is_traced[k]) {
          diagonal = diagonal && dr[k] == dc[k];
        } else {
          kr.push_back(dr[k]);
          kc.push_back(dc[k]);
        }
      }
      if (diagonal) out(flatten(kr, kept_dims), flatten(kc, kept_dims)) += m(r, c);
    }
  }
  return out;
}

/// Factor k moves to position perm[k].
inline ComplexMatrix ref_reorder(const ComplexMatrix& m, const std::vector<Index>& dims,
                                 const std::vector<std::size_t>& perm) {
  std::vector<Index> new_dims(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) new_dims[perm[k]] = dims[k];
  const Index n = product(dims);
  ComplexMatrix out(n, n);
  auto move = [&](Index flat) {
    const auto d = digits(flat, dims);
    std::vector<Index> nd(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) nd[perm[k]] = d[k];
    return flatten(nd, new_dims);
  };
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) out(move(r), move(c)) = m(r, c);
  return out;
}

inline ComplexMatrix random_matrix(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(nd(gen), nd(gen));
  return m;
}

inline std::vector<Index> random_dims(std::mt19937_64& gen, std::size_t max_factors = 4, Index max_dim = 3) {
  std::uniform_int_distribution<std::size_t> nf(1, max_factors);
  std::uniform_int_distribution<Index> dd(1, max_dim);
  std::vector<Index> dims(nf(gen));
  for (auto& d : dims) d = dd(gen);
  return dims;
}

inline std::vector<std::size_t> random_subset(std::size_t n, std::mt19937_64& gen) {
  std::vector<std::size_t> out;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t k = 0; k < n; ++k)
    if (coin(gen)) out.push_back(k);
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& gen) {
  std::vector<std::size_t> p(n);
  for (std::size_t k = 0; k < n; ++k) p[k] = k;
  std::shuffle(p.begin(), p.end(), gen);
  return p;
}

/// Test matrix with the channel of `arrow` cut: the source subsystem gets
/// an identity and the target's channel is replaced by its marginal on
/// the remaining parents (or by the marginal state when none remain).
inline qcausal::ProcessMatrix drop_arrow_test_matrix(const qcausal::SystemLayout& layout,
                                                     const qcausal::MarkovPieces& pieces,
                                                     const qcausal::Arrow& arrow) {
  using namespace qcausal;
  MarkovPieces cut = pieces;
  cut.open_outputs.push_back(arrow.source);
  auto it = std::find_if(cut.channels.begin(), cut.channels.end(),
                         [&](const ChannelPiece& c) { return c.party == arrow.target; });
  const ChannelPiece channel = *it;
  cut.channels.erase(it);

  const auto pos = static_cast<std::size_t>(
      std::find(channel.parents.begin(), channel.parents.end(), arrow.source) - channel.parents.begin());
  const double d_source = static_cast<double>(channel.choi.in_dims[pos]);
  ComplexMatrix rest = partial_trace(channel.choi.matrix, channel.choi.shape(), {pos}) / d_source;

  std::vector<SubsystemRef> parents = channel.parents;
  parents.erase(parents.begin() + static_cast<std::ptrdiff_t>(pos));
  std::vector<Index> in_dims = channel.choi.in_dims;
  in_dims.erase(in_dims.begin() + static_cast<std::ptrdiff_t>(pos));
  if (parents.empty()) {
    cut.states.push_back({arrow.target, rest});
  } else {
    cut.channels.push_back({arrow.target, parents, {rest, in_dims, channel.choi.out_dims}});
  }
  return build_test_matrix(layout, cut);
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

/// Empty when the report recovers the spec's edges, open subsystems, state
/// parties and last parties; otherwise a description of the first mismatch.
inline std::string roundtrip_mismatch(const qcausal::DagSpec& spec, const qcausal::DiscoveryReport& r) {
  using namespace qcausal;
  if (!r.causally_ordered) return "not causally ordered";
  if (!r.markovian || !r.dag) return "not Markovian";
  std::set<std::pair<SubsystemRef, std::string>> want, got;
  for (const auto& e : spec.edges) want.insert({e.from, e.to});
  for (const auto& a : r.dag->edges) got.insert({a.source, a.target});
  if (want != got) return "edges differ";
  auto open_want = spec.open_subsystems();
  auto open_got = r.open_subsystems;
  std::sort(open_want.begin(), open_want.end());
  std::sort(open_got.begin(), open_got.end());
  if (open_want != open_got) return "open subsystems differ";
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted(spec.state_parties()) != sorted(r.dag->state_parties))
    return "state parties differ: " + join(sorted(spec.state_parties())) + " vs " + join(sorted(r.dag->state_parties));
  if (sorted(spec.last_parties()) != sorted(r.dag->open_output_parties))
    return "last parties differ: " + join(sorted(spec.last_parties())) + " vs " + join(sorted(r.dag->open_output_parties));
  return {};
}

}  // namespace qtest
