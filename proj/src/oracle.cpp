#include "qcausal/oracle.hpp"

#include <algorithm>
#include <vector>

#include "qcausal/generator.hpp"

namespace qcausal {

CpMapCJ default_cptp_cj(const SystemLayout& layout, const std::string& party) {
  const auto& p = layout.party(layout.party_index(party));
  const Index dout = p.output_dim();
  return {party, kron(identity_matrix(p.input_dim), identity_matrix(dout) / static_cast<double>(dout))};
}

CpMapCJ prepare_measure_cj(const SystemLayout& layout, const std::string& party, const ComplexMatrix& proj,
                           const ComplexMatrix& state) {
  const auto& p = layout.party(layout.party_index(party));
  if (proj.rows() != p.input_dim || proj.cols() != p.input_dim) {
    throw DimensionError("measurement on '" + party + "' must be " + std::to_string(p.input_dim) + "-dimensional");
  }
  if (state.rows() != p.output_dim() || state.cols() != p.output_dim()) {
    throw DimensionError("prepared state of '" + party + "' must be " + std::to_string(p.output_dim()) +
                         "-dimensional");
  }
  if (hermiticity_deviation(proj) > kDefaultEps || !is_positive_semidefinite(proj, kDefaultEps)) {
    throw ContractViolation("measurement operator is not positive semidefinite");
  }
  if (hermiticity_deviation(state) > kDefaultEps || !is_positive_semidefinite(state, kDefaultEps)) {
    throw ContractViolation("prepared state is not positive semidefinite");
  }
  return {party, kron(proj, state.transpose())};
}

double probability(const ProcessMatrix& w, const InstrumentSetting& setting) {
  const auto& layout = w.layout();
  for (const auto& [name, map] : setting.maps) {
    if (!layout.find_party(name)) throw LayoutError("setting names unknown party '" + name + "'");
  }
  // parties occupy contiguous factor blocks in declaration order
  ComplexMatrix k = ComplexMatrix::Identity(1, 1);
  for (const auto& p : layout.parties()) {
    auto it = setting.maps.find(p.name);
    const ComplexMatrix m = it != setting.maps.end() ? it->second.matrix : default_cptp_cj(layout, p.name).matrix;
    const Index side = p.input_dim * p.output_dim();
    if (m.rows() != side || m.cols() != side) throw LayoutError("map of party '" + p.name + "' has the wrong size");
    k = kron(k, m);
  }
  // Tr[W K] = sum_ij W_ij K_ji
  return (w.matrix().cwiseProduct(k.transpose())).sum().real();
}

namespace {

ComplexMatrix projector(const ComplexMatrix& v) { return v * v.adjoint(); }

}  // namespace

double signaling_strength(const ProcessMatrix& w, const std::string& sender, const std::string& receiver,
                          int n_settings, std::uint64_t seed) {
  if (sender == receiver) throw ContractViolation("sender and receiver must differ");
  const auto& layout = w.layout();
  const std::size_t s = layout.party_index(sender);
  const std::size_t r = layout.party_index(receiver);

  // Everyone else applies the default map: tracing their factors and
  // dividing by their output dimensions gives the same probabilities.
  FactorList others;
  double scale = 1.0;
  for (std::size_t p = 0; p < layout.party_count(); ++p) {
    if (p == s || p == r) continue;
    const FactorList f = layout.party_factors(p);
    others.insert(others.end(), f.begin(), f.end());
    scale *= static_cast<double>(layout.party(p).output_dim());
  }
  std::sort(others.begin(), others.end());
  const ProcessMatrix marginal(layout.without_factors(others),
                               partial_trace(w.matrix(), w.shape(), others) / scale);
  const auto& ml = marginal.layout();

  Rng rng(seed);
  const auto& sp = ml.party(ml.party_index(sender));
  const auto& rp = ml.party(ml.party_index(receiver));

  std::vector<CpMapCJ> sender_maps;
  const ComplexMatrix no_measurement = identity_matrix(sp.input_dim);
  for (Index j = 0; j < sp.output_dim(); ++j) {
    ComplexMatrix basis = ComplexMatrix::Zero(sp.output_dim(), sp.output_dim());
    basis(j, j) = 1.0;
    sender_maps.push_back(prepare_measure_cj(ml, sender, no_measurement, basis));
  }
  for (int k = 0; k < n_settings; ++k) {
    sender_maps.push_back(prepare_measure_cj(ml, sender, no_measurement, projector(random_pure_state(sp.output_dim(), rng))));
  }

  std::vector<CpMapCJ> receiver_maps;
  const ComplexMatrix mixed = identity_matrix(rp.output_dim()) / static_cast<double>(rp.output_dim());
  for (int k = 0; k <= n_settings; ++k) {
    const ComplexMatrix u = k == 0 ? identity_matrix(rp.input_dim) : random_unitary(rp.input_dim, rng);
    for (Index j = 0; j < rp.input_dim; ++j) receiver_maps.push_back(prepare_measure_cj(ml, receiver, projector(u.col(j)), mixed));
  }

  double strength = 0.0;
  for (const auto& rm : receiver_maps) {
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < sender_maps.size(); ++i) {
      InstrumentSetting setting;
      setting.set(sender_maps[i]);
      setting.set(rm);
      const double p = probability(marginal, setting);
      lo = i == 0 ? p : std::min(lo, p);
      hi = i == 0 ? p : std::max(hi, p);
    }
    strength = std::max(strength, hi - lo);
  }
  return strength;
}

}  // namespace qcausal
