#include "qcausal/causal_model.hpp"

namespace qcausal {

std::optional<std::size_t> CausalOrder::set_of(const std::string& party) const {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (const auto& p : sets[i]) {
      if (p == party) return i;
    }
  }
  return std::nullopt;
}

namespace {

std::size_t subsystem_factor_or_throw(const SystemLayout& layout, const SubsystemRef& ref) {
  const std::size_t p = layout.party_index(ref.party);
  auto f = layout.subsystem_factor(p, ref.subsystem);
  if (!f) {
    throw ContractViolation("party '" + ref.party + "' has no output subsystem " +
                            std::to_string(ref.subsystem));
  }
  return *f;
}

}  // namespace

ProcessMatrix build_test_matrix(const SystemLayout& layout, const MarkovPieces& pieces) {
  std::vector<FactorBlock> blocks;
  for (const auto& s : pieces.states) {
    const std::size_t p = layout.party_index(s.party);
    blocks.push_back({s.rho, {layout.input_factor(p)}});
  }
  for (const auto& c : pieces.channels) {
    if (c.parents.empty()) throw ContractViolation("channel into '" + c.party + "' has no parents");
    check_dims(c.choi);
    FactorList factors;
    for (const auto& ref : c.parents) factors.push_back(subsystem_factor_or_throw(layout, ref));
    factors.push_back(layout.input_factor(layout.party_index(c.party)));
    blocks.push_back({c.choi.matrix, std::move(factors)});
  }
  for (const auto& name : pieces.last_parties) {
    const std::size_t p = layout.party_index(name);
    for (std::size_t f : layout.output_factors(p)) {
      blocks.push_back({identity_matrix(layout.factors()[f].dim), {f}});
    }
  }
  for (const auto& ref : pieces.open_outputs) {
    const std::size_t f = subsystem_factor_or_throw(layout, ref);
    blocks.push_back({identity_matrix(layout.factors()[f].dim), {f}});
  }
  return ProcessMatrix(layout, assemble_blocks(layout, blocks));
}

}  // namespace qcausal
