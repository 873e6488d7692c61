#include "qcausal/discovery.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace qcausal {

namespace {

void count(std::size_t* tests) {
  if (tests) ++*tests;
}

}  // namespace

std::vector<SubsystemRef> find_open_subsystems(const ProcessMatrix& w, double eps,
                                               std::size_t* tests) {
  const auto& layout = w.layout();
  const SystemShape shape = w.shape();
  std::vector<SubsystemRef> open;
  for (std::size_t p = 0; p < layout.party_count(); ++p) {
    const auto& party = layout.party(p);
    if (party.output_subdims.size() < 2) continue;
    for (std::size_t f : layout.output_factors(p)) {
      count(tests);
      if (has_identity_factor(w.matrix(), shape, {f}, eps)) {
        open.push_back({party.name, layout.factors()[f].subsystem});
      }
    }
  }
  return open;
}

ProcessMatrix trace_open_subsystems(const ProcessMatrix& w, const std::vector<SubsystemRef>& open) {
  const auto& layout = w.layout();
  std::vector<SystemRef> targets;
  double scale = 1.0;
  for (const auto& ref : open) {
    targets.push_back(SystemRef::subsystem_of(ref));
    const auto f = layout.subsystem_factor(layout.party_index(ref.party), ref.subsystem);
    if (!f) throw ContractViolation("party '" + ref.party + "' has no output subsystem " + std::to_string(ref.subsystem));
    scale *= static_cast<double>(layout.factors()[*f].dim);
  }
  ProcessMatrix traced = trace_out(w, targets);
  return ProcessMatrix(traced.layout(), traced.matrix() / scale);
}

PeelResult peel_causal_order(const ProcessMatrix& w, double eps, std::size_t* tests) {
  PeelResult result;
  std::vector<std::vector<std::string>> last_first;
  ProcessMatrix current = w;
  while (current.layout().party_count() > 0) {
    const auto& layout = current.layout();
    const SystemShape shape = current.shape();
    std::vector<std::string> last;
    for (std::size_t p = 0; p < layout.party_count(); ++p) {
      count(tests);
      if (has_identity_factor(current.matrix(), shape, layout.output_factors(p), eps)) {
        last.push_back(layout.party(p).name);
      }
    }
    if (last.empty()) {
      for (const auto& party : layout.parties()) result.ungrouped.push_back(party.name);
      break;
    }
    last_first.push_back(last);
    current = remove_parties(current, last);
  }
  result.order.sets.assign(last_first.rbegin(), last_first.rend());
  return result;
}

std::vector<Arrow> find_arrows(const ProcessMatrix& w, const CausalOrder& order,
                               const std::vector<SubsystemRef>& open, double eps,
                               std::size_t* tests, ReceiverOrder receivers) {
  std::set<SubsystemRef> used(open.begin(), open.end());
  std::vector<Arrow> arrows;

  std::vector<std::size_t> set_indices;
  for (std::size_t k = 1; k < order.sets.size(); ++k) set_indices.push_back(k);
  if (receivers == ReceiverOrder::LatestFirst) std::reverse(set_indices.begin(), set_indices.end());

  for (std::size_t k : set_indices) {
    for (const auto& receiver : order.sets[k]) {
      const ProcessMatrix reduced = trace_out(w, {SystemRef::input(receiver)});
      const auto& rl = reduced.layout();
      const SystemShape shape = reduced.shape();
      for (std::size_t b = 0; b < rl.party_count(); ++b) {
        const auto& source = rl.party(b);
        const auto set = order.set_of(source.name);
        if (!set || *set >= k) continue;
        for (std::size_t f : rl.output_factors(b)) {
          const SubsystemRef ref{source.name, rl.factors()[f].subsystem};
          if (ref.subsystem == kRemnantSubsystem || used.count(ref)) continue;
          count(tests);
          if (has_identity_factor(reduced.matrix(), shape, {f}, eps)) {
            arrows.push_back({ref, receiver, source.output_subdims.size() == 1});
            used.insert(ref);
          }
        }
      }
    }
  }
  return arrows;
}

ComplexMatrix extract_state(const ProcessMatrix& w, const std::string& party) {
  const auto& layout = w.layout();
  const std::size_t input = layout.input_factor(layout.party_index(party));
  FactorList others;
  for (std::size_t f = 0; f < layout.factors().size(); ++f) {
    if (f != input) others.push_back(f);
  }
  ComplexMatrix rho = partial_trace(w.matrix(), w.shape(), others);
  const Complex tr = rho.trace();
  if (std::abs(tr) == 0.0) throw ContractViolation("input of '" + party + "' has zero trace");
  rho /= tr;
  return rho;
}

ChoiMatrix extract_channel(const ProcessMatrix& w, const std::vector<SubsystemRef>& parents,
                           const std::string& party) {
  if (parents.empty()) throw ContractViolation("channel into '" + party + "' needs parents");
  const auto& layout = w.layout();

  FactorList wanted;  // parents in the given order, then the input
  std::vector<Index> in_dims;
  for (const auto& ref : parents) {
    auto f = layout.subsystem_factor(layout.party_index(ref.party), ref.subsystem);
    if (!f) {
      throw ContractViolation("party '" + ref.party + "' has no output subsystem " +
                              std::to_string(ref.subsystem));
    }
    wanted.push_back(*f);
    in_dims.push_back(layout.factors()[*f].dim);
  }
  const std::size_t input = layout.input_factor(layout.party_index(party));
  wanted.push_back(input);

  FactorList kept = wanted;
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw ContractViolation("parent subsystem listed twice for '" + party + "'");
  }
  FactorList traced;
  for (std::size_t f = 0; f < layout.factors().size(); ++f) {
    if (!std::binary_search(kept.begin(), kept.end(), f)) traced.push_back(f);
  }
  const ComplexMatrix marginal = partial_trace(w.matrix(), w.shape(), traced);

  std::vector<Index> kept_dims;
  FactorList perm;
  for (std::size_t f : kept) {
    kept_dims.push_back(layout.factors()[f].dim);
    perm.push_back(static_cast<std::size_t>(std::find(wanted.begin(), wanted.end(), f) - wanted.begin()));
  }
  ComplexMatrix t = reorder_systems(marginal, SystemShape(kept_dims), perm);

  Index d_parents = 1;
  for (Index d : in_dims) d_parents *= d;
  const Complex tr = t.trace();
  if (std::abs(tr) == 0.0) throw ContractViolation("channel marginal for '" + party + "' has zero trace");
  t *= static_cast<double>(d_parents) / tr;
  return {std::move(t), std::move(in_dims), {layout.factors()[input].dim}};
}

std::optional<MarkovPieces> extract_pieces(const ProcessMatrix& w, const CausalOrder& order,
                                           const std::vector<Arrow>& arrows) {
  if (order.sets.empty()) return MarkovPieces{};
  const auto& layout = w.layout();
  const auto& last = order.sets.back();
  const std::set<std::string> last_set(last.begin(), last.end());

  std::set<SubsystemRef> sources;
  std::map<std::string, std::vector<SubsystemRef>> parents;
  for (const auto& a : arrows) {
    sources.insert(a.source);
    parents[a.target].push_back(a.source);
  }
  for (std::size_t p = 0; p < layout.party_count(); ++p) {
    const auto& party = layout.party(p);
    if (last_set.count(party.name)) continue;
    for (std::size_t i = 0; i < party.output_subdims.size(); ++i) {
      if (!sources.count({party.name, party.subsystem_id(i)})) return std::nullopt;
    }
  }

  auto flat_position = [&](const SubsystemRef& ref) {
    return *layout.subsystem_factor(layout.party_index(ref.party), ref.subsystem);
  };

  MarkovPieces pieces;
  for (const auto& party : layout.parties()) {
    auto it = parents.find(party.name);
    if (it == parents.end()) {
      pieces.states.push_back({party.name, extract_state(w, party.name)});
    } else {
      auto refs = it->second;
      std::sort(refs.begin(), refs.end(), [&](const SubsystemRef& a, const SubsystemRef& b) {
        return flat_position(a) < flat_position(b);
      });
      pieces.channels.push_back({party.name, refs, extract_channel(w, refs, party.name)});
    }
  }
  pieces.last_parties = last;
  return pieces;
}

bool is_markovian(const ProcessMatrix& w, const ProcessMatrix& w_test, double eps) {
  if (!(w.layout() == w_test.layout())) throw LayoutError("test matrix layout differs from W");
  return approx_equal(w.matrix(), w_test.matrix(), eps);
}

std::pair<std::vector<Arrow>, std::vector<Arrow>> split_primal(const std::vector<Arrow>& arrows,
                                                               const CausalOrder& order) {
  std::vector<Arrow> primal;
  std::vector<Arrow> secondary;
  for (const auto& a : arrows) {
    const auto from = order.set_of(a.source.party);
    const auto to = order.set_of(a.target);
    if (from && to && *from + 1 == *to) {
      primal.push_back(a);
    } else {
      secondary.push_back(a);
    }
  }
  std::stable_sort(primal.begin(), primal.end(), [&](const Arrow& a, const Arrow& b) {
    return *order.set_of(a.target) > *order.set_of(b.target);
  });
  return {primal, secondary};
}

DiscoveryReport discover(const ProcessMatrix& w, const DiscoveryOptions& options) {
  if (!(options.eps > 0.0)) throw ContractViolation("eps must be positive");
  const ValidationReport validation = validate(w, options.validation);
  if (!validation.valid()) {
    throw RejectedInput("process matrix failed validation: " + validation.summary());
  }

  DiscoveryReport report;
  report.eps = options.eps;
  report.layout = w.layout();
  std::size_t tests = 0;

  report.open_subsystems = find_open_subsystems(w, options.eps, &tests);
  const ProcessMatrix reduced = trace_open_subsystems(w, report.open_subsystems);

  PeelResult peel = peel_causal_order(reduced, options.eps, &tests);
  report.causal_order = std::move(peel.order);
  report.ungrouped = std::move(peel.ungrouped);
  report.causally_ordered = report.ungrouped.empty();
  if (!report.causally_ordered) {
    report.constraint_tests = tests;
    return report;
  }

  report.arrows = find_arrows(reduced, report.causal_order, report.open_subsystems, options.eps,
                              &tests, options.receiver_order);
  for (auto& a : report.arrows) {
    a.whole_output = w.layout().party(w.layout().party_index(a.source.party)).output_subdims.size() == 1;
  }
  std::tie(report.primal_arrows, report.secondary_arrows) =
      split_primal(report.arrows, report.causal_order);
  report.constraint_tests = tests;

  auto pieces = extract_pieces(reduced, report.causal_order, report.arrows);
  if (pieces) {
    const ProcessMatrix w_test = build_test_matrix(reduced.layout(), *pieces);
    report.markov_deviation = max_abs_diff(reduced.matrix(), w_test.matrix());
    report.markovian = *report.markov_deviation <= options.eps;
  }
  report.arrows_reliable = report.markovian;

  if (report.markovian) {
    Dag dag;
    std::set<std::string> has_parent;
    for (const auto& a : report.arrows) has_parent.insert(a.target);
    for (const auto& party : w.layout().parties()) {
      dag.nodes.push_back(party.name);
      if (!has_parent.count(party.name)) dag.state_parties.push_back(party.name);
    }
    dag.edges = report.arrows;
    dag.open_output_parties = report.causal_order.sets.back();
    report.dag = std::move(dag);
    report.pieces = std::move(pieces);
  }
  return report;
}

bool verify_two_order_decomposition(const ProcessMatrix& w, double q, const ProcessMatrix& w_ab,
                                    const ProcessMatrix& w_ba, double eps) {
  if (!(q >= 0.0 && q <= 1.0)) throw ContractViolation("q must lie in [0, 1]");
  if (!(w.layout() == w_ab.layout()) || !(w.layout() == w_ba.layout())) {
    throw LayoutError("decomposition terms do not share W's layout");
  }
  const auto& layout = w.layout();
  if (layout.party_count() != 2) throw ContractViolation("two-order decomposition needs two parties");

  const ComplexMatrix combo = q * w_ab.matrix() + (1.0 - q) * w_ba.matrix();
  if (!approx_equal(combo, w.matrix(), eps)) return false;

  auto term_ok = [&](const ProcessMatrix& term, std::size_t last_party) {
    if (!validate(term).valid()) return false;
    return has_identity_factor(term.matrix(), term.shape(), layout.output_factors(last_party), eps);
  };
  if (q > 0.0 && !term_ok(w_ab, 1)) return false;
  if (q < 1.0 && !term_ok(w_ba, 0)) return false;
  return true;
}

}  // namespace qcausal
