#include "qcausal/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "qcausal/procmat_io.hpp"
#include "qcausal/report.hpp"

namespace qcausal {

using nlohmann::json;

double Rng::uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ContractViolation("Rng::below needs n > 0");
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t x = bits();
  while (x < threshold) x = bits();
  return x % n;
}

Complex Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return Complex(re, im) * std::numbers::sqrt2 * 0.5;
}

ComplexMatrix ginibre(Index rows, Index cols, Rng& rng) {
  ComplexMatrix g(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) g(r, c) = rng.complex_normal();
  }
  return g;
}

ComplexMatrix random_isometry(Index rows, Index cols, Rng& rng) {
  if (rows < cols) throw ContractViolation("isometry needs rows >= cols");
  const Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(rows, cols, rng));
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    const Complex r = qr.matrixQR()(j, j);
    if (std::abs(r) > 0.0) q.col(j) *= r / std::abs(r);
  }
  return q;
}

ComplexMatrix random_unitary(Index d, Rng& rng) { return random_isometry(d, d, rng); }

ComplexMatrix random_pure_state(Index d, Rng& rng) {
  ComplexMatrix v = ginibre(d, 1, rng);
  v /= v.norm();
  return v;
}

ComplexMatrix random_density(Index d, Rng& rng) {
  if (d < 1) throw ContractViolation("density dimension must be >= 1");
  const ComplexMatrix g = ginibre(d, d, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace();
  return rho;
}

ComplexMatrix random_density(Index d, std::uint64_t seed) {
  Rng rng(seed);
  return random_density(d, rng);
}

namespace {

Index dims_product(const std::vector<Index>& dims) {
  Index d = 1;
  for (Index x : dims) {
    if (x < 1) throw ContractViolation("channel dims must be >= 1");
    d = detail::checked_mul(d, x);
  }
  return d;
}

}  // namespace

ChoiMatrix random_cptp_choi(const std::vector<Index>& in_dims, const std::vector<Index>& out_dims, Rng& rng,
                            bool unitary) {
  const Index din = dims_product(in_dims);
  const Index dout = dims_product(out_dims);
  if (unitary) {
    if (din != dout) throw ContractViolation("unitary channel needs equal input and output dimension");
    ChoiMatrix c = unitary_channel(random_unitary(din, rng));
    c.in_dims = in_dims;
    c.out_dims = out_dims;
    return c;
  }
  const Index env = din * dout;
  return stinespring_channel(random_isometry(dout * env, din, rng), in_dims, out_dims, env);
}

ChoiMatrix random_cptp_choi(const std::vector<Index>& in_dims, const std::vector<Index>& out_dims,
                            std::uint64_t seed, bool unitary) {
  Rng rng(seed);
  return random_cptp_choi(in_dims, out_dims, rng, unitary);
}

// ---- DagSpec ----

void DagSpec::validate() const {
  std::set<SubsystemRef> sources;
  for (const auto& e : edges) {
    auto from = layout.find_party(e.from.party);
    if (!from) throw ContractViolation("edge from unknown party '" + e.from.party + "'");
    if (!layout.party(*from).local_subsystem(e.from.subsystem)) {
      throw ContractViolation("party '" + e.from.party + "' has no output subsystem " +
                              std::to_string(e.from.subsystem));
    }
    if (!layout.find_party(e.to)) throw ContractViolation("edge to unknown party '" + e.to + "'");
    if (e.from.party == e.to) throw ContractViolation("self loop at party '" + e.to + "'");
    if (!sources.insert(e.from).second) {
      throw ContractViolation("subsystem " + std::to_string(e.from.subsystem) + " of party '" + e.from.party +
                              "' feeds more than one edge");
    }
  }
  if (topological_order().size() != layout.party_count()) throw ContractViolation("edges form a cycle");
}

std::vector<std::string> DagSpec::topological_order() const {
  const std::size_t n = layout.party_count();
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : edges) ++indegree[layout.party_index(e.to)];
  std::vector<bool> done(n, false);
  std::vector<std::string> order;
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t p = 0; p < n; ++p) {
      if (done[p] || indegree[p] != 0) continue;
      done[p] = true;
      progress = true;
      order.push_back(layout.party(p).name);
      for (const auto& e : edges) {
        if (e.from.party == layout.party(p).name) --indegree[layout.party_index(e.to)];
      }
      break;
    }
  }
  return order;
}

std::vector<SubsystemRef> DagSpec::parents_of(const std::string& party) const {
  std::vector<SubsystemRef> parents;
  for (const auto& e : edges) {
    if (e.to == party) parents.push_back(e.from);
  }
  auto position = [&](const SubsystemRef& r) {
    return *layout.subsystem_factor(layout.party_index(r.party), r.subsystem);
  };
  std::sort(parents.begin(), parents.end(),
            [&](const SubsystemRef& a, const SubsystemRef& b) { return position(a) < position(b); });
  return parents;
}

std::vector<SubsystemRef> DagSpec::open_subsystems() const {
  std::set<SubsystemRef> sources;
  for (const auto& e : edges) sources.insert(e.from);
  std::vector<SubsystemRef> open;
  for (const auto& p : layout.parties()) {
    if (p.output_subdims.size() < 2) continue;
    for (std::size_t i = 0; i < p.output_subdims.size(); ++i) {
      const SubsystemRef ref{p.name, p.subsystem_id(i)};
      if (!sources.count(ref)) open.push_back(ref);
    }
  }
  return open;
}

std::vector<std::string> DagSpec::state_parties() const {
  std::vector<std::string> out;
  for (const auto& p : layout.parties()) {
    if (parents_of(p.name).empty()) out.push_back(p.name);
  }
  return out;
}

std::vector<std::string> DagSpec::last_parties() const {
  std::vector<std::string> out;
  for (const auto& p : layout.parties()) {
    const bool feeds = std::any_of(edges.begin(), edges.end(), [&](const Edge& e) { return e.from.party == p.name; });
    if (!feeds) out.push_back(p.name);
  }
  return out;
}

json dag_spec_to_json(const DagSpec& spec) {
  json edges = json::array();
  for (const auto& e : spec.edges) {
    edges.push_back({{"from", json::array({e.from.party, e.from.subsystem})}, {"to", e.to}});
  }
  return {{"parties", parties_to_json(spec.layout)}, {"edges", edges}};
}

DagSpec dag_spec_from_json(const json& j) {
  DagSpec spec;
  try {
    spec.layout = parties_from_json(j.at("parties"));
    for (const auto& e : j.at("edges")) {
      const auto& from = e.at("from");
      if (!from.is_array() || from.size() != 2) throw ParseError("edge \"from\" must be [party, subsystem]");
      spec.edges.push_back({{from[0].get<std::string>(), from[1].get<int>()}, e.at("to").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("DAG spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json ground_truth_to_json(const GroundTruth& truth) {
  json open = json::array();
  for (const auto& r : truth.open) open.push_back(json::array({r.party, r.subsystem}));
  return {{"format", "qcausal-truth-v1"},
          {"rng", Rng::kName},
          {"seed", truth.seed},
          {"spec", dag_spec_to_json(truth.dag)},
          {"open_subsystems", open},
          {"state_parties", truth.dag.state_parties()},
          {"last_parties", truth.dag.last_parties()},
          {"pieces", pieces_to_json(truth.pieces)}};
}

// ---- Markovian construction ----

namespace {

MarkovPieces identity_placement(const DagSpec& spec) {
  MarkovPieces pieces;
  pieces.last_parties = spec.last_parties();
  const std::set<std::string> last(pieces.last_parties.begin(), pieces.last_parties.end());
  std::set<SubsystemRef> sources;
  for (const auto& e : spec.edges) sources.insert(e.from);
  for (const auto& p : spec.layout.parties()) {
    if (last.count(p.name)) continue;
    for (std::size_t i = 0; i < p.output_subdims.size(); ++i) {
      const SubsystemRef ref{p.name, p.subsystem_id(i)};
      if (!sources.count(ref)) pieces.open_outputs.push_back(ref);
    }
  }
  return pieces;
}

MarkovPieces draw_pieces(const DagSpec& spec, Rng& rng) {
  spec.validate();
  MarkovPieces pieces = identity_placement(spec);
  const auto& layout = spec.layout;
  for (const auto& p : layout.parties()) {
    const auto parents = spec.parents_of(p.name);
    if (parents.empty()) {
      pieces.states.push_back({p.name, random_density(p.input_dim, rng)});
      continue;
    }
    std::vector<Index> in_dims;
    for (const auto& r : parents) {
      in_dims.push_back(layout.factors()[*layout.subsystem_factor(layout.party_index(r.party), r.subsystem)].dim);
    }
    pieces.channels.push_back({p.name, parents, random_cptp_choi(in_dims, {p.input_dim}, rng)});
  }
  return pieces;
}

}  // namespace

GroundTruth markovian_process(const DagSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  MarkovPieces pieces = draw_pieces(spec, rng);
  ProcessMatrix w = build_test_matrix(spec.layout, pieces);
  return {std::move(w), spec, std::move(pieces), spec.open_subsystems(), seed};
}

ProcessMatrix assemble_markovian(const DagSpec& spec, const std::vector<StatePiece>& states,
                                 const std::vector<ChannelPiece>& channels) {
  spec.validate();
  MarkovPieces pieces = identity_placement(spec);
  pieces.states = states;
  pieces.channels = channels;
  return build_test_matrix(spec.layout, pieces);
}

ProcessMatrix contract_party(const ProcessMatrix& w, const std::string& party, const ChoiMatrix& choi) {
  const auto& layout = w.layout();
  const std::size_t p = layout.party_index(party);
  const auto& spec = layout.party(p);
  check_dims(choi);
  if (choi.in_dim() != spec.input_dim || choi.out_dim() != spec.output_dim()) {
    throw ContractViolation("map dimensions do not match party '" + party + "'");
  }
  const FactorList factors = layout.party_factors(p);
  ComplexMatrix reduced = contract_factors(w.matrix(), w.shape(), factors, choi.matrix.transpose());
  return ProcessMatrix(layout.without_factors(factors), std::move(reduced));
}

ProcessMatrix contract_latents(const DagSpec& spec, const MarkovPieces& pieces,
                               const std::vector<std::string>& latents) {
  spec.validate();
  const auto& layout = spec.layout;
  const auto& factors = layout.factors();

  std::vector<FactorBlock> blocks;  // in topological order of the party they feed
  std::set<SubsystemRef> sources;
  for (const auto& e : spec.edges) sources.insert(e.from);
  for (const auto& name : spec.topological_order()) {
    const std::size_t p = layout.party_index(name);
    const std::size_t input = layout.input_factor(p);
    for (const auto& s : pieces.states) {
      if (s.party == name) blocks.push_back({s.rho, {input}});
    }
    for (const auto& c : pieces.channels) {
      if (c.party != name) continue;
      FactorList f;
      for (const auto& r : c.parents) f.push_back(*layout.subsystem_factor(layout.party_index(r.party), r.subsystem));
      f.push_back(input);
      blocks.push_back({c.choi.matrix, std::move(f)});
    }
    for (std::size_t f : layout.output_factors(p)) {
      if (!sources.count({name, factors[f].subsystem})) blocks.push_back({identity_matrix(factors[f].dim), {f}});
    }
  }

  ComplexMatrix cur = ComplexMatrix::Identity(1, 1);
  FactorList held;  // extended flat index of each factor of cur
  std::vector<Index> held_dims;
  std::vector<std::string> pending = latents;
  FactorList removed;

  auto position = [&](std::size_t f) {
    return static_cast<std::size_t>(std::find(held.begin(), held.end(), f) - held.begin());
  };

  for (const auto& block : blocks) {
    cur = kron(cur, block.matrix);
    for (std::size_t f : block.factors) {
      held.push_back(f);
      held_dims.push_back(factors[f].dim);
    }
    for (auto it = pending.begin(); it != pending.end();) {
      const std::size_t p = layout.party_index(*it);
      const FactorList pf = layout.party_factors(p);
      if (!std::all_of(pf.begin(), pf.end(), [&](std::size_t f) { return position(f) < held.size(); })) {
        ++it;
        continue;
      }
      // identity channel on input ⊗ output, permuted to the held positions
      const auto& party = layout.party(p);
      const ChoiMatrix id = identity_channel({party.input_dim}, party.output_subdims);
      FactorList pos;
      std::vector<Index> pf_dims;
      for (std::size_t f : pf) {
        pos.push_back(position(f));
        pf_dims.push_back(factors[f].dim);
      }
      FactorList sorted = pos;
      std::sort(sorted.begin(), sorted.end());
      FactorList perm;
      for (std::size_t q : pos) {
        perm.push_back(static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), q) - sorted.begin()));
      }
      const ComplexMatrix op = reorder_systems(ComplexMatrix(id.matrix.transpose()), SystemShape(pf_dims), perm);
      cur = contract_factors(cur, SystemShape(held_dims), sorted, op);
      for (auto k = sorted.rbegin(); k != sorted.rend(); ++k) {
        held.erase(held.begin() + static_cast<std::ptrdiff_t>(*k));
        held_dims.erase(held_dims.begin() + static_cast<std::ptrdiff_t>(*k));
      }
      removed.insert(removed.end(), pf.begin(), pf.end());
      it = pending.erase(it);
    }
  }
  if (!pending.empty()) throw ContractViolation("latent party '" + pending.front() + "' was never contracted");

  FactorList sorted = held;
  std::sort(sorted.begin(), sorted.end());
  FactorList perm;
  for (std::size_t f : held) {
    perm.push_back(static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), f) - sorted.begin()));
  }
  cur = reorder_systems(cur, SystemShape(held_dims), perm);
  std::sort(removed.begin(), removed.end());
  return ProcessMatrix(layout.without_factors(removed), std::move(cur));
}

DagSpec comb_extended_spec(int n, Index d, Index m) {
  if (n < 2) throw ContractViolation("a comb needs at least two parties");
  if (d < 1 || m < 1) throw ContractViolation("comb dimensions must be >= 1");
  auto latent = [](int k) { return "L" + std::to_string(k); };
  std::vector<PartySpec> parties;
  for (int k = 1; k <= n; ++k) parties.push_back({std::to_string(k), d, {d}, {}});
  for (int k = 0; k < n - 1; ++k) parties.push_back({latent(k), d * m, {d, m}, {}});
  parties.push_back({latent(n - 1), d, {d}, {}});

  DagSpec spec{SystemLayout(std::move(parties)), {}};
  spec.edges.push_back({{latent(0), 0}, "1"});
  for (int k = 1; k < n; ++k) {
    spec.edges.push_back({{std::to_string(k), 0}, latent(k)});
    spec.edges.push_back({{latent(k - 1), 1}, latent(k)});
    if (k < n - 1) spec.edges.push_back({{latent(k), 0}, std::to_string(k + 1)});
  }
  spec.edges.push_back({{latent(n - 1), 0}, std::to_string(n)});
  spec.validate();
  return spec;
}

ProcessMatrix comb_with_memory(int n, Index d, Index m, std::uint64_t seed) {
  const DagSpec spec = comb_extended_spec(n, d, m);
  Rng rng(seed);
  const MarkovPieces pieces = draw_pieces(spec, rng);
  std::vector<std::string> latents;
  for (int k = 0; k < n; ++k) latents.push_back("L" + std::to_string(k));
  return contract_latents(spec, pieces, latents);
}

ProcessMatrix mixture(double q, const ProcessMatrix& w1, const ProcessMatrix& w2) {
  if (!(q >= 0.0 && q <= 1.0)) throw ContractViolation("q must lie in [0, 1]");
  if (!(w1.layout() == w2.layout())) throw LayoutError("mixture terms have different layouts");
  return ProcessMatrix(w1.layout(), q * w1.matrix() + (1.0 - q) * w2.matrix());
}

ProcessMatrix identity_channel_process(Index d, bool reversed) {
  DagSpec spec{SystemLayout({{"A", d, {d}, {}}, {"B", d, {d}, {}}}), {}};
  const std::string first = reversed ? "B" : "A";
  const std::string second = reversed ? "A" : "B";
  spec.edges.push_back({{first, 0}, second});
  const ComplexMatrix mixed = identity_matrix(d) / static_cast<double>(d);
  return assemble_markovian(spec, {{first, mixed}}, {{second, {{first, 0}}, identity_channel(d)}});
}

DagSpec appendix_dag_spec() {
  DagSpec spec{SystemLayout({{"1", 2, {2, 2}, {}}, {"2", 2, {2, 2, 2}, {}}, {"3", 2, {2}, {}}, {"4", 2, {4}, {}}}),
               {{{"3", 0}, "1"}, {{"1", 0}, "2"}, {{"1", 1}, "4"}, {{"2", 2}, "4"}}};
  spec.validate();
  return spec;
}

DagSpec random_dag_spec(int n, std::uint64_t seed) {
  if (n < 1) throw ContractViolation("need at least one party");
  Rng rng(seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  int extra = 2;
  std::vector<PartySpec> parties;
  for (int k = 1; k <= n; ++k) {
    std::vector<Index> subdims{2};
    if (extra > 0 && rng.uniform() < 0.5) {
      subdims.push_back(2);
      --extra;
    }
    parties.push_back({std::to_string(k), 2, subdims, {}});
  }

  DagSpec spec{SystemLayout(parties), {}};
  for (std::size_t t = 0; t < order.size(); ++t) {
    const auto& party = parties[order[t]];
    const std::size_t later = order.size() - 1 - t;
    for (std::size_t i = 0; i < party.output_subdims.size(); ++i) {
      if (later == 0 || rng.uniform() >= 0.6) continue;
      const std::size_t target = order[t + 1 + rng.below(later)];
      spec.edges.push_back({{party.name, static_cast<int>(i)}, parties[target].name});
    }
  }
  std::sort(spec.edges.begin(), spec.edges.end());
  spec.validate();
  return spec;
}

DagSpec chain_dag_spec(int n) {
  if (n < 1) throw ContractViolation("need at least one party");
  std::vector<PartySpec> parties;
  for (int k = 1; k <= n; ++k) parties.push_back({std::to_string(k), 2, {2}, {}});
  DagSpec spec{SystemLayout(std::move(parties)), {}};
  for (int k = 1; k < n; ++k) spec.edges.push_back({{std::to_string(k), 0}, std::to_string(k + 1)});
  return spec;
}

}  // namespace qcausal
