#pragma once

// Ground-truth processes: random states and channels, Markovian processes
// for a given DAG, combs with memory (latent nodes contracted away) and
// mixtures.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcausal/causal_model.hpp"

namespace qcausal {

/// Seeded generator with a platform-independent normal sampler (the
/// standard distributions are implementation-defined).
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64/box-muller/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Real and imaginary parts N(0, 1/2).
  Complex complex_normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

ComplexMatrix ginibre(Index rows, Index cols, Rng& rng);
/// Haar-random unitary (QR of a Ginibre matrix with phases fixed).
ComplexMatrix random_unitary(Index d, Rng& rng);
/// rows x cols with orthonormal columns, rows >= cols.
ComplexMatrix random_isometry(Index rows, Index cols, Rng& rng);
/// Unit column vector.
ComplexMatrix random_pure_state(Index d, Rng& rng);

/// G G^dag / Tr for a d x d Ginibre G: full rank with probability one.
ComplexMatrix random_density(Index d, Rng& rng);
ComplexMatrix random_density(Index d, std::uint64_t seed);

/// Stinespring channel with environment d_in * d_out, or a unitary
/// channel (requires d_in == d_out).
ChoiMatrix random_cptp_choi(const std::vector<Index>& in_dims, const std::vector<Index>& out_dims, Rng& rng,
                            bool unitary = false);
ChoiMatrix random_cptp_choi(const std::vector<Index>& in_dims, const std::vector<Index>& out_dims,
                            std::uint64_t seed, bool unitary = false);

struct Edge {
  SubsystemRef from;
  std::string to;

  auto operator<=>(const Edge&) const = default;
};

struct DagSpec {
  SystemLayout layout;
  std::vector<Edge> edges;

  /// Throws ContractViolation on unknown parties or subsystems, self
  /// loops, a subsystem feeding two edges, or a cycle.
  void validate() const;
  /// Kahn order, ties broken by declaration order.
  std::vector<std::string> topological_order() const;
  /// Parent subsystems of a party, in flat factor order.
  std::vector<SubsystemRef> parents_of(const std::string& party) const;
  /// Edge-free output subsystems of parties with two or more subsystems.
  std::vector<SubsystemRef> open_subsystems() const;
  /// Parties without incoming edges.
  std::vector<std::string> state_parties() const;
  /// Parties without outgoing edges.
  std::vector<std::string> last_parties() const;
};

nlohmann::json dag_spec_to_json(const DagSpec& spec);
DagSpec dag_spec_from_json(const nlohmann::json& j);

struct GroundTruth {
  ProcessMatrix process;
  DagSpec dag;
  MarkovPieces pieces;
  std::vector<SubsystemRef> open;
  std::uint64_t seed = 0;
};

nlohmann::json ground_truth_to_json(const GroundTruth& truth);

/// Random state per parentless input, one random channel per party with
/// parents, identity on every edge-free output subsystem.
GroundTruth markovian_process(const DagSpec& spec, std::uint64_t seed);

/// Same construction from given pieces (states, channels and the identity
/// placement are taken from the spec).
ProcessMatrix assemble_markovian(const DagSpec& spec, const std::vector<StatePiece>& states,
                                 const std::vector<ChannelPiece>& channels);

/// Tr_party[W (M ⊗ 1)] with M = choi^T, the transposed CJ matrix of the map
/// applied at the party. choi is on input ⊗ output.
ProcessMatrix contract_party(const ProcessMatrix& w, const std::string& party, const ChoiMatrix& choi);

/// Contracts the listed parties of the Markovian process given by (spec,
/// pieces) with identity channels, without forming the full matrix: each
/// party is contracted as soon as all factors touching it are assembled.
ProcessMatrix contract_latents(const DagSpec& spec, const MarkovPieces& pieces,
                               const std::vector<std::string>& latents);

/// Extended DAG of a chain of n observed parties "1".."n" (input d, output
/// [d]) joined through a memory of dimension m carried by latent parties
/// L0..L(n-1).
DagSpec comb_extended_spec(int n, Index d, Index m);

/// Markovian process on comb_extended_spec with its latent parties
/// contracted by identity channels. Causally ordered 1 < 2 < ... < n, and
/// non-Markovian for generic seeds when m > 1.
ProcessMatrix comb_with_memory(int n, Index d, Index m, std::uint64_t seed);

/// q w1 + (1 - q) w2.
ProcessMatrix mixture(double q, const ProcessMatrix& w1, const ProcessMatrix& w2);

/// Parties "A" and "B" (input d, output [d]); identity channel A -> B, or
/// B -> A when reversed; the first party receives the maximally mixed state.
ProcessMatrix identity_channel_process(Index d = 2, bool reversed = false);

/// The four-party example with two open subsystems of party 2 (side 4096).
DagSpec appendix_dag_spec();

/// Parties "1".."n" with qubit input and one or two qubit output
/// subsystems (at most n + 2 in total); each subsystem feeds a random later
/// party in a random causal order with probability 0.6, or stays open.
DagSpec random_dag_spec(int n, std::uint64_t seed);

/// Parties "1".."n", qubit input and output, edges k -> k+1.
DagSpec chain_dag_spec(int n);

}  // namespace qcausal
