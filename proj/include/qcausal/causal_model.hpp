#pragma once

// Causal-model data: arrows, causal orders, DAGs and the mechanism pieces
// (input states, channels, identities) a Markovian process factorizes into.

#include <optional>
#include <string>
#include <vector>

#include "qcausal/channel.hpp"
#include "qcausal/process.hpp"

namespace qcausal {

/// Channel from an output (sub)system into a party's input.
struct Arrow {
  SubsystemRef source;
  std::string target;
  /// Source party declares an undivided output.
  bool whole_output = false;

  auto operator<=>(const Arrow&) const = default;
};

/// Maximal non-signaling sets, first to last.
struct CausalOrder {
  std::vector<std::vector<std::string>> sets;

  /// Index of the set holding the party, if any.
  std::optional<std::size_t> set_of(const std::string& party) const;
  bool operator==(const CausalOrder&) const = default;
};

struct StatePiece {
  std::string party;
  ComplexMatrix rho;
};

/// Channel from the parent subsystems (in the listed order) into the party's input.
struct ChannelPiece {
  std::string party;
  std::vector<SubsystemRef> parents;
  ChoiMatrix choi;
};

/// Factors of a Markovian process: states on parentless inputs, one channel
/// per party with parents, identity on last-party outputs and on any other
/// edge-free output subsystem.
struct MarkovPieces {
  std::vector<StatePiece> states;
  std::vector<ChannelPiece> channels;
  std::vector<std::string> last_parties;
  std::vector<SubsystemRef> open_outputs;
};

struct Dag {
  std::vector<std::string> nodes;
  std::vector<Arrow> edges;
  /// Parties without incoming arrows; their inputs carry extracted states.
  std::vector<std::string> state_parties;
  /// Last-set parties; their whole outputs are open.
  std::vector<std::string> open_output_parties;
};

/// Kronecker product of all pieces plus identities, reordered into the
/// layout's flat order. Every factor must be covered exactly once.
ProcessMatrix build_test_matrix(const SystemLayout& layout, const MarkovPieces& pieces);

}  // namespace qcausal
