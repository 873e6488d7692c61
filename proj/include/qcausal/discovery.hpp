#pragma once

// Causal discovery on a process matrix, in three stages:
//
//  1. Open output subsystems: every declared subsystem S of a party with two
//     or more output subsystems is tested for W = (1_S/d_S) ⊗ Tr_S W. The
//     ones that pass are reported and traced out.
//  2. Causal order: parties whose whole remaining output carries a
//     normalized identity form the last non-signaling set; they are traced
//     out (inputs and outputs) and the test repeats. The process is causally
//     ordered iff every party ends up in a set.
//  3. Arrows and Markovianity: for each receiver A, Tr_{A_I} W is tested for
//     an identity on every not-yet-used output (sub)system of parties in
//     strictly earlier sets. States, channels and last-party identities are
//     then extracted and reassembled; the process is Markovian iff the
//     reassembled test matrix equals W.
//
// Every identity test compares entries with an absolute tolerance eps.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qcausal/causal_model.hpp"

namespace qcausal {

enum class ReceiverOrder { EarliestFirst, LatestFirst };

struct DiscoveryOptions {
  double eps = kDefaultEps;
  ValidationTolerances validation{};
  ReceiverOrder receiver_order = ReceiverOrder::EarliestFirst;
};

struct PeelResult {
  /// Sets found, first to last. When peeling stalls this holds only the
  /// trailing sets that were found.
  CausalOrder order;
  /// Parties left when no remaining party passed the last-set test.
  std::vector<std::string> ungrouped;

  bool complete() const { return ungrouped.empty(); }
};

struct DiscoveryReport {
  double eps = kDefaultEps;
  /// Layout of the input process.
  SystemLayout layout;
  std::vector<SubsystemRef> open_subsystems;
  bool causally_ordered = false;
  CausalOrder causal_order;
  std::vector<std::string> ungrouped;
  /// All arrows in discovery order; primal ones join successive sets.
  std::vector<Arrow> arrows;
  std::vector<Arrow> primal_arrows;
  std::vector<Arrow> secondary_arrows;
  bool markovian = false;
  /// Arrows come with a Markovian verdict; otherwise they are raw test hits.
  bool arrows_reliable = false;
  /// max |W - W_test| after stage-1 reduction, when a test matrix was built.
  std::optional<double> markov_deviation;
  std::optional<Dag> dag;
  std::optional<MarkovPieces> pieces;
  /// Evaluations of the open-output and channel identity tests.
  std::size_t constraint_tests = 0;
};

std::vector<SubsystemRef> find_open_subsystems(const ProcessMatrix& w, double eps,
                                               std::size_t* tests = nullptr);

/// Traces out the listed subsystems and divides by their dimensions, which
/// leaves a process normalized for the remaining systems.
ProcessMatrix trace_open_subsystems(const ProcessMatrix& w, const std::vector<SubsystemRef>& open);

PeelResult peel_causal_order(const ProcessMatrix& w, double eps, std::size_t* tests = nullptr);

/// Candidate sources listed in `open` are never tested. whole_output is
/// judged on w's layout; discover() re-judges it on the undivided input.
std::vector<Arrow> find_arrows(const ProcessMatrix& w, const CausalOrder& order,
                               const std::vector<SubsystemRef>& open, double eps,
                               std::size_t* tests = nullptr,
                               ReceiverOrder receivers = ReceiverOrder::EarliestFirst);

/// Input state of a party: W reduced to its input factor, trace 1.
ComplexMatrix extract_state(const ProcessMatrix& w, const std::string& party);

/// Channel from `parents` (kept in the given order) into the party's input:
/// W reduced to those factors, reordered parents-first, trace d_parents.
ChoiMatrix extract_channel(const ProcessMatrix& w, const std::vector<SubsystemRef>& parents,
                           const std::string& party);

/// Mechanism pieces for the DAG given by `arrows`, or nullopt when some
/// output of a non-last party is neither an arrow source nor open (no
/// Markovian factorization can cover it).
std::optional<MarkovPieces> extract_pieces(const ProcessMatrix& w, const CausalOrder& order,
                                           const std::vector<Arrow>& arrows);

bool is_markovian(const ProcessMatrix& w, const ProcessMatrix& w_test, double eps = kDefaultEps);

/// Splits arrows into those joining successive sets and the rest. Primal
/// arrows are listed from the last pair of sets backwards.
std::pair<std::vector<Arrow>, std::vector<Arrow>> split_primal(const std::vector<Arrow>& arrows,
                                                               const CausalOrder& order);

/// Throws RejectedInput if w fails validation.
DiscoveryReport discover(const ProcessMatrix& w, const DiscoveryOptions& options = {});

/// Checks W = q W_ab + (1-q) W_ba for a bipartite layout (party 0 = A,
/// party 1 = B): the combination matches within eps, and every term with
/// nonzero weight is a valid process with an identity on its last party's
/// output (B for W_ab, A for W_ba).
bool verify_two_order_decomposition(const ProcessMatrix& w, double q, const ProcessMatrix& w_ab,
                                    const ProcessMatrix& w_ba, double eps = kDefaultEps);

}  // namespace qcausal
