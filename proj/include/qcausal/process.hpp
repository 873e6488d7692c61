#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcausal/tensor.hpp"

namespace qcausal {

/// Subsystem id used for the dim-1 output left behind when every output
/// subsystem of a party has been traced out.
inline constexpr int kRemnantSubsystem = -1;

/// One party (quantum event): an input system and an output split into
/// ordered subsystems. A single subsystem means an undivided output.
struct PartySpec {
  std::string name;
  Index input_dim = 1;
  std::vector<Index> output_subdims{1};
  /// Stable ids of the output subsystems; empty means 0, 1, ... in order.
  /// Ids survive trace_out so reduced processes still name subsystems by
  /// their position in the original declaration.
  std::vector<int> subsystem_ids;

  Index output_dim() const;
  int subsystem_id(std::size_t local) const;
  std::optional<std::size_t> local_subsystem(int id) const;

  bool operator==(const PartySpec&) const;
};

enum class FactorKind { Input, Output };

/// One entry of the flat factor list.
struct Factor {
  std::size_t party = 0;
  FactorKind kind = FactorKind::Input;
  std::size_t local = 0;  // position within output_subdims (outputs only)
  int subsystem = 0;      // subsystem id (outputs only)
  Index dim = 1;
};

/// Party sequence plus the derived flat factor order: for each party, its
/// input then its output subsystems.
class SystemLayout {
 public:
  SystemLayout() = default;
  explicit SystemLayout(std::vector<PartySpec> parties);

  const std::vector<PartySpec>& parties() const { return parties_; }
  std::size_t party_count() const { return parties_.size(); }
  const PartySpec& party(std::size_t p) const { return parties_.at(p); }
  std::optional<std::size_t> find_party(std::string_view name) const;
  /// Throws LayoutError for unknown names.
  std::size_t party_index(std::string_view name) const;

  const std::vector<Factor>& factors() const { return factors_; }
  SystemShape shape() const;
  Index total_dim() const;
  /// Product over parties of d_{A_O}.
  Index output_product() const;

  std::size_t input_factor(std::size_t party) const;
  FactorList output_factors(std::size_t party) const;
  FactorList party_factors(std::size_t party) const;
  std::optional<std::size_t> subsystem_factor(std::size_t party, int subsystem) const;

  /// Layout with the listed flat factors removed. A party losing every factor
  /// disappears; one losing only its input keeps a dim-1 input; one losing all
  /// outputs keeps a dim-1 remnant output.
  SystemLayout without_factors(const FactorList& removed) const;

  bool operator==(const SystemLayout& other) const { return parties_ == other.parties_; }

 private:
  std::vector<PartySpec> parties_;
  std::vector<Factor> factors_;
  std::vector<std::size_t> first_factor_;
};

/// A named output subsystem, identified by its subsystem id.
struct SubsystemRef {
  std::string party;
  int subsystem = 0;

  auto operator<=>(const SubsystemRef&) const = default;
};

/// A process matrix W together with its layout.
class ProcessMatrix {
 public:
  /// Throws LayoutError if the side does not match the layout, or the
  /// matrix has non-finite entries.
  ProcessMatrix(SystemLayout layout, ComplexMatrix matrix);

  const SystemLayout& layout() const { return layout_; }
  const ComplexMatrix& matrix() const { return matrix_; }
  SystemShape shape() const { return layout_.shape(); }
  Index dim() const { return matrix_.rows(); }

 private:
  SystemLayout layout_;
  ComplexMatrix matrix_;
};

struct ValidationTolerances {
  double hermiticity = 1e-8;
  double psd = 1e-8;
  /// Relative to the expected trace, prod d_{A_O}.
  double trace = 1e-6;
};

struct ValidationIssue {
  enum class Check { Hermiticity, PositiveSemidefinite, TraceNormalization };
  enum class Severity { Warning, Error };

  Check check;
  Severity severity;
  double violation;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  /// No Error-severity issue. Trace warnings alone keep a process valid.
  bool valid() const;
  std::string summary() const;
};

std::string_view check_name(ValidationIssue::Check check);

/// Hermiticity, positivity and trace normalization Tr W = prod d_{A_O}.
/// The trace check warns between tol.trace and 10*tol.trace and fails beyond.
ValidationReport validate(const ProcessMatrix& w, const ValidationTolerances& tol = {});

enum class SystemKind { Input, Output, OutputSubsystem };

/// Target of trace_out: an input, a whole output, or one output subsystem.
struct SystemRef {
  std::string party;
  SystemKind kind = SystemKind::Input;
  int subsystem = 0;

  static SystemRef input(std::string party) { return {std::move(party), SystemKind::Input, 0}; }
  static SystemRef output(std::string party) { return {std::move(party), SystemKind::Output, 0}; }
  static SystemRef subsystem_of(const SubsystemRef& ref) {
    return {ref.party, SystemKind::OutputSubsystem, ref.subsystem};
  }
};

/// Flat factor positions a set of SystemRefs resolves to (sorted, unique).
FactorList resolve_factors(const SystemLayout& layout, const std::vector<SystemRef>& targets);

ProcessMatrix trace_out(const ProcessMatrix& w, const std::vector<SystemRef>& targets);
ProcessMatrix trace_out_factors(const ProcessMatrix& w, const FactorList& factors);
/// Traces out every factor of the named parties.
ProcessMatrix remove_parties(const ProcessMatrix& w, const std::vector<std::string>& parties);

/// A dense block living on a list of flat factors, in the listed order.
struct FactorBlock {
  ComplexMatrix matrix;
  FactorList factors;
};

/// Kronecker product of the blocks, reordered into the layout's flat order.
/// Every factor must be covered exactly once (ContractViolation otherwise).
ComplexMatrix assemble_blocks(const SystemLayout& layout, const std::vector<FactorBlock>& blocks);

}  // namespace qcausal
