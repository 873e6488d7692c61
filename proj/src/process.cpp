#include "qcausal/process.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace qcausal {

Index PartySpec::output_dim() const {
  Index d = 1;
  for (Index s : output_subdims) d = detail::checked_mul(d, s);
  return d;
}

int PartySpec::subsystem_id(std::size_t local) const {
  return subsystem_ids.empty() ? static_cast<int>(local) : subsystem_ids.at(local);
}

std::optional<std::size_t> PartySpec::local_subsystem(int id) const {
  for (std::size_t i = 0; i < output_subdims.size(); ++i) {
    if (subsystem_id(i) == id) return i;
  }
  return std::nullopt;
}

bool PartySpec::operator==(const PartySpec& other) const {
  if (name != other.name || input_dim != other.input_dim ||
      output_subdims != other.output_subdims) {
    return false;
  }
  for (std::size_t i = 0; i < output_subdims.size(); ++i) {
    if (subsystem_id(i) != other.subsystem_id(i)) return false;
  }
  return true;
}

SystemLayout::SystemLayout(std::vector<PartySpec> parties) : parties_(std::move(parties)) {
  std::set<std::string> names;
  Index total = 1;
  for (std::size_t p = 0; p < parties_.size(); ++p) {
    const auto& party = parties_[p];
    if (!names.insert(party.name).second) {
      throw LayoutError("duplicate party name '" + party.name + "'");
    }
    if (party.input_dim < 1) throw LayoutError("party '" + party.name + "': input_dim must be >= 1");
    if (party.output_subdims.empty()) {
      throw LayoutError("party '" + party.name + "': needs at least one output subsystem");
    }
    if (!party.subsystem_ids.empty() && party.subsystem_ids.size() != party.output_subdims.size()) {
      throw LayoutError("party '" + party.name + "': subsystem id count mismatch");
    }
    std::set<int> ids;
    first_factor_.push_back(factors_.size());
    factors_.push_back({p, FactorKind::Input, 0, 0, party.input_dim});
    total = detail::checked_mul(total, party.input_dim);
    for (std::size_t i = 0; i < party.output_subdims.size(); ++i) {
      const Index d = party.output_subdims[i];
      if (d < 1) throw LayoutError("party '" + party.name + "': output subsystem dims must be >= 1");
      if (!ids.insert(party.subsystem_id(i)).second) {
        throw LayoutError("party '" + party.name + "': duplicate subsystem id");
      }
      factors_.push_back({p, FactorKind::Output, i, party.subsystem_id(i), d});
      total = detail::checked_mul(total, d);
    }
  }
}

std::optional<std::size_t> SystemLayout::find_party(std::string_view name) const {
  for (std::size_t p = 0; p < parties_.size(); ++p) {
    if (parties_[p].name == name) return p;
  }
  return std::nullopt;
}

std::size_t SystemLayout::party_index(std::string_view name) const {
  if (auto p = find_party(name)) return *p;
  throw LayoutError("unknown party '" + std::string(name) + "'");
}

SystemShape SystemLayout::shape() const {
  std::vector<Index> dims;
  dims.reserve(factors_.size());
  for (const auto& f : factors_) dims.push_back(f.dim);
  return SystemShape(std::move(dims));
}

Index SystemLayout::total_dim() const { return shape().total(); }

Index SystemLayout::output_product() const {
  Index d = 1;
  for (const auto& p : parties_) d = detail::checked_mul(d, p.output_dim());
  return d;
}

std::size_t SystemLayout::input_factor(std::size_t party) const { return first_factor_.at(party); }

FactorList SystemLayout::output_factors(std::size_t party) const {
  FactorList out;
  const std::size_t first = first_factor_.at(party) + 1;
  for (std::size_t i = 0; i < parties_[party].output_subdims.size(); ++i) out.push_back(first + i);
  return out;
}

FactorList SystemLayout::party_factors(std::size_t party) const {
  FactorList out{input_factor(party)};
  for (std::size_t f : output_factors(party)) out.push_back(f);
  return out;
}

std::optional<std::size_t> SystemLayout::subsystem_factor(std::size_t party, int subsystem) const {
  if (auto local = parties_.at(party).local_subsystem(subsystem)) {
    return first_factor_[party] + 1 + *local;
  }
  return std::nullopt;
}

SystemLayout SystemLayout::without_factors(const FactorList& removed) const {
  const auto mask = detail::factor_mask(shape(), removed);
  std::vector<PartySpec> kept;
  for (std::size_t p = 0; p < parties_.size(); ++p) {
    const auto& party = parties_[p];
    const bool input_gone = mask[input_factor(p)];
    PartySpec next{party.name, input_gone ? 1 : party.input_dim, {}, {}};
    bool any_output_kept = false;
    for (std::size_t i = 0; i < party.output_subdims.size(); ++i) {
      if (mask[first_factor_[p] + 1 + i]) continue;
      next.output_subdims.push_back(party.output_subdims[i]);
      next.subsystem_ids.push_back(party.subsystem_id(i));
      any_output_kept = true;
    }
    if (input_gone && !any_output_kept) continue;
    if (!any_output_kept) {
      next.output_subdims = {1};
      next.subsystem_ids = {kRemnantSubsystem};
    }
    kept.push_back(std::move(next));
  }
  return SystemLayout(std::move(kept));
}

ProcessMatrix::ProcessMatrix(SystemLayout layout, ComplexMatrix matrix)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
  detail::require_square_over(matrix_, layout_.shape());
  if (!matrix_.allFinite()) throw LayoutError("process matrix has non-finite entries");
}

bool ValidationReport::valid() const {
  return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
    return i.severity == ValidationIssue::Severity::Error;
  });
}

std::string_view check_name(ValidationIssue::Check check) {
  switch (check) {
    case ValidationIssue::Check::Hermiticity: return "hermiticity";
    case ValidationIssue::Check::PositiveSemidefinite: return "positive-semidefinite";
    case ValidationIssue::Check::TraceNormalization: return "trace-normalization";
  }
  return "unknown";
}

std::string ValidationReport::summary() const {
  if (issues.empty()) return "valid";
  std::ostringstream os;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i) os << "; ";
    os << issues[i].message;
  }
  return os.str();
}

ValidationReport validate(const ProcessMatrix& w, const ValidationTolerances& tol) {
  using Check = ValidationIssue::Check;
  using Severity = ValidationIssue::Severity;
  ValidationReport report;
  const auto& m = w.matrix();

  const double herm = hermiticity_deviation(m);
  if (herm > tol.hermiticity) {
    report.issues.push_back({Check::Hermiticity, Severity::Error, herm,
                             "hermiticity violated: max |W - W^dag| = " + std::to_string(herm)});
  }

  if (!is_positive_semidefinite(m, tol.psd)) {
    const double lambda = min_eigenvalue(m);
    report.issues.push_back({Check::PositiveSemidefinite, Severity::Error, -lambda,
                             "not positive semidefinite: min eigenvalue = " + std::to_string(lambda)});
  }

  const double expected = static_cast<double>(w.layout().output_product());
  const double trace = m.trace().real();
  const double rel = std::abs(trace - expected) / expected;
  if (rel > tol.trace) {
    const Severity sev = rel > 10.0 * tol.trace ? Severity::Error : Severity::Warning;
    std::ostringstream os;
    os << "trace " << trace << " differs from prod d_O = " << expected << " (relative " << rel << ")";
    report.issues.push_back({Check::TraceNormalization, sev, rel, os.str()});
  }
  return report;
}

FactorList resolve_factors(const SystemLayout& layout, const std::vector<SystemRef>& targets) {
  std::set<std::size_t> out;
  for (const auto& t : targets) {
    const std::size_t p = layout.party_index(t.party);
    switch (t.kind) {
      case SystemKind::Input:
        out.insert(layout.input_factor(p));
        break;
      case SystemKind::Output:
        for (std::size_t f : layout.output_factors(p)) out.insert(f);
        break;
      case SystemKind::OutputSubsystem: {
        auto f = layout.subsystem_factor(p, t.subsystem);
        if (!f) {
          throw LayoutError("party '" + t.party + "' has no output subsystem " +
                            std::to_string(t.subsystem));
        }
        out.insert(*f);
        break;
      }
    }
  }
  return {out.begin(), out.end()};
}

ProcessMatrix trace_out_factors(const ProcessMatrix& w, const FactorList& factors) {
  if (factors.empty()) return w;
  ComplexMatrix reduced = partial_trace(w.matrix(), w.shape(), factors);
  return ProcessMatrix(w.layout().without_factors(factors), std::move(reduced));
}

ProcessMatrix trace_out(const ProcessMatrix& w, const std::vector<SystemRef>& targets) {
  return trace_out_factors(w, resolve_factors(w.layout(), targets));
}

ProcessMatrix remove_parties(const ProcessMatrix& w, const std::vector<std::string>& parties) {
  std::vector<SystemRef> targets;
  for (const auto& name : parties) {
    targets.push_back(SystemRef::input(name));
    targets.push_back(SystemRef::output(name));
  }
  return trace_out(w, targets);
}

ComplexMatrix assemble_blocks(const SystemLayout& layout, const std::vector<FactorBlock>& blocks) {
  const SystemShape shape = layout.shape();
  std::vector<int> covered(shape.size(), 0);
  FactorList order;  // order[k] = flat factor sitting at kron position k
  std::vector<Index> kron_dims;
  for (const auto& block : blocks) {
    Index side = 1;
    for (std::size_t f : block.factors) {
      if (f >= shape.size()) throw ContractViolation("block names factor out of range");
      if (covered[f]++) throw ContractViolation("factor " + std::to_string(f) + " covered twice");
      order.push_back(f);
      kron_dims.push_back(shape[f]);
      side = detail::checked_mul(side, shape[f]);
    }
    if (block.matrix.rows() != side || block.matrix.cols() != side) {
      throw ContractViolation("block side " + std::to_string(block.matrix.rows()) +
                              " does not match its factors (" + std::to_string(side) + ")");
    }
  }
  for (std::size_t f = 0; f < shape.size(); ++f) {
    if (!covered[f]) throw ContractViolation("factor " + std::to_string(f) + " not covered");
  }

  ComplexMatrix product = ComplexMatrix::Ones(1, 1);
  for (const auto& block : blocks) product = kron(product, block.matrix);
  return reorder_systems(product, SystemShape(std::move(kron_dims)), order);
}

}  // namespace qcausal
