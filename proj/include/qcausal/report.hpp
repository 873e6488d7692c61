#pragma once

// Discovery report emission: JSON (lossless round trip), DOT for the DAG,
// and the console summary.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "qcausal/discovery.hpp"

namespace qcausal {

inline constexpr const char* kReportFormat = "qcausal-report-v1";

nlohmann::json pieces_to_json(const MarkovPieces& pieces);
MarkovPieces pieces_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const DiscoveryReport& report);
DiscoveryReport report_from_json(const nlohmann::json& j);

/// Requires report.dag. Nodes and edges are sorted; edge labels are
/// 1-based subsystem numbers, or "O" for a whole output.
std::string report_to_dot(const DiscoveryReport& report);

/// Console summary. Subsystems are numbered from 1 as in the party
/// declaration; causal sets are listed last first.
void print_report(std::ostream& os, const DiscoveryReport& report);

/// "Link from subsystem 2 of party 1 to party 4." / "Link from party 3 to party 1."
std::string describe_arrow(const Arrow& arrow);

}  // namespace qcausal
