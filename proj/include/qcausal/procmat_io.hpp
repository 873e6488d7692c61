#pragma once

// procmat-v1: JSON process-matrix files.
//
//   {"format":"procmat-v1",
//    "parties":[{"name":"1","input_dim":2,"output_subdims":[2,2]}, ...],
//    "matrix":{"dim":4096,"layout":"row-major","entries":[[re,im], ...]}}
//
// Entries follow the layout's flat factor order, Kronecker left = most
// significant. Doubles are written with 17 significant digits, so a
// save/load round trip is bit-exact.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "qcausal/process.hpp"

namespace qcausal {

inline constexpr const char* kProcmatFormat = "procmat-v1";

ProcessMatrix read_procmat(const std::string& text, const std::string& source = "<string>");
ProcessMatrix load_procmat(const std::filesystem::path& path);

void write_procmat(std::ostream& os, const ProcessMatrix& w);
void save_procmat(const ProcessMatrix& w, const std::filesystem::path& path);

/// Parties array as used by procmat-v1 and DagSpec files.
nlohmann::json parties_to_json(const SystemLayout& layout);
SystemLayout parties_from_json(const nlohmann::json& parties);

/// Dense matrix as [[re,im], ...] rows (small matrices in reports/sidecars).
nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j);

/// Text that reads back to the same double: 17 significant digits, and
/// "-0.0" for negative zero so the sign survives integer parsing.
std::string format_double(double v);

}  // namespace qcausal
