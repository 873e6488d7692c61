#pragma once

// Brute-force verification through the probability rule
//
//   p = Tr[W (M^{A_I A_O} ⊗ M^{B_I B_O} ⊗ ...)],
//
// where each party's map enters through its transposed CJ matrix
// M = [I ⊗ M(|phi+><phi+|)]^T on input ⊗ output. Nothing here uses the
// discovery code.

#include <cstdint>
#include <map>
#include <string>

#include "qcausal/process.hpp"

namespace qcausal {

struct CpMapCJ {
  std::string party;
  ComplexMatrix matrix;
};

/// Maps chosen per party; parties not listed apply default_cptp_cj.
struct InstrumentSetting {
  std::map<std::string, CpMapCJ> maps;

  void set(CpMapCJ map) { maps[map.party] = std::move(map); }
};

/// Trace the input, prepare the maximally mixed output: 1_in ⊗ 1_out / d_out.
CpMapCJ default_cptp_cj(const SystemLayout& layout, const std::string& party);

/// Measure `proj` on the input, then prepare `state` on the output. The
/// CJ matrix is proj ⊗ state^T. Throws ContractViolation for non-PSD
/// arguments and DimensionError for wrong sizes.
CpMapCJ prepare_measure_cj(const SystemLayout& layout, const std::string& party, const ComplexMatrix& proj,
                           const ComplexMatrix& state);

/// Throws LayoutError for unknown parties or wrongly sized maps.
double probability(const ProcessMatrix& w, const InstrumentSetting& setting);

/// Largest change of any receiver outcome probability over the sender's
/// settings. Sender: no measurement, then a computational-basis state or
/// one of n_settings random pure states. Receiver: each outcome of the
/// computational basis and of n_settings random bases. Everyone else
/// applies the default map. A zero result means no signaling was detected
/// within this family.
double signaling_strength(const ProcessMatrix& w, const std::string& sender, const std::string& receiver,
                          int n_settings = 4, std::uint64_t seed = 1);

}  // namespace qcausal
