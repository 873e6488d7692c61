// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "qcausal/oracle.hpp"
#include "qcausal/procmat_io.hpp"
#include "qcausal/report.hpp"
#include "test_support.hpp"

using namespace qcausal;

namespace {

constexpr double kEps = 1e-9;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double peak_rss_mb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_maxrss) / 1024.0;  // ru_maxrss is in KiB on Linux
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail << why;
    pass = false;
  }
};

struct Instance {
  DagSpec spec;
  GroundTruth truth;
  DiscoveryReport report;
};

std::vector<Instance> a2_instances;

Outcome a1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const GroundTruth truth = markovian_process(appendix_dag_spec(), 1);
  DiscoveryOptions options;
  options.eps = kEps;
  const DiscoveryReport r = discover(truth.process, options);
  const double t = seconds_since(t0);
  const double mb = peak_rss_mb();

  std::vector<Arrow> arrows = r.arrows;
  std::sort(arrows.begin(), arrows.end());
  const std::vector<Arrow> expected{{{"1", 0}, "2", false}, {{"1", 1}, "4", false}, {{"2", 2}, "4", false},
                                    {{"3", 0}, "1", true}};
  if (truth.process.dim() != 4096) o.fail("matrix side is not 4096");
  if (r.open_subsystems != std::vector<SubsystemRef>{{"2", 0}, {"2", 1}}) o.fail("open subsystems differ");
  if (!r.causally_ordered || r.causal_order.sets != std::vector<std::vector<std::string>>{{"3"}, {"1"}, {"2"}, {"4"}})
    o.fail("causal order differs");
  if (arrows != expected) o.fail("arrows differ");
  if (!r.markovian) o.fail("not Markovian");
  if (t >= 120.0) o.fail("too slow");
  if (mb >= 4096.0) o.fail("too much memory");
  o.detail << (o.pass ? "" : "; ") << "side 4096, " << r.arrows.size() << " arrows, deviation "
           << r.markov_deviation.value_or(-1.0) << ", " << t << " s, peak " << mb << " MB";
  return o;
}

Outcome a2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  int ok = 0;
  int total = 0;
  DiscoveryOptions options;
  options.eps = kEps;
  for (int n = 2; n <= 4; ++n) {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      DagSpec spec = random_dag_spec(n, seed);
      GroundTruth truth = markovian_process(spec, seed);
      DiscoveryReport r = discover(truth.process, options);
      const std::string mismatch = qtest::roundtrip_mismatch(spec, r);
      ++total;
      if (mismatch.empty()) {
        ++ok;
      } else {
        o.fail("n=" + std::to_string(n) + " seed=" + std::to_string(seed) + ": " + mismatch + "; ");
      }
      a2_instances.push_back({std::move(spec), std::move(truth), std::move(r)});
    }
  }
  const double t = seconds_since(t0);
  if (t >= 60.0) o.fail("too slow; ");
  o.detail << ok << "/" << total << " recovered, " << t << " s";
  return o;
}

Outcome a3() {
  Outcome o;
  int hits = 0;
  for (int n : {2, 3}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto r = discover(comb_with_memory(n, 2, 2, seed), {kEps});
      if (r.causally_ordered && !r.markovian) {
        ++hits;
      } else {
        o.fail("n=" + std::to_string(n) + " seed=" + std::to_string(seed) + " misjudged; ");
      }
    }
  }
  int controls = 0;
  for (int n : {2, 3}) {
    const auto r = discover(comb_with_memory(n, 2, 1, 1), {kEps});
    if (r.causally_ordered && r.markovian) {
      ++controls;
    } else {
      o.fail("memory 1 control with n=" + std::to_string(n) + " not Markovian; ");
    }
  }
  o.detail << hits << "/20 ordered and non-Markovian, " << controls << "/2 memory-1 controls Markovian";
  return o;
}

Outcome a4() {
  Outcome o;
  const auto w_ab = identity_channel_process(2, false);
  const auto w_ba = identity_channel_process(2, true);
  const auto w = mixture(0.5, w_ab, w_ba);
  const auto r = discover(w, {kEps});
  if (r.causally_ordered) o.fail("mixture reported causally ordered; ");
  const bool decomposed = verify_two_order_decomposition(w, 0.5, w_ab, w_ba, kEps);
  if (!decomposed) o.fail("decomposition not confirmed; ");
  o.detail << "causally_ordered=" << r.causally_ordered << ", ungrouped " << qtest::join(r.ungrouped)
           << ", decomposition q=0.5 " << (decomposed ? "confirmed" : "rejected");
  return o;
}

ComplexMatrix projector(const ComplexMatrix& v) { return v * v.adjoint(); }

double complete_instrument_total(const ProcessMatrix& w, std::uint64_t seed) {
  const auto& layout = w.layout();
  Rng rng(seed);
  std::vector<std::vector<CpMapCJ>> outcomes;
  for (const auto& p : layout.parties()) {
    const ComplexMatrix u = random_unitary(p.input_dim, rng);
    const ComplexMatrix sigma = random_density(p.output_dim(), rng);
    std::vector<CpMapCJ> maps;
    for (Index j = 0; j < p.input_dim; ++j) maps.push_back(prepare_measure_cj(layout, p.name, projector(u.col(j)), sigma));
    outcomes.push_back(std::move(maps));
  }
  double total = 0.0;
  std::vector<std::size_t> idx(outcomes.size(), 0);
  while (true) {
    InstrumentSetting s;
    for (std::size_t k = 0; k < idx.size(); ++k) s.set(outcomes[k][idx[k]]);
    total += probability(w, s);
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == outcomes[k].size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return total;
}

Outcome a5() {
  Outcome o;
  std::size_t arrows = 0, certified = 0, pairs = 0, silent = 0, reseeded = 0;
  double worst_total = 0.0;
  for (const auto& inst : a2_instances) {
    const auto& w = inst.truth.process;
    const auto& r = inst.report;
    for (const auto& a : r.arrows) {
      ++arrows;
      double s = signaling_strength(w, a.source.party, a.target, 4, 1);
      for (std::uint64_t extra = 2; s <= 0.01 && extra <= 4; ++extra) {
        ++reseeded;
        std::cerr << "A5: weak signal " << s << " for " << describe_arrow(a) << "; retrying with oracle seed "
                  << extra << "\n";
        s = signaling_strength(w, a.source.party, a.target, 4, extra);
      }
      if (s > 0.01) {
        ++certified;
      } else {
        o.fail("arrow " + describe_arrow(a) + " not certified; ");
      }
    }
    if (!r.causally_ordered) continue;
    for (const auto& x : w.layout().parties()) {
      for (const auto& y : w.layout().parties()) {
        if (x.name == y.name || *r.causal_order.set_of(y.name) > *r.causal_order.set_of(x.name)) continue;
        ++pairs;
        const double s = signaling_strength(w, x.name, y.name, 4, 1);
        if (s <= 1e-7) {
          ++silent;
        } else {
          o.fail(x.name + " signals to earlier " + y.name + "; ");
        }
      }
    }
    worst_total = std::max(worst_total, std::abs(complete_instrument_total(w, inst.truth.seed) - 1.0));
  }
  if (worst_total > 1e-9) o.fail("complete instruments do not sum to one; ");
  o.detail << certified << "/" << arrows << " arrows signal > 0.01 (" << reseeded << " oracle re-seeds), " << silent
           << "/" << pairs << " later-to-earlier pairs <= 1e-7, max |sum p - 1| = " << worst_total;
  return o;
}

Outcome a6() {
  Outcome o;
  for (int n = 2; n <= 5; ++n) {
    const auto r = discover(markovian_process(chain_dag_spec(n), 1).process, {kEps});
    const std::size_t bound = 2 * n * n + n * n;  // one output subsystem per party
    if (r.constraint_tests > bound) o.fail("n=" + std::to_string(n) + " exceeds the bound; ");
    o.detail << (n > 2 ? ", " : "") << "n=" << n << ": " << r.constraint_tests << " <= " << bound;
  }
  return o;
}

Outcome a7() {
  Outcome o;
  std::size_t arrows = 0, essential = 0;
  for (const auto& inst : a2_instances) {
    const auto& r = inst.report;
    if (!r.pieces) continue;
    const auto reduced = trace_open_subsystems(inst.truth.process, r.open_subsystems);
    for (const auto& a : r.arrows) {
      ++arrows;
      if (!is_markovian(reduced, qtest::drop_arrow_test_matrix(reduced.layout(), *r.pieces, a), kEps)) {
        ++essential;
      } else {
        o.fail("arrow " + describe_arrow(a) + " is removable; ");
      }
    }
  }
  if (arrows == 0) o.fail("no arrows to test; ");
  o.detail << essential << "/" << arrows << " arrows essential";
  return o;
}

Outcome a8() {
  Outcome o;
  std::mt19937_64 gen(2024);
  double worst_pt = 0.0, worst_re = 0.0, worst_kr = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto dims = qtest::random_dims(gen);
    const Index n = qtest::product(dims);
    const auto m = qtest::random_matrix(n, n, gen);
    const auto traced = qtest::random_subset(dims.size(), gen);
    worst_pt = std::max(worst_pt, max_abs_diff(partial_trace(m, SystemShape(dims), traced),
                                               qtest::ref_partial_trace(m, dims, traced)));
    const auto perm = qtest::random_permutation(dims.size(), gen);
    worst_re = std::max(worst_re, max_abs_diff(reorder_systems(m, SystemShape(dims), perm),
                                               qtest::ref_reorder(m, dims, perm)));
    const auto a = qtest::random_matrix(1 + i % 3, 1 + i % 4, gen);
    const auto b = qtest::random_matrix(1 + i % 5, 1 + i % 2, gen);
    worst_kr = std::max(worst_kr, max_abs_diff(kron(a, b), qtest::ref_kron(a, b)));
  }
  if (worst_pt > 1e-12 || worst_re > 1e-12 || worst_kr > 1e-12) o.fail("oracle mismatch; ");

  std::size_t exact = 0;
  for (const auto& inst : a2_instances) {
    std::ostringstream os;
    write_procmat(os, inst.truth.process);
    const ProcessMatrix back = read_procmat(os.str());
    if (back.layout() == inst.truth.process.layout() &&
        (back.matrix().array() == inst.truth.process.matrix().array()).all()) {
      ++exact;
    } else {
      o.fail("procmat round trip not bit-exact; ");
    }
  }
  o.detail << "200 instances, max errors: partial_trace " << worst_pt << ", reorder " << worst_re << ", kron "
           << worst_kr << "; procmat round trip bit-exact " << exact << "/" << a2_instances.size();
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"A1 appendix golden run", a1},       {"A2 round-trip suite", a2},  {"A3 non-Markovian detection", a3},
      {"A4 causal-order failure", a4},      {"A5 oracle consistency", a5}, {"A6 complexity counter", a6},
      {"A7 minimality", a7},                {"A8 numerics", a8}};
  bool all = true;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
