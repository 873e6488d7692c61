// qcausal: causal discovery on process-matrix files.
//
//   qcausal discover FILE [--eps E] [--report OUT.json] [--dot OUT.dot]
//   qcausal generate markov (--spec FILE | --appendix | --random N | --chain N) [--seed S] -o OUT
//   qcausal generate comb --parties N [--dim D] [--memory M] [--seed S] -o OUT
//   qcausal generate mixture [--q Q] [--dim D] [--same-order] [--seed S] -o OUT
//   qcausal validate FILE [--json]
//   qcausal oracle FILE --from A --to B [--settings N] [--seed S]
//
// Exit codes: 0 success, 2 invalid input, 3 internal error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qcausal/discovery.hpp"
#include "qcausal/generator.hpp"
#include "qcausal/oracle.hpp"
#include "qcausal/procmat_io.hpp"
#include "qcausal/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qcausal;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitInternal = 3;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path sidecar_path(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".truth.json");
  return p;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RejectedInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

struct DiscoverArgs {
  std::string file;
  double eps = kDefaultEps;
  std::string report;
  std::string dot;
};

int run_discover(const DiscoverArgs& a) {
  const ProcessMatrix w = load_procmat(a.file);
  DiscoveryOptions options;
  options.eps = a.eps;
  const DiscoveryReport report = discover(w, options);
  print_report(std::cout, report);
  if (!a.report.empty()) write_text(a.report, report_to_json(report).dump(1) + "\n");
  if (!a.dot.empty()) {
    if (report.dag) {
      write_text(a.dot, report_to_dot(report));
    } else {
      std::cerr << "no DAG for this process; " << a.dot << " not written\n";
    }
  }
  return 0;
}

struct GenerateArgs {
  std::string out;
  std::uint64_t seed = 1;
  // markov
  std::string spec;
  bool appendix = false;
  int random_n = 0;
  int chain_n = 0;
  // comb
  int parties = 2;
  Index dim = 2;
  Index memory = 2;
  // mixture
  double q = 0.5;
  bool same_order = false;
};

int run_markov(const GenerateArgs& a) {
  const int sources = (a.spec.empty() ? 0 : 1) + (a.appendix ? 1 : 0) + (a.random_n > 0 ? 1 : 0) + (a.chain_n > 0 ? 1 : 0);
  if (sources != 1) throw RejectedInput("give exactly one of --spec, --appendix, --random, --chain");
  DagSpec spec;
  if (!a.spec.empty()) {
    try {
      spec = dag_spec_from_json(read_json_file(a.spec));
    } catch (const ContractViolation& e) {
      throw RejectedInput(a.spec + ": " + e.what());
    }
  } else if (a.appendix) {
    spec = appendix_dag_spec();
  } else if (a.random_n > 0) {
    spec = random_dag_spec(a.random_n, a.seed);
  } else {
    spec = chain_dag_spec(a.chain_n);
  }
  const GroundTruth truth = markovian_process(spec, a.seed);
  save_procmat(truth.process, a.out);
  json side = ground_truth_to_json(truth);
  side["kind"] = "markov";
  write_text(sidecar_path(a.out), side.dump(1) + "\n");
  return 0;
}

int run_comb(const GenerateArgs& a) {
  if (a.parties < 2 || a.dim < 1 || a.memory < 1) throw RejectedInput("comb needs --parties >= 2, --dim >= 1, --memory >= 1");
  const ProcessMatrix w = comb_with_memory(a.parties, a.dim, a.memory, a.seed);
  save_procmat(w, a.out);
  const json side = {{"format", "qcausal-truth-v1"},
                     {"kind", "comb"},
                     {"rng", Rng::kName},
                     {"seed", a.seed},
                     {"parties", a.parties},
                     {"dim", a.dim},
                     {"memory_dim", a.memory},
                     {"extended_spec", dag_spec_to_json(comb_extended_spec(a.parties, a.dim, a.memory))}};
  write_text(sidecar_path(a.out), side.dump(1) + "\n");
  return 0;
}

int run_mixture(const GenerateArgs& a) {
  if (!(a.q >= 0.0 && a.q <= 1.0)) throw RejectedInput("--q must lie in [0, 1]");
  if (a.dim < 1) throw RejectedInput("--dim must be >= 1");
  json side = {{"format", "qcausal-truth-v1"}, {"kind", "mixture"}, {"q", a.q}, {"dim", a.dim}};
  auto build = [&]() {
    if (!a.same_order) {
      side["terms"] = json::array({"identity channel A -> B", "identity channel B -> A"});
      return mixture(a.q, identity_channel_process(a.dim, false), identity_channel_process(a.dim, true));
    }
    DagSpec spec{SystemLayout({{"A", a.dim, {a.dim}, {}}, {"B", a.dim, {a.dim}, {}}}), {{{"A", 0}, "B"}}};
    const GroundTruth t1 = markovian_process(spec, a.seed);
    const GroundTruth t2 = markovian_process(spec, a.seed + 1);
    side["rng"] = Rng::kName;
    side["terms"] = json::array({ground_truth_to_json(t1), ground_truth_to_json(t2)});
    return mixture(a.q, t1.process, t2.process);
  };
  const ProcessMatrix w = build();
  save_procmat(w, a.out);
  write_text(sidecar_path(a.out), side.dump(1) + "\n");
  return 0;
}

int run_validate(const std::string& file, bool as_json) {
  const ProcessMatrix w = load_procmat(file);
  const ValidationReport report = validate(w);
  if (as_json) {
    json issues = json::array();
    for (const auto& i : report.issues) {
      issues.push_back({{"check", std::string(check_name(i.check))},
                        {"severity", i.severity == ValidationIssue::Severity::Error ? "error" : "warning"},
                        {"violation", i.violation},
                        {"message", i.message}});
    }
    std::cout << json{{"valid", report.valid()}, {"issues", issues}}.dump(1) << "\n";
    return 0;
  }
  std::cout << (report.valid() ? "valid" : "invalid") << "\n";
  for (const auto& i : report.issues) {
    std::cout << (i.severity == ValidationIssue::Severity::Error ? "error" : "warning") << " "
              << check_name(i.check) << ": " << i.message << "\n";
  }
  return 0;
}

struct OracleArgs {
  std::string file;
  std::string from;
  std::string to;
  int settings = 4;
  std::uint64_t seed = 1;
};

int run_oracle(const OracleArgs& a) {
  const ProcessMatrix w = load_procmat(a.file);
  const ValidationReport v = validate(w);
  if (!v.valid()) throw RejectedInput("process matrix failed validation: " + v.summary());
  if (!w.layout().find_party(a.from)) throw RejectedInput("unknown party '" + a.from + "'");
  if (!w.layout().find_party(a.to)) throw RejectedInput("unknown party '" + a.to + "'");
  if (a.from == a.to) throw RejectedInput("--from and --to must differ");
  const double s = signaling_strength(w, a.from, a.to, a.settings, a.seed);
  std::ostringstream os;
  os.precision(12);
  os << s;
  std::cout << "signaling strength " << a.from << " -> " << a.to << ": " << os.str() << "\n";
  if (s <= 1e-7) std::cout << "no signaling detected within tested family\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal discovery on quantum process matrices"};
  app.require_subcommand(1);

  DiscoverArgs d;
  auto* discover_cmd = app.add_subcommand("discover", "Find open subsystems, causal order, arrows and Markovianity");
  discover_cmd->add_option("file", d.file, "procmat-v1 file")->required();
  discover_cmd->add_option("--eps", d.eps, "Tolerance of the identity tests")->check(CLI::PositiveNumber);
  discover_cmd->add_option("--report", d.report, "Write the report as JSON");
  discover_cmd->add_option("--dot", d.dot, "Write the DAG as DOT");

  GenerateArgs g;
  auto* generate_cmd = app.add_subcommand("generate", "Write a test process and its ground-truth sidecar");
  generate_cmd->require_subcommand(1);
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-o,--output", g.out, "Output procmat-v1 file")->required();
    cmd->add_option("--seed", g.seed, "Random seed");
  };
  auto* markov_cmd = generate_cmd->add_subcommand("markov", "Markovian process for a DAG");
  add_common(markov_cmd);
  markov_cmd->add_option("--spec", g.spec, "DAG spec JSON");
  markov_cmd->add_flag("--appendix", g.appendix, "Built-in four-party example");
  markov_cmd->add_option("--random", g.random_n, "Random DAG on N qubit parties");
  markov_cmd->add_option("--chain", g.chain_n, "Chain of N qubit parties");
  auto* comb_cmd = generate_cmd->add_subcommand("comb", "Chain with a quantum memory (non-Markovian)");
  add_common(comb_cmd);
  comb_cmd->add_option("--parties", g.parties, "Observed parties");
  comb_cmd->add_option("--dim", g.dim, "System dimension");
  comb_cmd->add_option("--memory", g.memory, "Memory dimension");
  auto* mixture_cmd = generate_cmd->add_subcommand("mixture", "Mixture of two bipartite processes");
  add_common(mixture_cmd);
  mixture_cmd->add_option("--q", g.q, "Weight of the first term");
  mixture_cmd->add_option("--dim", g.dim, "System dimension");
  mixture_cmd->add_flag("--same-order", g.same_order, "Mix two random A -> B processes instead of opposite orders");

  std::string validate_file;
  bool validate_json = false;
  auto* validate_cmd = app.add_subcommand("validate", "Check hermiticity, positivity and normalization");
  validate_cmd->add_option("file", validate_file, "procmat-v1 file")->required();
  validate_cmd->add_flag("--json", validate_json, "Print the result as JSON");

  OracleArgs o;
  auto* oracle_cmd = app.add_subcommand("oracle", "Measure signaling between two parties");
  oracle_cmd->add_option("file", o.file, "procmat-v1 file")->required();
  oracle_cmd->add_option("--from", o.from, "Sender")->required();
  oracle_cmd->add_option("--to", o.to, "Receiver")->required();
  oracle_cmd->add_option("--settings", o.settings, "Random settings on each side")->check(CLI::NonNegativeNumber);
  oracle_cmd->add_option("--seed", o.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (discover_cmd->parsed()) return run_discover(d);
    if (markov_cmd->parsed()) return run_markov(g);
    if (comb_cmd->parsed()) return run_comb(g);
    if (mixture_cmd->parsed()) return run_mixture(g);
    if (validate_cmd->parsed()) return run_validate(validate_file, validate_json);
    if (oracle_cmd->parsed()) return run_oracle(o);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const RejectedInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const LayoutError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
