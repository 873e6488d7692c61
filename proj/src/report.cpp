#include "qcausal/report.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "qcausal/procmat_io.hpp"

namespace qcausal {

using nlohmann::json;

namespace {

json ref_to_json(const SubsystemRef& ref) { return json::array({ref.party, ref.subsystem}); }

SubsystemRef ref_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("subsystem reference must be [party, index]");
  return {j[0].get<std::string>(), j[1].get<int>()};
}

json arrow_to_json(const Arrow& a) {
  return {{"from", ref_to_json(a.source)}, {"to", a.target}, {"whole_output", a.whole_output}};
}

Arrow arrow_from_json(const json& j) {
  return {ref_from_json(j.at("from")), j.at("to").get<std::string>(), j.at("whole_output").get<bool>()};
}

json arrows_to_json(const std::vector<Arrow>& arrows) {
  json out = json::array();
  for (const auto& a : arrows) out.push_back(arrow_to_json(a));
  return out;
}

std::vector<Arrow> arrows_from_json(const json& j) {
  std::vector<Arrow> out;
  for (const auto& a : j) out.push_back(arrow_from_json(a));
  return out;
}

}  // namespace

json pieces_to_json(const MarkovPieces& pieces) {
  json states = json::array();
  for (const auto& s : pieces.states) states.push_back({{"party", s.party}, {"rho", matrix_to_json(s.rho)}});
  json channels = json::array();
  for (const auto& c : pieces.channels) {
    json parents = json::array();
    for (const auto& p : c.parents) parents.push_back(ref_to_json(p));
    channels.push_back({{"party", c.party},
                        {"parents", parents},
                        {"in_dims", c.choi.in_dims},
                        {"out_dims", c.choi.out_dims},
                        {"choi", matrix_to_json(c.choi.matrix)}});
  }
  json open = json::array();
  for (const auto& r : pieces.open_outputs) open.push_back(ref_to_json(r));
  return {{"states", states}, {"channels", channels}, {"last_parties", pieces.last_parties},
          {"open_outputs", open}};
}

MarkovPieces pieces_from_json(const json& j) {
  MarkovPieces pieces;
  for (const auto& s : j.at("states")) {
    pieces.states.push_back({s.at("party").get<std::string>(), matrix_from_json(s.at("rho"))});
  }
  for (const auto& c : j.at("channels")) {
    ChannelPiece piece;
    piece.party = c.at("party").get<std::string>();
    for (const auto& p : c.at("parents")) piece.parents.push_back(ref_from_json(p));
    piece.choi = {matrix_from_json(c.at("choi")), c.at("in_dims").get<std::vector<Index>>(),
                  c.at("out_dims").get<std::vector<Index>>()};
    pieces.channels.push_back(std::move(piece));
  }
  pieces.last_parties = j.at("last_parties").get<std::vector<std::string>>();
  for (const auto& r : j.at("open_outputs")) pieces.open_outputs.push_back(ref_from_json(r));
  return pieces;
}

namespace {

std::string dot_quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

json report_to_json(const DiscoveryReport& r) {
  json open = json::array();
  for (const auto& ref : r.open_subsystems) open.push_back(ref_to_json(ref));

  json dag = nullptr;
  if (r.dag) {
    dag = {{"nodes", r.dag->nodes},
           {"edges", arrows_to_json(r.dag->edges)},
           {"state_parties", r.dag->state_parties},
           {"open_output_parties", r.dag->open_output_parties}};
  }
  return {{"format", kReportFormat},
          {"eps", r.eps},
          {"parties", parties_to_json(r.layout)},
          {"open_subsystems", open},
          {"causally_ordered", r.causally_ordered},
          {"causal_order", r.causal_order.sets},
          {"ungrouped", r.ungrouped},
          {"arrows", arrows_to_json(r.arrows)},
          {"primal_arrows", arrows_to_json(r.primal_arrows)},
          {"secondary_arrows", arrows_to_json(r.secondary_arrows)},
          {"markovian", r.markovian},
          {"arrows_reliable", r.arrows_reliable},
          {"markov_deviation", r.markov_deviation ? json(*r.markov_deviation) : json(nullptr)},
          {"dag", dag},
          {"pieces", r.pieces ? pieces_to_json(*r.pieces) : json(nullptr)},
          {"constraint_tests", r.constraint_tests}};
}

DiscoveryReport report_from_json(const json& j) {
  try {
    if (j.at("format") != kReportFormat) throw ParseError("not a " + std::string(kReportFormat) + " document");
    DiscoveryReport r;
    r.eps = j.at("eps").get<double>();
    r.layout = parties_from_json(j.at("parties"));
    for (const auto& ref : j.at("open_subsystems")) r.open_subsystems.push_back(ref_from_json(ref));
    r.causally_ordered = j.at("causally_ordered").get<bool>();
    r.causal_order.sets = j.at("causal_order").get<std::vector<std::vector<std::string>>>();
    r.ungrouped = j.at("ungrouped").get<std::vector<std::string>>();
    r.arrows = arrows_from_json(j.at("arrows"));
    r.primal_arrows = arrows_from_json(j.at("primal_arrows"));
    r.secondary_arrows = arrows_from_json(j.at("secondary_arrows"));
    r.markovian = j.at("markovian").get<bool>();
    r.arrows_reliable = j.at("arrows_reliable").get<bool>();
    if (!j.at("markov_deviation").is_null()) r.markov_deviation = j["markov_deviation"].get<double>();
    if (const auto& d = j.at("dag"); !d.is_null()) {
      r.dag = Dag{d.at("nodes").get<std::vector<std::string>>(), arrows_from_json(d.at("edges")),
                  d.at("state_parties").get<std::vector<std::string>>(),
                  d.at("open_output_parties").get<std::vector<std::string>>()};
    }
    if (const auto& p = j.at("pieces"); !p.is_null()) r.pieces = pieces_from_json(p);
    r.constraint_tests = j.at("constraint_tests").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

std::string report_to_dot(const DiscoveryReport& r) {
  if (!r.dag) throw ContractViolation("report has no DAG");
  const Dag& dag = *r.dag;
  auto has = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };

  std::vector<std::string> nodes = dag.nodes;
  std::sort(nodes.begin(), nodes.end());
  std::vector<Arrow> edges = dag.edges;
  std::sort(edges.begin(), edges.end(), [](const Arrow& a, const Arrow& b) {
    return std::tie(a.source.party, a.source.subsystem, a.target) <
           std::tie(b.source.party, b.source.subsystem, b.target);
  });

  std::ostringstream os;
  os << "digraph causal {\n";
  for (const auto& n : nodes) {
    std::vector<std::string> roles;
    if (has(dag.state_parties, n)) roles.push_back("state");
    if (has(dag.open_output_parties, n)) roles.push_back("open output");
    std::string label = n;
    if (!roles.empty()) label += "\\n(" + join(roles, ", ") + ")";
    os << "  " << dot_quoted(n) << " [label=" << dot_quoted(label) << "];\n";
  }
  for (const auto& e : edges) {
    const std::string label = e.whole_output ? "O" : std::to_string(e.source.subsystem + 1);
    os << "  " << dot_quoted(e.source.party) << " -> " << dot_quoted(e.target) << " [label=" << dot_quoted(label)
       << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string describe_arrow(const Arrow& a) {
  if (a.whole_output) return "Link from party " + a.source.party + " to party " + a.target + ".";
  return "Link from subsystem " + std::to_string(a.source.subsystem + 1) + " of party " + a.source.party +
         " to party " + a.target + ".";
}

void print_report(std::ostream& os, const DiscoveryReport& r) {
  if (r.open_subsystems.empty()) {
    os << "There are no open subsystems\n";
  } else {
    os << "There are open subsystems:";
    for (std::size_t i = 0; i < r.open_subsystems.size(); ++i) {
      const auto& ref = r.open_subsystems[i];
      const auto& party = r.layout.party(r.layout.party_index(ref.party));
      const Index dim = party.output_subdims.at(*party.local_subsystem(ref.subsystem));
      os << (i ? "," : "") << " " << ref.subsystem + 1 << " of party " << ref.party << " of dimension " << dim;
    }
    os << "\n";
  }

  if (!r.causally_ordered) {
    os << "the process is not causally ordered\n";
    if (!r.causal_order.sets.empty()) {
      os << "sets found before peeling stalled, last first:\n";
      for (auto it = r.causal_order.sets.rbegin(); it != r.causal_order.sets.rend(); ++it) {
        os << "   " << join(*it, " ") << "\n";
      }
    }
    os << "ungrouped parties: " << join(r.ungrouped, " ") << "\n";
    os << "constraint tests: " << r.constraint_tests << "\n";
    return;
  }

  os << "the_sets =\n";
  for (auto it = r.causal_order.sets.rbegin(); it != r.causal_order.sets.rend(); ++it) {
    os << "   " << join(*it, " ") << "\n";
  }
  os << "primal_arrows\n";
  for (const auto& a : r.primal_arrows) os << describe_arrow(a) << "\n";
  os << "secondary_arrows\n";
  for (const auto& a : r.secondary_arrows) os << describe_arrow(a) << "\n";

  if (r.markovian) {
    os << "the process is Markovian\n";
  } else {
    os << "the process is not Markovian; the arrows above are not reliable and no DAG is given\n";
  }
  os << "constraint tests: " << r.constraint_tests << "\n";
}

}  // namespace qcausal
