#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcausal/generator.hpp"
#include "qcausal/procmat_io.hpp"
#include "test_support.hpp"

using namespace qcausal;

namespace {

SystemLayout appendix_layout() { return appendix_dag_spec().layout; }

const ValidationIssue* find_issue(const ValidationReport& r, ValidationIssue::Check c) {
  for (const auto& i : r.issues)
    if (i.check == c) return &i;
  return nullptr;
}

ComplexMatrix qubit_state() {
  ComplexMatrix rho(2, 2);
  rho << 0.7, Complex(0.1, -0.2), Complex(0.1, 0.2), 0.3;
  return rho;
}

}  // namespace

TEST_CASE("flat factor order is input then output subsystems, party by party") {
  const SystemLayout layout = appendix_layout();
  std::vector<Index> dims;
  for (const auto& f : layout.factors()) dims.push_back(f.dim);
  CHECK(dims == std::vector<Index>{2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 4});
  CHECK(layout.total_dim() == 4096);
  CHECK(layout.output_product() == 4 * 8 * 2 * 4);
  CHECK(layout.input_factor(1) == 3);
  CHECK(layout.output_factors(1) == FactorList{4, 5, 6});
  CHECK(layout.subsystem_factor(1, 2) == 6u);
  CHECK_FALSE(layout.subsystem_factor(1, 3).has_value());
  CHECK(layout.factors()[6].kind == FactorKind::Output);
  CHECK(layout.factors()[6].subsystem == 2);
}

TEST_CASE("layout rejects bad parties") {
  CHECK_THROWS_AS(SystemLayout({{"A", 2, {2}, {}}, {"A", 2, {2}, {}}}), LayoutError);
  CHECK_THROWS_AS(SystemLayout({{"A", 0, {2}, {}}}), LayoutError);
  CHECK_THROWS_AS(SystemLayout({{"A", 2, {}, {}}}), LayoutError);
  CHECK_THROWS_AS(SystemLayout({{"A", 2, {2, 0}, {}}}), LayoutError);
  CHECK_THROWS_AS(appendix_layout().party_index("9"), LayoutError);
}

TEST_CASE("process matrix side must match the layout") {
  CHECK_THROWS_AS(ProcessMatrix(SystemLayout({{"A", 2, {2}, {}}}), ComplexMatrix::Identity(3, 3)), LayoutError);
  ComplexMatrix m = ComplexMatrix::Identity(4, 4);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ProcessMatrix(SystemLayout({{"A", 2, {2}, {}}}), m), LayoutError);
}

TEST_CASE("validate accepts a state with an open output") {
  const ProcessMatrix w(SystemLayout({{"A", 2, {2}, {}}}), kron(qubit_state(), identity_matrix(2)));
  const auto r = validate(w);
  CHECK(r.valid());
  CHECK(r.issues.empty());
  CHECK(std::abs(w.matrix().trace() - Complex(2.0)) <= 1e-15);
}

TEST_CASE("validate reports a PSD violation of -I4") {
  const ProcessMatrix w(SystemLayout({{"A", 2, {2}, {}}}), -ComplexMatrix::Identity(4, 4));
  const auto r = validate(w);
  CHECK_FALSE(r.valid());
  const auto* psd = find_issue(r, ValidationIssue::Check::PositiveSemidefinite);
  REQUIRE(psd != nullptr);
  CHECK(psd->violation == doctest::Approx(1.0));
  CHECK(psd->severity == ValidationIssue::Severity::Error);
}

TEST_CASE("validate flags non-hermitian matrices") {
  ComplexMatrix m = kron(qubit_state(), identity_matrix(2));
  m(0, 1) += 1e-3;
  const auto r = validate(ProcessMatrix(SystemLayout({{"A", 2, {2}, {}}}), m));
  const auto* h = find_issue(r, ValidationIssue::Check::Hermiticity);
  REQUIRE(h != nullptr);
  CHECK(h->violation == doctest::Approx(1e-3));
  CHECK_FALSE(r.valid());
}

TEST_CASE("trace normalization has a warning band") {
  const SystemLayout layout({{"A", 2, {2}, {}}});
  const ComplexMatrix base = kron(qubit_state(), identity_matrix(2));
  // relative trace error 5e-6 is within 10 x eps_trace: warning only
  const auto warn = validate(ProcessMatrix(layout, base * (1.0 + 5e-6)));
  const auto* t = find_issue(warn, ValidationIssue::Check::TraceNormalization);
  REQUIRE(t != nullptr);
  CHECK(t->severity == ValidationIssue::Severity::Warning);
  CHECK(warn.valid());
  const auto bad = validate(ProcessMatrix(layout, base * 1.01));
  CHECK_FALSE(bad.valid());
  CHECK(validate(ProcessMatrix(layout, base * (1.0 + 5e-7))).issues.empty());
}

TEST_CASE("generated processes validate") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto truth = markovian_process(random_dag_spec(3, seed), seed);
    const auto r = validate(truth.process, {1e-9, 1e-9, 1e-9});
    CHECK_MESSAGE(r.valid(), r.summary());
    CHECK(r.issues.empty());
  }
}

TEST_CASE("trace_out removes factors and keeps a remnant") {
  const auto truth = markovian_process(appendix_dag_spec(), 3);
  const auto& w = truth.process;
  const ProcessMatrix reduced = trace_out(w, {SystemRef::subsystem_of({"2", 0}), SystemRef::subsystem_of({"2", 1})});
  CHECK(reduced.dim() == 1024);
  CHECK(reduced.layout().party(1).output_subdims == std::vector<Index>{2});
  CHECK(reduced.layout().party(1).subsystem_id(0) == 2);
  CHECK(std::abs(reduced.matrix().trace() - w.matrix().trace()) <= 1e-9);

  CHECK(max_abs_diff(trace_out(w, {}).matrix(), w.matrix()) == 0.0);

  const ProcessMatrix single(SystemLayout({{"A", 2, {2}, {}}}), kron(qubit_state(), identity_matrix(2)));
  const ProcessMatrix none = trace_out(single, {SystemRef::input("A"), SystemRef::output("A")});
  CHECK(none.dim() == 1);
  CHECK(std::abs(none.matrix()(0, 0) - Complex(2.0)) <= 1e-15);

  const ProcessMatrix remnant = trace_out(single, {SystemRef::output("A")});
  REQUIRE(remnant.layout().party_count() == 1);
  CHECK(remnant.layout().party(0).output_subdims == std::vector<Index>{1});
  CHECK(remnant.layout().party(0).subsystem_id(0) == kRemnantSubsystem);

  CHECK_THROWS_AS(trace_out(w, {SystemRef::subsystem_of({"2", 7})}), LayoutError);
  CHECK_THROWS_AS(trace_out(w, {SystemRef::input("nobody")}), LayoutError);
}

TEST_CASE("trace_out preserves trace and positivity") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto w = markovian_process(random_dag_spec(3, seed), seed).process;
    const auto& layout = w.layout();
    std::vector<SystemRef> targets{SystemRef::input(layout.party(seed % 3).name)};
    const auto r = trace_out(w, targets);
    CHECK(std::abs(r.matrix().trace() - w.matrix().trace()) <= 1e-9);
    CHECK(min_eigenvalue(r.matrix()) >= -1e-8);
  }
}

TEST_CASE("remove_parties drops whole parties") {
  const auto w = markovian_process(appendix_dag_spec(), 4).process;
  const auto r = remove_parties(w, {"4", "2"});
  REQUIRE(r.layout().party_count() == 2);
  CHECK(r.layout().party(0).name == "1");
  CHECK(r.layout().party(1).name == "3");
  CHECK(r.dim() == 8 * 4);
}

TEST_CASE("assemble_blocks checks coverage") {
  const SystemLayout layout({{"A", 2, {2}, {}}});
  const ComplexMatrix rho = qubit_state();
  // output block listed first still lands in flat order
  const ComplexMatrix m = assemble_blocks(layout, {{identity_matrix(2), {1}}, {rho, {0}}});
  CHECK(max_abs_diff(m, kron(rho, identity_matrix(2))) <= 1e-15);
  CHECK_THROWS_AS(assemble_blocks(layout, {{rho, {0}}}), ContractViolation);
  CHECK_THROWS_AS(assemble_blocks(layout, {{rho, {0}}, {rho, {0}}, {identity_matrix(2), {1}}}), ContractViolation);
}

TEST_CASE("procmat round trip is bit exact") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = markovian_process(random_dag_spec(2, seed), seed).process;
    std::ostringstream os;
    write_procmat(os, w);
    const ProcessMatrix back = read_procmat(os.str());
    CHECK(back.layout() == w.layout());
    CHECK((back.matrix().array() == w.matrix().array()).all());
  }
}

TEST_CASE("procmat round trip through a file") {
  const auto w = markovian_process(chain_dag_spec(2), 9).process;
  const auto path = std::filesystem::temp_directory_path() / "qcausal_roundtrip.json";
  save_procmat(w, path);
  const ProcessMatrix back = load_procmat(path);
  std::filesystem::remove(path);
  CHECK((back.matrix().array() == w.matrix().array()).all());
}

TEST_CASE("format_double keeps every bit") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) * std::pow(10.0, i % 40 - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(-0.0) == "-0.0");
}

TEST_CASE("procmat parse errors") {
  const std::string parties = R"("parties":[{"name":"A","input_dim":1,"output_subdims":[1]}])";
  auto doc = [&](const std::string& matrix) { return "{\"format\":\"procmat-v1\"," + parties + ",\"matrix\":" + matrix + "}"; };

  CHECK(read_procmat(doc(R"({"dim":1,"layout":"row-major","entries":[[1,0]]})")).dim() == 1);
  CHECK_THROWS_AS(read_procmat(doc(R"({"dim":2,"layout":"row-major","entries":[[1,0],[0,0],[0,0],[1,0]]})")),
                  ParseError);
  CHECK_THROWS_AS(read_procmat(doc(R"({"dim":1,"layout":"row-major","entries":[[NaN,0]]})")), ParseError);
  CHECK_THROWS_AS(read_procmat(doc(R"({"dim":1,"layout":"row-major","entries":[[1e400,0]]})")), ParseError);
  CHECK_THROWS_AS(read_procmat(doc(R"({"dim":1,"layout":"col-major","entries":[[1,0]]})")), ParseError);
  CHECK_THROWS_AS(read_procmat(doc(R"({"dim":1,"layout":"row-major","entries":[]})")), ParseError);
  CHECK_THROWS_AS(read_procmat(R"({"format":"procmat-v2"})"), ParseError);

  try {
    read_procmat("{\"format\":\"procmat-v1\",\n" + parties + ",\n\"matrix\":{\"dim\":1,\n\"entries\":[[1,0],]}}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}
