#include "doctest.h"
#include "fluidc/api.hpp"
#include "support.hpp"

using namespace fluidc;
using nlohmann::json;
namespace fs = std::filesystem;
using testsupport::fixture;
using testsupport::run_cli;

namespace {

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("pattern prints the dimensions") {
  const auto r = run_cli("pattern bend --length 60 --width 10 --angle 45");
  REQUIRE(r.rc == 0);
  const json out = json::parse(r.out);
  CHECK(out["d"] == 8.08);
  CHECK(out["a"] == 3.33);
  CHECK(out["D"] == 20);
  CHECK(out["n"] == 2);
  CHECK(r.out.find("\"d\":8.08") != std::string::npos);
  CHECK(out == pattern_document({{"shape", "bend"}, {"length", 60}, {"width", 10}, {"angle", 45}}));

  CHECK(run_cli("pattern bend --length 60 --width 10 --angle 5").rc == 2);
  CHECK(run_cli("pattern blob --radius 3").rc == 2);
  CHECK(run_cli("pattern fold --length 60 --width 30 --angle 170").rc == 2);

  const auto dir = testsupport::temp_dir("clisvg");
  CHECK(run_cli("pattern sphere --radius 12.7 --svg " + q(dir / "s.svg")).rc == 0);
  CHECK(testsupport::slurp(dir / "s.svg").find("<svg") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("compile") {
  const auto ok = run_cli("compile -", "NOT(A; C) AND(C, B; Q)");
  REQUIRE(ok.rc == 0);
  CHECK(json::parse(ok.out) == compile_document("NOT(A; C) AND(C, B; Q)"));

  const auto bad = run_cli("compile -", "NOT(A B; C)");
  CHECK(bad.rc == 2);
  CHECK(bad.err.find("SyntaxError") != std::string::npos);
  CHECK(bad.err.find("offset") != std::string::npos);
  CHECK(bad.out.empty());

  CHECK(run_cli("compile -", "").rc == 2);
  CHECK(run_cli("compile /no/such/file.fchdl").rc != 0);
  CHECK(run_cli("frobnicate").rc == 2);

  const auto from_file = run_cli("compile " + q(fixture("dg90/corrected.fchdl")));
  REQUIRE(from_file.rc == 0);
  CHECK(json::parse(from_file.out)["netlist"]["operators"].size() == 5);

  const auto warn = run_cli("compile -", "NOT(A; C) NOT(A; Z) AND(C, B; Output I)");
  CHECK(warn.rc == 0);
  CHECK(warn.err.find("DanglingNet") != std::string::npos);
}

TEST_CASE("verify exit codes follow the verdict") {
  const auto spec = q(fixture("dg90/spec.json"));
  const auto good = run_cli("verify " + q(fixture("dg90/corrected.fchdl")) + " --spec " + spec);
  CHECK(good.rc == 0);
  CHECK(json::parse(good.out)["score"] == 5);

  const auto bad = run_cli("verify " + q(fixture("dg90/faulty.fchdl")) + " --spec " + spec);
  CHECK(bad.rc == 1);
  const json report = json::parse(bad.out);
  CHECK(report["pass"] == false);
  CHECK(report["score"].get<int>() <= 3);
  CHECK_FALSE(bad.err.empty());

  // Truth-table text works as a spec too.
  const auto dir = testsupport::temp_dir("clitt");
  std::ofstream(dir / "and.txt") << "If A = 1 and B = 1, then Q = 1; If A = 0 and B = 1, then Q = 0; "
                                    "If A = 1 and B = 0, then Q = 0; If A = 0 and B = 0, then Q = 0";
  CHECK(run_cli("verify - --spec " + q(dir / "and.txt"), "AND(A, B; Q)").rc == 0);
  CHECK(run_cli("verify - --spec " + q(dir / "and.txt"), "OR(A, B; Q)").rc == 1);
  fs::remove_all(dir);

  // Parity with the service body.
  const json body = {{"circuit", testsupport::slurp(fixture("dg90/faulty.fchdl"))},
                     {"spec", json::parse(testsupport::slurp(fixture("dg90/spec.json")))}};
  CHECK(report == verify_document(body));
}

TEST_CASE("layout") {
  const std::string circuit = testsupport::slurp(fixture("dg90/corrected.fchdl"));
  const auto dir = testsupport::temp_dir("clilay");
  const auto r = run_cli("layout - --seed 7 --svg " + q(dir / "l.svg"), circuit);
  REQUIRE(r.rc == 0);
  const json out = json::parse(r.out);
  CHECK(out["seed"] == 7);
  CHECK_FALSE(out.contains("svg"));
  CHECK(testsupport::slurp(dir / "l.svg").find("class=\"block\"") != std::string::npos);
  CHECK(out == layout_document({{"circuit", circuit}, {"sa_config", {{"seed", 7}}}, {"restarts", 1}}));
  CHECK(run_cli("layout - --seed 7", circuit).out == r.out);
  CHECK(run_cli("layout - --restarts 65", circuit).rc == 2);
  fs::remove_all(dir);
}

TEST_CASE("simulate") {
  const auto dir = testsupport::temp_dir("clisim");
  std::ofstream(dir / "stim.json") << R"([{"t": 1.0, "net": "A", "v": 1}])";
  const auto r = run_cli("simulate - --stimulus " + q(dir / "stim.json") + " --until 2 --dt 0.1", "NOT(A; Q)");
  REQUIRE(r.rc == 0);
  const json trace = json::parse(r.out);
  bool fell = false;
  for (const auto& e : trace["events"]) {
    if (e["net"] == "Q" && e["new"] == 0) {
      CHECK(e["t"].get<double>() == doctest::Approx(1.0));
      fell = true;
    }
  }
  CHECK(fell);
  CHECK(trace["samples"].back()["values"]["Q"] == 0);

  std::ofstream(dir / "bad.json") << R"([{"t": 1.0, "net": "Q", "v": 1}])";
  CHECK(run_cli("simulate - --stimulus " + q(dir / "bad.json") + " --until 2", "NOT(A; Q)").rc == 1);
  fs::remove_all(dir);
}

TEST_CASE("design with recorded responses") {
  const auto dir = testsupport::temp_dir("clidesign");
  testsupport::copy_dir(fixture("dg90/project"), dir);
  const auto r = run_cli("design --project " + q(dir) + " --mock " + q(fixture("dg90/mock")));
  REQUIRE(r.rc == 0);
  const json out = json::parse(r.out);
  CHECK(out["written"] == json::array({"circuit.json", "review.json", "io_design.json"}));
  for (const char* doc : {"circuit.json", "review.json", "io_design.json"}) CHECK(fs::exists(dir / doc));

  const auto empty = testsupport::temp_dir("clidesign_empty");
  CHECK(run_cli("design --project " + q(empty) + " --mock " + q(fixture("dg90/mock"))).rc == 1);
  fs::remove_all(dir);
  fs::remove_all(empty);
}
