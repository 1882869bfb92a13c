#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bigimage/cli_report.hpp"

using namespace bigimage;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("regularity command") {
  const auto r = run({"regularity", "37"});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "e_p=1, irregular indices {32} [vandiver]"));

  const auto range = run({"regularity", "--range", "5", "100"});
  CHECK(range.code == kExitOk);
  CHECK(has(range.out, "37"));
  CHECK(has(range.out, "59"));
  CHECK(has(range.out, "67"));

  CHECK(run({"regularity", "4"}).code == kExitUsage);
  CHECK(run({"regularity", "--range", "3", "100"}).code == kExitUsage);
  CHECK(run({"regularity"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);

  const auto j = run({"regularity", "157", "--json"});
  CHECK(j.code == kExitOk);
  const auto parsed = nlohmann::json::parse(j.out);
  CHECK(parsed.at("irregular_indices") == std::vector<u64>{62, 110});
}

TEST_CASE("regularity cache") {
  const auto path = temp_file("bigimage_cli_cache.txt");
  std::filesystem::remove(path);
  const auto a = run({"regularity", "--range", "5", "200", "--cache", path.string()});
  CHECK(a.code == kExitOk);
  CHECK(std::filesystem::exists(path));
  const auto b = run({"regularity", "--range", "5", "200", "--cache", path.string()});
  CHECK(b.out == a.out);
  std::filesystem::remove(path);
}

TEST_CASE("exponents command") {
  const auto ok = run({"exponents", "23", "2", "0"});
  CHECK(ok.code == kExitOk);
  CHECK(has(ok.out, "ks=(4,9), all conditions pass"));

  const auto fail = run({"exponents", "19", "2", "0"});
  CHECK(fail.code == kExitConstruction);
  CHECK(has(fail.err, "condition (1)"));

  const auto search = run({"exponents", "23", "2", "0", "--search"});
  CHECK(search.code == kExitOk);
  CHECK(has(search.out, "ks=(2,5)"));

  CHECK(run({"exponents", "23", "1", "0"}).code == kExitUsage);
  CHECK(run({"exponents", "22", "2", "0"}).code == kExitUsage);
}

TEST_CASE("certify command") {
  const auto ok = run({"certify", "23", "2", "0", "--level", "5"});
  CHECK(ok.code == kExitOk);
  CHECK(has(ok.out, "ks=(4,9)"));
  CHECK(has(ok.out, "verdict: PASS"));
  CHECK(has(ok.out, "relators exact: OK, det = psi: OK"));

  const auto fail = run({"certify", "19", "2", "0"});
  CHECK(fail.code == kExitStage);
  CHECK(has(fail.out, "FAIL at exponents"));

  const auto big = run({"certify", "131", "3", "1", "--json"});
  CHECK(big.code == kExitOk);
  const auto j = nlohmann::json::parse(big.out);
  CHECK(j.at("profile").at("assumptions") == std::vector<std::string>{"vandiver"});
  CHECK(j.at("profile").at("irregular_indices") == std::vector<u64>{22});
  CHECK(j.at("avoided_eigenspaces") == std::vector<u64>{109});
  CHECK(j.at("verdict").at("pass") == true);
  CHECK(j.at("image").at("kernel").at("method") == "filtration");

  CHECK(run({"certify", "23", "2", "0", "--det-mode", "sideways"}).code == kExitUsage);
  CHECK(run({"certify", "23", "2", "0", "--level", "1"}).code == kExitUsage);
}

TEST_CASE("certificate JSON round-trips byte for byte") {
  const auto path = temp_file("bigimage_cert.json");
  const auto r = run({"certify", "23", "2", "0", "--out", path.string(), "--seed", "9"});
  REQUIRE(r.code == kExitOk);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto cert = certificate_from_json(nlohmann::json::parse(text));
  CHECK(cert.seed == 9);
  CHECK(cert.pass);
  CHECK(to_json(cert).dump(2) + "\n" == text);
  CHECK(to_json(certify(23, 2, 0, {5, DetMode::Paper, 9, {}})).dump(2) + "\n" == text);
  std::filesystem::remove(path);
}

TEST_CASE("certify is deterministic") {
  const auto a = run({"certify", "23", "2", "0", "--json"});
  const auto b = run({"certify", "23", "2", "0", "--json"});
  CHECK(a.out == b.out);
  const auto plain = run({"certify", "23", "2", "0", "--json", "--det-mode", "plain"});
  CHECK(plain.code == kExitOk);
  CHECK(plain.out != a.out);
}

TEST_CASE("lie-verify command") {
  const auto r = run({"lie-verify", "--n", "3", "--p", "7", "--trials", "500"});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "500/500 pass"));
  const auto one = run({"lie-verify", "--n", "2", "--p", "5", "--trials", "1"});
  CHECK(one.code == kExitOk);
  CHECK(has(one.out, "Id + 25*(e_1,1 - e_2,2)"));
  CHECK(has(one.out, "zero seeds: filtration levels 1..4 all zero: pass"));
  CHECK(run({"lie-verify", "--p", "8"}).code == kExitUsage);
}

TEST_CASE("deform-demo command") {
  const auto r = run({"deform-demo", "23"});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "relators exact at level 5: OK, det = psi: OK"));

  const auto small = run({"deform-demo", "5", "--model", "free"});
  CHECK(small.code == kExitOk);
  CHECK(has(small.out, "(d=1)=1"));
  CHECK(has(small.out, "(d=2)=0"));
  CHECK(has(small.out, "(d=3)=1"));

  const auto bad = temp_file("bigimage_bad_model.json");
  std::ofstream(bad) << R"({"p": 5, "base": "default", "relators": [{"name": "r", "word": [["nope", 1]]}]})";
  CHECK(run({"deform-demo", "5", "--model", bad.string()}).code == kExitUsage);
  std::ofstream(bad) << "not json";
  CHECK(run({"deform-demo", "5", "--model", bad.string()}).code == kExitUsage);
  CHECK(run({"deform-demo", "5", "--model", temp_file("bigimage_missing.json").string()}).code == kExitUsage);
  std::filesystem::remove(bad);

  CHECK(run({"deform-demo", "29"}).code == kExitBudget);
}

TEST_CASE("budget exhaustion maps to exit 3") {
  ::setenv("BIGIMAGE_BUDGET_MS", "0", 1);
  CHECK(run({"certify", "23", "2", "0"}).code == kExitBudget);
  ::unsetenv("BIGIMAGE_BUDGET_MS");
}

#ifdef BIGIMAGE_CLI_PATH
TEST_CASE("installed binary exit codes") {
  const std::string bin = BIGIMAGE_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  CHECK(status("regularity 37") == 0);
  CHECK(status("regularity 4") == 2);
  CHECK(status("exponents 19 2 0") == 4);
  CHECK(status("certify 19 2 0") == 5);
}
#endif
