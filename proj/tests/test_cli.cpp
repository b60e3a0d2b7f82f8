#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs dopo-lab with `args`; stderr is folded into the output.
Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " DOPO_LAB_EXE " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::stringstream ss(row);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!row.empty() && row.back() == ',') out.emplace_back();
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dopo_lab_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("classical sweep", "[cli]") {
  const Run r = run("sweep --method classical --sigma 0:0.9:0.1");
  REQUIRE(r.code == 0);
  const auto l = lines(r.out);
  REQUIRE(l.size() == 12);
  CHECK(l[0].rfind("# params: ", 0) == 0);
  CHECK(l[0].find("method=classical") != std::string::npos);
  CHECK(l[0].find("tool=dopo-lab/") != std::string::npos);
  CHECK(l[1] == "sigma,method,branch,I_p,I_s,Vx,Vy,n_s_norm,max_re_eig,residual,error");
  for (std::size_t i = 2; i < l.size(); ++i) {
    const auto f = split(l[i]);
    REQUIRE(f.size() == 11);
    const double s = std::stod(f[0]);
    CHECK(f[2] == "below");
    CHECK_THAT(std::stod(f[5]), Catch::Matchers::WithinRel(1.0 / (1.0 - s), 1e-9));
  }
}

TEST_CASE("self-consistent sweep has both branches above onset", "[cli]") {
  const Run r = run("sweep --sigma 0.98:1.04:0.02 --kappa 1 --g 0.01");
  REQUIRE(r.code == 0);
  const auto l = lines(r.out);
  // 0.98, 1.00: below only; 1.02, 1.04: below + two above.
  REQUIRE(l.size() == 2 + 1 + 1 + 3 + 3);
  CHECK(split(l[4])[2] == "below");
  CHECK(split(l[5])[2] == "above-plus");
  CHECK(split(l[6])[2] == "above-minus");
}

TEST_CASE("sweep records per-point errors", "[cli]") {
  const Run r = run("sweep --method classical --sigma 0.9:1.1:0.1");
  REQUIRE(r.code == 0);
  const auto l = lines(r.out);
  REQUIRE(l.size() == 2 + 1 + 1 + 2);
  CHECK(split(l[3]).back().find("critical-point-singularity") == 0);
}

TEST_CASE("sweep json", "[cli]") {
  const Run r = run("sweep --sigma 0.5:0.6:0.1 --format json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["branch"] == "below");
  CHECK(j[0]["error"].is_null());
}

TEST_CASE("usage errors", "[cli]") {
  CHECK(run("sweep --sigma 0:1:0").code == 3);
  CHECK(run("sweep --sigma 1:0:0.1").code == 3);
  CHECK(run("point --sigma abc").code == 3);
  CHECK(run("point --sigma 0.5 --bogus").code == 3);
  CHECK(run("point --sigma 0.5 --method nope").code == 3);
  CHECK(run("point --sigma 0.5 --kappa -1").code == 3);
  CHECK(run("").code == 3);
  CHECK(run("point --sigma 0.5 --output /nonexistent/dir/out.json").code == 3);
}

TEST_CASE("drummond point", "[cli]") {
  const Run r = run("point --method drummond --sigma 1 --kappa 1 --g 0.01");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK_THAT(j["Vx"].get<double>(), Catch::Matchers::WithinAbs(191.2, 0.01));
  CHECK(j["in_validity_window"] == true);
}

TEST_CASE("classical point at threshold is a physics error", "[cli]") {
  const Run r = run("point --method classical --sigma 1");
  CHECK(r.code == 2);
  CHECK(r.out.find("singular at critical point") != std::string::npos);
  const auto j = nlohmann::json::parse(lines(r.out).front());
  CHECK(j["error"] == "critical-point-singularity");
}

TEST_CASE("self-consistent point json", "[cli]") {
  const Run r = run("point --sigma 1.5 --branch above-plus");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.size() == 1);
  CHECK(j[0]["branch"] == "above-plus");
  CHECK(j[0]["beta_s"][0].get<double>() > 0.0);
  CHECK(j[0]["max_re_eig"].get<double>() < 0.0);
}

TEST_CASE("output is deterministic across thread counts", "[cli]") {
  const auto a = scratch("sweep_a.csv");
  const auto b = scratch("sweep_b.csv");
  REQUIRE(run("sweep --sigma 0:2:0.05 --output " + a.string(), "DOPO_LAB_THREADS=1").code == 0);
  REQUIRE(run("sweep --sigma 0:2:0.05 --output " + b.string(), "DOPO_LAB_THREADS=4").code == 0);
  std::ifstream fa(a);
  std::ifstream fb(b);
  std::stringstream sa;
  std::stringstream sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(!sa.str().empty());
  CHECK(sa.str() == sb.str());
}

TEST_CASE("dynamics csv", "[cli]") {
  const Run r = run("dynamics --sigma 0.5 --tmax 10 --grid-n 11");
  REQUIRE(r.code == 0);
  const auto l = lines(r.out);
  REQUIRE(l.size() == 13);
  CHECK(l[1].rfind("tau,", 0) == 0);
  CHECK(run("dynamics --sigma 0.5 --format json").code == 3);
}

TEST_CASE("single marginal", "[cli]") {
  const Run r = run("marginals --g 0.01 --sigma 1.01");
  REQUIRE(r.code == 0);
  const auto l = lines(r.out);
  REQUIRE(l.size() == 2 + 1025);
  CHECK(l[0].find("axis=x_plus") != std::string::npos);
  CHECK(l[1] == "x,exact,gauss_below,gauss_above");
  CHECK(split(l[600]).size() == 4);
}

TEST_CASE("default marginal set", "[cli]") {
  const auto dir = scratch("marginals");
  std::filesystem::remove_all(dir);
  const Run r = run("marginals --g 0.01 --grid-n 201 --output " + dir.string());
  REQUIRE(r.code == 0);
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    CHECK(e.path().extension() == ".csv");
    ++files;
  }
  CHECK(files == 6);
}

TEST_CASE("spectrum csv", "[cli]") {
  const Run r = run("spectrum --sigma 0.5 --grid-min -5 --grid-max 5 --grid-n 101");
  REQUIRE(r.code == 0);
  const auto l = lines(r.out);
  REQUIRE(l.size() == 2 + 101);
  CHECK(l[1] == "omega,S_x,S_y");
  CHECK(run("spectrum --sigma 0.5 --branch above-plus").code == 2);
}
