#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(MTGW_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  Run r{-1, {}};
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(DATA_DIR) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / ("mtgw_cli_" + name);
  std::ofstream(path) << content;
  return path.string();
}

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(CliValidate, E1) {
  auto r = run("validate --spec " + data("e1.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "# critical, primitive, aperiodic, non-singular"));
  EXPECT_TRUE(has(r.out, "a_star,1 1"));
}

TEST(CliValidate, Singular) {
  auto r = run("validate --spec " + data("singular.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "singular,yes"));
}

TEST(CliValidate, BadSpecsExitTwo) {
  EXPECT_EQ(run("validate --spec " + data("bad_mass.json")).code, 2);
  EXPECT_EQ(run("validate --spec " + temp_file("broken.json", "{\"d\":2, \"laws\": [")).code, 2);
  EXPECT_EQ(run("validate --spec /nonexistent.json").code, 2);
}

TEST(CliUsage, ExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("validate --bogus").code, 1);
  EXPECT_EQ(run("experiment nonsense --spec " + data("e1.json")).code, 1);
  EXPECT_EQ(run("progeny --spec " + data("e1.json") + " --cap 0").code, 1);
  EXPECT_EQ(run("progeny --spec " + data("e1.json") + " --root 3").code, 1);
  EXPECT_EQ(run("validate --spec " + data("e1.json") + " --format xml").code, 1);
}

TEST(CliProgeny, Tables) {
  auto e1 = run("progeny --spec " + data("e1.json") + " --cap 4");
  EXPECT_EQ(e1.code, 0);
  EXPECT_TRUE(has(e1.out, "\n1,0,1/4,1/4,1,4,equal\n"));
  EXPECT_TRUE(has(e1.out, "# PASS engines agree"));
  EXPECT_FALSE(has(e1.out, "DIFFER"));
  auto bin = run("progeny --spec " + data("binary.json") + " --cap 5");
  EXPECT_TRUE(has(bin.out, "\n3,1/8,1/8,1,8,equal\n"));
}

TEST(CliProgeny, NoFeasibleCensus) {
  // type 2 begets one type 2 forever
  auto path = temp_file("chain.json", R"({"d":2,"laws":[[{"k":[0,0],"p":"1"}],[{"k":[0,1],"p":"1"}]]})");
  auto r = run("progeny --spec " + path + " --root 2 --cap 4");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "k1,k2,enumeration,walks,numerator,denominator,status\n# PASS"));
}

TEST(CliExperiment, Convergence) {
  auto r = run("experiment convergence --spec " + data("e1.json") + " --n-min 4 --n-max 12");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "# PASS delta decreasing for every probe"));
}

TEST(CliExperiment, LocalClt) {
  auto r = run("experiment gnedenko --law 1,0,1 --n-min 16 --n-max 128 --grid 5");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "gaussian=0.3989422804 error=0.000996"));
  EXPECT_TRUE(has(r.out, "# PASS sup decreases"));
}

TEST(CliExperiment, StrongRatioJson) {
  auto r = run("experiment strongratio --law 1,0,2 --n-min 50 --n-max 200 --format json --seed 9");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(j["rows"].size(), 6u);
}

TEST(CliExperiment, InfeasibleExitThree) {
  auto sub = temp_file("sub.json", R"({"d":1,"laws":[[{"k":[0],"p":"1/2"},{"k":[1],"p":"1/2"}]]})");
  EXPECT_EQ(run("experiment convergence --spec " + sub).code, 3);
  EXPECT_EQ(run("experiment strongratio --law 1,0,1 --n-min 3 --n-max 3").code, 0);
}

TEST(CliSample, Reproducible) {
  auto a = run("sample --spec " + data("e1.json") + " --count 20 --seed 11");
  auto b = run("sample --spec " + data("e1.json") + " --count 20 --seed 11");
  auto c = run("sample --spec " + data("e1.json") + " --count 20 --seed 12");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_TRUE(has(a.out, "# seed: 11\n# config: "));
  auto line = a.out.substr(a.out.find("tree\n") + 5);
  line = line.substr(0, line.find('\n'));
  EXPECT_EQ(nlohmann::json::parse(line)[0]["mark"], 1);
}

TEST(CliSample, ConditionedAndOutFile) {
  auto out = (std::filesystem::temp_directory_path() / "mtgw_cli_sample.csv").string();
  auto r = run("sample --spec " + data("e1.json") + " --count 5 --census 2,2 --seed 3 --out " + out);
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(out);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_TRUE(has(text, "# census: 2 2"));
  EXPECT_TRUE(has(text, "# acceptance rate"));
}
