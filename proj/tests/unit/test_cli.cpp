#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "geoloc_cli/commands.hpp"

namespace fs = std::filesystem;

namespace {

struct Output {
  int code;
  std::string out;
  std::string err;
};

Output run(std::vector<std::string> args) {
  args.insert(args.begin(), "geoloc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = geoloc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(GEOLOC_DATA_DIR) + "/" + name; }

}  // namespace

TEST(Cli, Help) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE((r.out + r.err).find("solve"), std::string::npos);
}

TEST(Cli, UnknownFlagIsInputError) {
  EXPECT_EQ(run({"solve", "--bogus", data("tdoa_3d.txt")}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
}

TEST(Cli, MissingFileIsInputError) {
  const auto r = run({"solve", "/nonexistent/scenario.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, SolveTdoa) {
  const auto r = run({"solve", data("tdoa_3d.txt"), "--mode", "tdoa"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("31"), std::string::npos);
}

TEST(Cli, SolveFdoaThreeEpochs) {
  const auto r = run({"solve", data("fdoa_3epoch.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("368"), std::string::npos);
}

TEST(Cli, FdoarNoiselessIsReproducible) {
  const std::vector<std::string> args = {"fdoar", data("fdoa_40pairs.json"), "--maxiter", "2", "--seed", "4"};
  const auto a = run(args);
  const auto b = run(args);
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("40/40"), std::string::npos);
}

TEST(Cli, SimulateThenLoad) {
  const auto dir = fs::temp_directory_path() / ("geoloc_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto file = (dir / "s.json").string();
  EXPECT_EQ(run({"simulate", file, "--pairs", "5", "--seed", "3"}).code, 0);
  EXPECT_TRUE(fs::exists(file));
  const auto r = run({"fdoar", file, "--maxiter", "1", "--seed", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, BoundsCell) {
  const auto r = run({"bounds", "--mode", "tdoa", "--dim", "2", "--repeats", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, BadConfigIsInputError) {
  const auto dir = fs::temp_directory_path() / ("geoloc_cfg_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto cfg = dir / "c.json";
  { std::ofstream(cfg) << R"({"n_pairs": -3})"; }
  EXPECT_EQ(run({"sweep", "--config", cfg.string(), "--out-dir", dir.string()}).code, 1);
  fs::remove_all(dir);
}
