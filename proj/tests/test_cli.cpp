#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("nhaah_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(NHAAH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump(2);
}

}  // namespace

TEST(Cli, BoundaryValue) {
  TempDir tmp;
  const std::string cmd = std::string(NHAAH_CLI_PATH) +
                          " boundary --g 0.5 --h 0 --V2 0 > " + (tmp.path / "out.txt").string();
  ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  EXPECT_NEAR(std::stod(slurp(tmp.path / "out.txt")), 3.297442541400256, 1e-10);
}

TEST(Cli, HermitianSpectrumIsReal) {
  TempDir tmp;
  write(tmp.path / "cfg.json",
        json{{"model", {{"L", 55}, {"V1", 1.2}, {"V2", 0.4}}}, {"eigenvectors", true}});
  ASSERT_EQ(run("spectrum --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "run").string()),
            0);
  std::ifstream in(tmp.path / "run" / "eigenvalues.csv");
  std::string line;
  std::getline(in, line);  // meta
  std::getline(in, line);  // meta
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    EXPECT_LT(std::abs(std::stod(line.substr(last + 1))), 1e-13);
    ++rows;
  }
  EXPECT_EQ(rows, 55);
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "density_profile.csv"));
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "run_manifest.json"));
  // eigenvector blob: 55x55 complex128 plus its JSON sidecar
  ASSERT_TRUE(fs::exists(tmp.path / "run" / "eigenvectors.bin"));
  EXPECT_EQ(fs::file_size(tmp.path / "run" / "eigenvectors.bin"), 55u * 55u * 16u);
  const json hdr = json::parse(slurp(tmp.path / "run" / "eigenvectors.bin.json"));
  EXPECT_EQ(hdr.at("rows").get<int>(), 55);
  EXPECT_EQ(hdr.at("layout").get<std::string>(), "column-major");
}

TEST(Cli, MalformedConfigFails) {
  TempDir tmp;
  std::ofstream(tmp.path / "bad.json") << "{ not json";
  EXPECT_NE(run("spectrum --config " + (tmp.path / "bad.json").string()), 0);
  write(tmp.path / "bad2.json", json{{"model", {{"L", 2}}}});  // below PBC minimum
  EXPECT_NE(run("spectrum --config " + (tmp.path / "bad2.json").string()), 0);
  write(tmp.path / "bad3.json", json{{"model", {{"L", 8}, {"unknown_knob", 1}}}});
  EXPECT_NE(run("spectrum --config " + (tmp.path / "bad3.json").string()), 0);
}

TEST(Cli, DeterministicDataFiles) {
  TempDir tmp;
  write(tmp.path / "cfg.json",
        json{{"model", {{"L", 8}, {"V1", 1.0}, {"V2", 0.5}, {"g", 0.2}}},
             {"axes", json::array({{{"name", "V1"}, {"min", 0.5}, {"max", 1.5}, {"count", 3}}})},
             {"observables", {"fd", "f_im"}},
             {"n_phi_samples", 3},
             {"master_seed", 11}});
  ASSERT_EQ(run("phase-diagram --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "a").string()),
            0);
  ASSERT_EQ(run("phase-diagram --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "b").string()),
            0);
  EXPECT_EQ(slurp(tmp.path / "a" / "phase_diagram_rows.csv"),
            slurp(tmp.path / "b" / "phase_diagram_rows.csv"));
  EXPECT_EQ(slurp(tmp.path / "a" / "phase_diagram_mean.csv"),
            slurp(tmp.path / "b" / "phase_diagram_mean.csv"));
  EXPECT_TRUE(fs::exists(tmp.path / "a" / "boundary_v1c.csv"));
}

TEST(Cli, ResumeTouchesNoCompletedCells) {
  TempDir tmp;
  write(tmp.path / "cfg.json",
        json{{"model", {{"L", 8}, {"V2", 0.5}, {"g", 0.3}}},
             {"axes", json::array({{{"name", "V1"}, {"min", 0.5}, {"max", 2.5}, {"count", 4}}})},
             {"observables", {"fd"}},
             {"n_phi_samples", 2}});
  const std::string base = " --config " + (tmp.path / "cfg.json").string() + " --out " +
                           (tmp.path / "run").string();
  ASSERT_EQ(run("phase-diagram" + base), 0);
  const json m1 = json::parse(slurp(tmp.path / "run" / "run_manifest.json"));
  EXPECT_EQ(m1.at("n_diagonalizations").get<int>(), 8);
  EXPECT_EQ(m1.at("cache_hits").get<int>(), 0);
  ASSERT_EQ(run("phase-diagram" + base + " --resume"), 0);
  const json m2 = json::parse(slurp(tmp.path / "run" / "run_manifest.json"));
  EXPECT_EQ(m2.at("n_diagonalizations").get<int>(), 0);
  EXPECT_EQ(m2.at("cache_hits").get<int>(), 8);
  // without --resume the stale cache is dropped and everything recomputes
  ASSERT_EQ(run("phase-diagram" + base), 0);
  const json m3 = json::parse(slurp(tmp.path / "run" / "run_manifest.json"));
  EXPECT_EQ(m3.at("n_diagonalizations").get<int>(), 8);
}

TEST(Cli, WindingWithTrajectory) {
  TempDir tmp;
  write(tmp.path / "cfg.json",
        json{{"model", {{"L", 8}, {"N", 4}, {"U", 2.0}, {"V1", 1.0}, {"V2", 0.5}, {"g", 0.5}}},
             {"many_body", true},
             {"family", "g"},
             {"base_energy", "zero"},
             {"axes", json::array({{{"name", "V1"}, {"min", 1.0}, {"max", 2.0}, {"count", 2}}})},
             {"observables", {"f_im"}},
             {"n_theta", 64},
             {"trajectory", true}});
  ASSERT_EQ(run("winding --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "run").string()),
            0);
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "winding_mean.csv"));
  // trajectory loop closes: first and last rows carry the same value
  std::ifstream in(tmp.path / "run" / "det_trajectory.csv");
  std::string line, first, last;
  std::getline(in, line);  // meta
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (first.empty()) first = line.substr(line.find(','));
    if (!line.empty()) last = line.substr(line.find(','));
  }
  std::stringstream fa(first.substr(1)), fb(last.substr(1));
  double re1, im1, re2, im2;
  char comma;
  fa >> re1 >> comma >> im1;
  fb >> re2 >> comma >> im2;
  EXPECT_NEAR(re1, re2, 1e-8 * std::abs(re1));
  EXPECT_NEAR(im1, im2, 1e-8 * std::max(1.0, std::abs(im1)));
}

TEST(Cli, MblCurvesAndCollapse) {
  TempDir tmp;
  write(tmp.path / "cfg.json",
        json{{"model", {{"U", 2.0}, {"V2", 0.5}, {"g", 0.5}}},
             {"many_body", true},
             {"L_values", {6, 8}},
             {"axes", json::array({{{"name", "V1"}, {"min", 2.0}, {"max", 8.0}, {"count", 5}}})},
             {"observables", {"ee", "f_im"}},
             {"n_phi_samples", 4},
             {"collapse", {{"observable", "ee"}, {"xc_range", {3.0, 7.0}}, {"nu_range", {0.5, 3.0}}}}});
  ASSERT_EQ(run("mbl --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "run").string()),
            0);
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "mbl_L6_mean.csv"));
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "mbl_L8_mean.csv"));
  const json fit = json::parse(slurp(tmp.path / "run" / "collapse_fit.json"));
  EXPECT_TRUE(fit.contains("x_c"));
  EXPECT_TRUE(fit.contains("nu"));
}

TEST(Cli, MblOneParticleSectorMatchesSingleParticle) {
  // with U=0 and one particle the interacting run reduces to first
  // quantization; the fd columns agree bit for bit
  TempDir tmp;
  const json axes = json::array({{{"name", "V1"}, {"min", 1.0}, {"max", 3.0}, {"count", 3}}});
  write(tmp.path / "mb.json", json{{"model", {{"V2", 0.5}, {"g", 0.4}, {"U", 0.0}}},
                                   {"many_body", true},
                                   {"L_values", {8}},
                                   {"N_values", {{"8", 1}}},
                                   {"axes", axes},
                                   {"observables", {"fd"}},
                                   {"n_phi_samples", 1}});
  write(tmp.path / "sp.json", json{{"model", {{"L", 8}, {"V2", 0.5}, {"g", 0.4}}},
                                   {"axes", axes},
                                   {"observables", {"fd"}},
                                   {"n_phi_samples", 1}});
  ASSERT_EQ(run("mbl --config " + (tmp.path / "mb.json").string() + " --out " +
                (tmp.path / "a").string()),
            0);
  ASSERT_EQ(run("phase-diagram --config " + (tmp.path / "sp.json").string() + " --out " +
                (tmp.path / "b").string()),
            0);
  auto data_lines = [](const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') rows.push_back(line);
    return rows;
  };
  const auto a = data_lines(tmp.path / "a" / "mbl_L8_mean.csv");
  const auto b = data_lines(tmp.path / "b" / "phase_diagram_mean.csv");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Cli, LevelStatsEmitsHistogramAndKs) {
  TempDir tmp;
  write(tmp.path / "cfg.json",
        json{{"model", {{"L", 10}, {"N", 5}, {"U", 2.0}, {"V1", 1.3}, {"V2", 0.5}, {"g", 0.5}}},
             {"many_body", true},
             {"n_phi_samples", 3},
             {"references", {"ginibre_complex", "poisson_real"}}});
  ASSERT_EQ(run("levelstats --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "run").string()),
            0);
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "levelstats.csv"));
  const json m = json::parse(slurp(tmp.path / "run" / "run_manifest.json"));
  EXPECT_TRUE(m.at("ks_distance").contains("ginibre_complex"));
  EXPECT_TRUE(m.at("ks_distance").contains("poisson_real"));
}
