#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cvent/commands.hpp"
#include "cvent/io.hpp"

using namespace cvent;
namespace fs = std::filesystem;

namespace {

const fs::path kPaperConfig = fs::path(CVENT_SOURCE_DIR) / "configs" / "paper.json";

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cvent_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct RunOutput {
  int code;
  std::string out;
  std::string err;
};

RunOutput run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"cvent"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string expect_config_error(const std::string& text) {
  try {
    config::parse(text, "test.json");
  } catch (const config::ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected a config error";
  return {};
}

const char* kMinimal = R"({
  "sources": [
    {"pump_ratio_x": 0.5, "gamma_hwhm_mhz": 1000},
    {"pump_ratio_x": 0.5, "gamma_hwhm_mhz": 1000}
  ],
  "detection": {"total_efficiency": 0.8}
})";

}  // namespace

TEST(Config, PaperConfigCavityTable) {
  const auto cfg = config::load(kPaperConfig);
  const auto cavities = config::build_cavities(cfg);
  ASSERT_EQ(cavities.size(), 2u);
  EXPECT_EQ(cavities[0].name, "signal");
  EXPECT_NEAR(cavities[0].figures.fsr, 31.75e9, 0.05e9);
  EXPECT_NEAR(cavities[0].figures.finesse, 14.0, 0.2);
  EXPECT_NEAR(cavities[1].figures.finesse, 308.0, 2.0);
  EXPECT_NEAR(cavities[0].figures.escape_efficiency, 0.999, 1e-3);
}

TEST(Config, MissingFieldNamesItsPath) {
  const auto msg = expect_config_error(R"({"sources": [{"gamma_hwhm_mhz": 1000}, {"pump_ratio_x": 0.5, "gamma_hwhm_mhz": 1000}],
    "detection": {"total_efficiency": 0.8}})");
  EXPECT_NE(msg.find("sources[0]"), std::string::npos) << msg;
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
  const auto msg = expect_config_error("{\n  \"seed\": 1,\n  \"sources\": [,]\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, RejectsUnknownField) {
  std::string text = kMinimal;
  text.insert(text.rfind('}'), ", \"detecton\": {}");
  const auto msg = expect_config_error(text);
  EXPECT_NE(msg.find("detecton"), std::string::npos) << msg;
}

TEST(Config, RejectsOutOfRangeValue) {
  std::string text = kMinimal;
  text.replace(text.find("0.8"), 3, "1.8");
  const auto msg = expect_config_error(text);
  EXPECT_NE(msg.find("detection"), std::string::npos) << msg;
  EXPECT_NE(msg.find("total efficiency"), std::string::npos) << msg;
}

TEST(Config, JsonRoundTripIsExact) {
  const auto cfg = config::load(kPaperConfig);
  const auto again = config::parse(config::to_json_string(cfg), "round-trip", cfg.base_dir);
  EXPECT_TRUE(again == cfg);
  EXPECT_EQ(config::to_json_string(again), config::to_json_string(cfg));

  const auto a = fresh_dir("rt_a"), b = fresh_dir("rt_b");
  cli::CommandOptions oa, ob;
  oa.out_dir = a;
  ob.out_dir = b;
  cli::cmd_spectrum(cfg, oa);
  cli::cmd_spectrum(again, ob);
  EXPECT_EQ(io::read_file(a / "spectrum.csv"), io::read_file(b / "spectrum.csv"));
}

TEST(Config, ZeroPumpGivesVacuumDuan) {
  std::string text = kMinimal;
  for (auto pos = text.find("0.5"); pos != std::string::npos; pos = text.find("0.5")) text.replace(pos, 3, "0.0");
  const auto cfg = config::parse(text);
  const auto t = sweep(config::build_model(cfg), config::build_sweep(cfg));
  for (double d : t.duan) EXPECT_DOUBLE_EQ(d, 4.0);
}

TEST(Config, LoPowerBandSplitOnlyAboveBoundary) {
  const auto cfg = config::load(kPaperConfig);
  const auto s = config::build_sweep(cfg);
  const auto low = s.band_gains(300e6);
  EXPECT_DOUBLE_EQ(low.a / low.b, 1.0);
  const auto high = s.band_gains(900e6);
  EXPECT_NEAR(high.a / high.b, std::sqrt(2.0), 1e-12);
}

TEST(Config, ThresholdFromPaperInputs) {
  const auto t = opo_threshold(config::build_threshold_inputs(config::load(kPaperConfig)));
  EXPECT_GT(t.input_power, 0.330);
  EXPECT_LT(t.input_power, 1.310);
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh_dir("codes");
  EXPECT_EQ(run_cli({"cavity", "--config", kPaperConfig.string(), "--out", dir.string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "cavity.csv"));
  EXPECT_EQ(run_cli({"cavity"}).code, 1);
  EXPECT_EQ(run_cli({"bogus"}).code, 1);
  EXPECT_EQ(run_cli({"cavity", "--config", (dir / "missing.json").string()}).code, 1);

  // a fit capped at one iteration cannot converge
  auto j = nlohmann::json::parse(io::read_file(kPaperConfig));
  j["fit"]["max_iterations"] = 1;
  j["fit"]["starts"] = 1;
  io::write_file_atomic(dir / "capped.json", j.dump());
  ASSERT_EQ(run_cli({"synth", "--config", kPaperConfig.string(), "--out", dir.string()}).code, 0);
  const auto r = run_cli({"fit", "--config", (dir / "capped.json").string(), "--data",
                          (dir / "synthetic.csv").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST(Cli, SynthThenFitRecoversTruth) {
  const auto dir = fresh_dir("roundtrip");
  ASSERT_EQ(run_cli({"synth", "--config", kPaperConfig.string(), "--out", dir.string(), "--seed", "17"}).code, 0);
  const auto r = run_cli({"fit", "--config", kPaperConfig.string(), "--data", (dir / "synthetic.csv").string(),
                          "--out", dir.string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(fs::exists(dir / "fit.csv"));
  const auto j = nlohmann::json::parse(io::read_file(dir / "fit.json"));
  std::map<std::string, double> v;
  for (const auto& p : j.at("parameters")) v[p.at("name").get<std::string>()] = p.at("value").get<double>();
  EXPECT_NEAR(v.at("eta_total") / 0.588, 1.0, 0.02);
  EXPECT_NEAR(v.at("gamma_hwhm_mhz") / 1130.0, 1.0, 0.02);
  EXPECT_NEAR(v.at("gain_ratio"), 1.0, 0.02);
}

TEST(Cli, AllMaskedDataIsRejected) {
  const auto dir = fresh_dir("masked");
  ASSERT_EQ(run_cli({"synth", "--config", kPaperConfig.string(), "--out", dir.string()}).code, 0);
  auto j = nlohmann::json::parse(io::read_file(kPaperConfig));
  j["fit"]["exclusion_windows_mhz"] = {{0.0, 2000.0}};
  io::write_file_atomic(dir / "masked.json", j.dump());
  fs::remove(dir / "fit.json");
  const auto r = run_cli({"fit", "--config", (dir / "masked.json").string(), "--data",
                          (dir / "synthetic.csv").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("insufficient unmasked points"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "fit.json"));
}

TEST(Cli, NoOutputOnFailure) {
  const auto dir = fresh_dir("nopartial");
  auto j = nlohmann::json::parse(kMinimal);
  j["sweep"] = {{"band_splits", {{{"lower_mhz", 0.3}, {"upper_mhz", 620}, {"gain_a", 1.0}, {"gain_b", 1.0}}}}};
  io::write_file_atomic(dir / "gap.json", j.dump());
  const auto out = dir / "out";
  const auto r = run_cli({"spectrum", "--config", (dir / "gap.json").string(), "--out", out.string()});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(out / "spectrum.csv"));
  EXPECT_FALSE(fs::exists(out / "spectrum.json"));
}

TEST(Cli, SeedOverrideChangesSynthOnly) {
  const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  run_cli({"synth", "--config", kPaperConfig.string(), "--out", a.string(), "--seed", "1"});
  run_cli({"synth", "--config", kPaperConfig.string(), "--out", b.string(), "--seed", "2"});
  EXPECT_NE(io::read_file(a / "synthetic.csv"), io::read_file(b / "synthetic.csv"));
}
