#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "twinwave/config.hpp"
#include "twinwave/io.hpp"
#include "twinwave/synth.hpp"

using namespace twinwave;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("twinwave_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

FrameStack small_stack() {
  SyntheticSpec spec;
  spec.geometry.wavelength.downsample = 16;
  spec.geometry.radial.downsample = 16;
  spec.shots = 5;
  return synth_thermal(spec, 1);
}

}  // namespace

TEST(Frames, RoundTripIsBitIdentical) {
  TempDir tmp;
  const auto st = small_stack();
  write_frames(tmp.path / "f", st);
  EXPECT_EQ(fs::file_size(tmp.path / "f" / frames_data_name), st.data.size() * sizeof(float));
  const auto back = read_frames(tmp.path / "f");
  EXPECT_EQ(back.shots, st.shots);
  EXPECT_EQ(back.rows(), st.rows());
  EXPECT_EQ(back.cols(), st.cols());
  ASSERT_EQ(back.data.size(), st.data.size());
  EXPECT_EQ(0, std::memcmp(back.data.data(), st.data.data(), st.data.size() * sizeof(float)));
  EXPECT_EQ(back.geometry.wavelength.downsample, 16);
}

TEST(Frames, TruncatedDataRejected) {
  TempDir tmp;
  write_frames(tmp.path, small_stack());
  fs::resize_file(tmp.path / frames_data_name, 100);
  EXPECT_THROW(read_frames(tmp.path), io_error);
  EXPECT_THROW(read_frames(tmp.path / "missing"), io_error);
}

TEST(Heatmap, HeaderMappingAndSidecar) {
  TempDir tmp;
  const std::vector<double> v{0.0, 0.5, 1.0, NAN, 0.25, 1.0};
  emit_heatmap(tmp.path / "h.pgm", v, 3, 2);
  const auto bytes = detail::read_text(tmp.path / "h.pgm");
  const std::string head = "P5\n3 2\n255\n";
  ASSERT_EQ(bytes.size(), head.size() + 6);
  EXPECT_EQ(bytes.substr(0, head.size()), head);
  const std::vector<unsigned char> px(bytes.begin() + static_cast<long>(head.size()), bytes.end());
  EXPECT_EQ(px, (std::vector<unsigned char>{0, 128, 255, 0, 64, 255}));
  const auto side = nlohmann::json::parse(detail::read_text(tmp.path / "h.pgm.json"));
  EXPECT_EQ(side["min"].get<double>(), 0.0);
  EXPECT_EQ(side["max"].get<double>(), 1.0);
  emit_heatmap(tmp.path / "h2.pgm", v, 3, 2);
  EXPECT_EQ(detail::read_text(tmp.path / "h2.pgm"), bytes);
  EXPECT_THROW(emit_heatmap(tmp.path / "bad.pgm", v, 4, 2), std::invalid_argument);
}

TEST(Heatmap, ConstantImageIsBlack) {
  TempDir tmp;
  const std::vector<double> v(4, 2.5);
  emit_heatmap(tmp.path / "c.pgm", v, 2, 2);
  const auto bytes = detail::read_text(tmp.path / "c.pgm");
  EXPECT_EQ(bytes.substr(bytes.size() - 4), std::string(4, '\0'));
}

TEST(Csv, ShortestRoundTripNumbers) {
  CsvWriter csv({"a", "b"});
  csv.row({0.1, 1e-300});
  EXPECT_EQ(csv.str(), "a,b\n0.1,1e-300\n");
  EXPECT_THROW(csv.row({1.0}), std::invalid_argument);
}

TEST(Manifest, ChecksumsVerifyAndDetectTampering) {
  TempDir tmp;
  detail::write_text(tmp.path / "a.txt", "hello\n");
  fs::create_directories(tmp.path / "sub");
  detail::write_text(tmp.path / "sub" / "b.txt", "world\n");
  RunManifest m("simulate", {{"x", 1}}, 7);
  m.write(tmp.path);
  const auto j = nlohmann::json::parse(detail::read_text(tmp.path / manifest_name));
  EXPECT_EQ(j["files"].size(), 2u);
  EXPECT_EQ(j["seed"].get<std::uint64_t>(), 7u);
  EXPECT_TRUE(j["complete"].get<bool>());
  EXPECT_EQ(sha256_file(tmp.path / "a.txt"), "5891b5b522d5df086d0ff0b110fbd9d21bb4fc7163af34d08286a2e846f6be03");
  EXPECT_TRUE(verify_manifest(tmp.path).empty());
  detail::write_text(tmp.path / "sub" / "b.txt", "w0rld\n");
  EXPECT_EQ(verify_manifest(tmp.path), (std::vector<std::string>{"sub/b.txt"}));
}

TEST(Config, EmptyGivesDefaults) {
  const auto c = parse_config_string("");
  EXPECT_EQ(c.shots, RunConfig{}.shots);
  EXPECT_EQ(c.model.coupling.k0, CouplingSchedule{}.k0);
}

TEST(Config, ReadsKeys) {
  const auto c = parse_config_string(R"(
[pump]
power_mW = 35
[coupling]
kappa_m = 0.9
pump_partition = "uniform"
[modes]
m_max = 3
[run]
shots = 100
seed = 9
)");
  EXPECT_EQ(c.model.pump.power_mW, 35.0);
  EXPECT_EQ(c.model.coupling.kappa_m, 0.9);
  EXPECT_EQ(c.partition, PumpPartition::uniform);
  EXPECT_EQ(c.model.modes.m_max, 3);
  EXPECT_EQ(c.shots, 100u);
  EXPECT_EQ(c.seed, 9u);
}

TEST(Config, UnknownKeysAreErrors) {
  EXPECT_THROW(parse_config_string("[pump]\npowr_mW = 3\n"), config_error);
  EXPECT_THROW(parse_config_string("[pumpp]\npower_mW = 3\n"), config_error);
  EXPECT_THROW(parse_config_string("top = 1\n"), config_error);
  try {
    parse_config_string("[run]\nshots = 10\nsheds = 1\n");
    FAIL();
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("run.sheds"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_THROW(parse_config_string("[run]\nshots = 1.5\n"), config_error);
  EXPECT_THROW(parse_config_string("[run]\nshots = -4\n"), config_error);
  EXPECT_THROW(parse_config_string("[pump]\npower_mW = \"high\"\n"), config_error);
  EXPECT_THROW(parse_config_string("[coupling]\nkappa_q = 1.2\n"), config_error);
  EXPECT_THROW(parse_config_string("[pump\n"), config_error);
  try {
    parse_config_string("[pump]\npower_mW = -1\n");
    FAIL();
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("pump.power_mW"), std::string::npos);
  }
  EXPECT_THROW(parse_config("/nonexistent/twinwave.toml"), config_error);
}

TEST(Config, EffectiveConfigRoundTrips) {
  auto c = parse_config_string("[pump]\npower_mW = 12.5\n[detector]\nread_noise = 0.3\n");
  const auto again = parse_config_string(config_to_toml(c));
  EXPECT_EQ(again.model.pump.power_mW, 12.5);
  EXPECT_EQ(again.noise.read_noise, 0.3);
  EXPECT_EQ(config_to_toml(again), config_to_toml(c));
}
