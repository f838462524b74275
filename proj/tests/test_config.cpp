#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "anogen/config.hpp"

using namespace anogen;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal_config() {
  return {{"dataset", {{"root", "/tmp/data"}, {"kind", "mvtec_layout"}}},
          {"resolution", 64},
          {"seed", 7},
          {"output_root", "/tmp/out"}};
}

}  // namespace

TEST_CASE("config parses with defaults and round-trips") {
  const RunConfig c = RunConfig::from_json(minimal_config());
  CHECK(c.resolution == 64);
  CHECK(c.mode == GenerationMode::RgbLevel);
  CHECK(c.schedule.learning_rate == doctest::Approx(2e-4));
  CHECK(c.schedule.epochs == 250);
  CHECK(c.schedule.batch_size == 28);
  CHECK(c.augment.tps_probability == doctest::Approx(0.99));
  CHECK(c.manipulation.kinds.size() == 4);
  CHECK(c.is_splits == 10);
  CHECK(c.tnr == doctest::Approx(0.95));

  // parse -> serialize -> parse yields an equal structure
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("config validation enumerates every invalid field") {
  nlohmann::json j = minimal_config();
  j["mode"] = "banana";
  j["resolution"] = 13;
  j["metrics"] = {{"tnr", 1.5}};
  try {
    RunConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("mode") != std::string::npos);
    CHECK(msg.find("resolution") != std::string::npos);
    CHECK(msg.find("metrics") != std::string::npos);
  }
}

TEST_CASE("config load reports parse errors as config errors") {
  const fs::path path = fs::temp_directory_path() / "anogen-bad-config.json";
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(RunConfig::load(path), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(path.string() + ".missing"), ConfigError);
}

TEST_CASE("sha256 matches known vectors") {
  CHECK(sha256_hex("", 0) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  CHECK(sha256_hex(abc.data(), abc.size()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run manifest accumulates sections") {
  const fs::path root = fs::temp_directory_path() / "anogen-manifest-test";
  fs::remove_all(root);
  {
    RunManifest m(root);
    m.add_section("train", {{"seed", 1}}, {{"dataset", "x"}},
                  {{"checkpoint", "c.bin"}}, 1.5);
  }
  {
    RunManifest m(root);
    CHECK(m.sections().size() == 1);
    m.add_section("generate", {}, {}, {}, 0.5);
    CHECK(m.sections().size() == 2);
    CHECK(m.sections()[0].at("command") == "train");
  }
}
