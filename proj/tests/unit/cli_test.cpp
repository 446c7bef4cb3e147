#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/mock_predictor.hpp"
#include "uwsu/cli/cli.hpp"
#include "uwsu/common/error.hpp"
#include "uwsu/datagen/records.hpp"
#include "uwsu/imaging/imaging.hpp"
#include "uwsu/imaging/io.hpp"
#include "uwsu/vfe/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace uwsu;

namespace {

const std::string kFixtures = UWSU_FIXTURE_DIR;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "uwsu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("uwsu_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Smooth scene and matching depth map written as a PNG / raw pair.
void write_scene(const fs::path& dir, const std::string& stem, int bit_depth, std::uint64_t seed) {
  imaging::SceneSpec spec;
  spec.height = 24;
  spec.width = 20;
  const auto pair = imaging::synthesize_pair(seed, spec);
  fs::create_directories(dir / "img");
  fs::create_directories(dir / "depth");
  imaging::write_rgb_png(dir / "img" / (stem + ".png"), pair.clean, bit_depth);
  imaging::write_depth_raw(dir / "depth" / (stem + ".uwdm"), pair.depth);
}

}  // namespace

TEST_SUITE("cli.config") {
  TEST_CASE("unknown keys are rejected with their path") {
    CHECK_THROWS_WITH_AS(cli::parse_config(R"({"physics": {"betta": 1}})"), "config: unknown key 'physics.betta'",
                         ValidationError);
    CHECK_THROWS_AS(cli::parse_config(R"({"colour": 1})"), ValidationError);
    CHECK_THROWS_AS(cli::parse_config(R"({"seed": -3})"), ValidationError);
    CHECK_THROWS_AS(cli::parse_config(R"({"physics": {"beta": [1, 2]}})"), ValidationError);
  }

  TEST_CASE("values and broadcast triples") {
    const auto c = cli::parse_config(
        R"({"seed": 5, "paths": {"outputs": "o"}, "physics": {"beta": 0.2, "backscatter": [0.1, 0.2, 0.3]},
            "vfe": {"w_max": 0}})");
    CHECK(*c.seed == 5);
    CHECK(*c.paths.outputs == "o");
    CHECK((*c.physics.beta)[2] == 0.2);
    CHECK((*c.physics.backscatter)[1] == 0.2);
    CHECK(*c.vfe.w_max == 0.0);
  }

  TEST_CASE("a bad config file exits 2 and names the key") {
    const auto dir = temp_dir("badcfg");
    spit(dir / "c.json", R"({"paths": {"output": "x"}})");
    const auto r = run({"synth", "--config", (dir / "c.json").string(), "--seed", "1", "--out", dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("paths.output") != std::string::npos);
  }

  TEST_CASE("flags override the config file") {
    const auto dir = temp_dir("override");
    spit(dir / "c.json", R"({"seed": 1, "vfe": {"w_max": 0, "instances": 1}})");
    const auto r = run({"vfe-selfcheck", "--config", (dir / "c.json").string(), "--w-max", "2", "--out",
                        (dir / "o").string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("[SKIP]") == std::string::npos);
  }
}

TEST_SUITE("cli.usage") {
  TEST_CASE("help, missing subcommand and missing --out") {
    CHECK(run({"--help"}).code == cli::kExitOk);
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"synth", "--seed", "1"}).code == cli::kExitUsage);
    CHECK(run({"eval", "--out", "x", "--format", "xml"}).code == cli::kExitUsage);
  }

  TEST_CASE("a missing seed is a usage error") {
    const auto dir = temp_dir("noseed");
    const auto r = run({"synth", "--out", dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("--seed") != std::string::npos);
  }
}

TEST_SUITE("cli.imaging") {
  TEST_CASE("zero attenuation and backscatter leave PNGs bit-identical") {
    const auto dir = temp_dir("identity");
    for (int bits : {8, 16}) {
      const std::string stem = "scene" + std::to_string(bits);
      write_scene(dir, stem, bits, 10 + bits);
    }
    const auto r = run({"degrade", "--image", (dir / "img").string(), "--depth", (dir / "depth").string(), "--beta",
                        "0", "--backscatter", "0,0,0", "--out", (dir / "out").string()});
    REQUIRE(r.code == cli::kExitOk);
    for (int bits : {8, 16}) {
      const std::string name = "scene" + std::to_string(bits) + ".png";
      CHECK(slurp(dir / "img" / name) == slurp(dir / "out" / name));
    }
    CHECK(fs::exists(dir / "out" / "degrade.summary.json"));
  }

  TEST_CASE("16-bit degrade then restore stays above 60 dB") {
    const auto dir = temp_dir("roundtrip");
    write_scene(dir, "a", 16, 3);
    const std::string beta = "0.2,0.3,0.4", back = "0.05,0.1,0.15";
    REQUIRE(run({"degrade", "--image", (dir / "img" / "a.png").string(), "--depth", (dir / "depth" / "a.uwdm").string(),
                 "--beta", beta, "--backscatter", back, "--out", (dir / "deg").string()})
                .code == cli::kExitOk);
    REQUIRE(run({"restore", "--image", (dir / "deg" / "a.png").string(), "--depth", (dir / "depth" / "a.uwdm").string(),
                 "--beta", beta, "--backscatter", back, "--out", (dir / "res").string()})
                .code == cli::kExitOk);
    int bits = 0;
    const auto clean = imaging::read_rgb_png(dir / "img" / "a.png");
    const auto restored = imaging::read_rgb_png(dir / "res" / "a.png", &bits);
    CHECK(bits == 16);
    double mse = 0.0;
    for (std::size_t i = 0; i < clean.values().size(); ++i) {
      const double d = clean.values()[i] - restored.values()[i];
      mse += d * d;
    }
    mse /= static_cast<double>(clean.values().size());
    const double psnr = mse == 0.0 ? 1e9 : 10.0 * std::log10(1.0 / mse);
    CHECK(psnr > 60.0);
  }

  TEST_CASE("restore estimates backscatter when none is given") {
    const auto dir = temp_dir("estimate");
    write_scene(dir, "a", 8, 4);
    const auto r = run({"restore", "--image", (dir / "img" / "a.png").string(), "--depth",
                        (dir / "depth" / "a.uwdm").string(), "--beta", "0.1", "--patch-size", "4", "--out",
                        (dir / "res").string()});
    REQUIRE(r.code == cli::kExitOk);
    const auto summary = datagen::Json::parse(slurp(dir / "res" / "restore.summary.json"));
    CHECK(summary["images"][0]["backscatter_source"] == "estimated");
    CHECK(run({"restore", "--image", (dir / "img" / "a.png").string(), "--depth", (dir / "depth" / "a.uwdm").string(),
               "--beta", "0.1", "--out", (dir / "res2").string()})
              .code == cli::kExitUsage);
  }

  TEST_CASE("a missing depth map exits 2 and names the path") {
    const auto dir = temp_dir("nodepth");
    write_scene(dir, "a", 8, 5);
    write_scene(dir, "b", 8, 6);
    fs::remove(dir / "depth" / "b.uwdm");
    const auto r = run({"degrade", "--image", (dir / "img").string(), "--depth", (dir / "depth").string(), "--beta",
                        "0.1", "--backscatter", "0.1", "--out", (dir / "out").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("b.png") != std::string::npos);
    CHECK(r.err.find((dir / "depth").string()) != std::string::npos);
  }

  TEST_CASE("synth is deterministic per seed") {
    const auto a = temp_dir("synth_a"), b = temp_dir("synth_b");
    REQUIRE(run({"synth", "--seed", "8", "--count", "2", "--out", a.string()}).code == cli::kExitOk);
    REQUIRE(run({"synth", "--seed", "8", "--count", "2", "--out", b.string()}).code == cli::kExitOk);
    for (const char* f : {"clean/scene_001.png", "depth/scene_001.uwdm", "degraded/scene_001.png"})
      CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_SUITE("cli.genqa_eval") {
  TEST_CASE("genqa output is reproducible for a seed") {
    const auto a = temp_dir("genqa_a"), b = temp_dir("genqa_b");
    const std::string ann = kFixtures + "/annotations.jsonl", stub = kFixtures + "/stub_provider";
    REQUIRE(run({"genqa", "--annotations", ann, "--provider-stub", stub, "--seed", "7", "--out", a.string()}).code ==
            cli::kExitOk);
    REQUIRE(run({"genqa", "--annotations", ann, "--provider-stub", stub, "--seed", "7", "--out", b.string()}).code ==
            cli::kExitOk);
    CHECK(slurp(a / "qa.jsonl") == slurp(b / "qa.jsonl"));
    CHECK(slurp(a / "stats.csv") == slurp(b / "stats.csv"));
    CHECK(!datagen::read_qa_records((a / "qa.jsonl").string()).empty());
  }

  TEST_CASE("a taxonomy file enables fine-grained records") {
    const auto dir = temp_dir("genqa_tax");
    spit(dir / "tax.txt", "# classes\nActinopterygii\nElasmobranchii\n");
    const auto r = run({"genqa", "--annotations", kFixtures + "/annotations.jsonl", "--taxonomy",
                        (dir / "tax.txt").string(), "--seed", "7", "--out", (dir / "o").string()});
    REQUIRE(r.code == cli::kExitOk);
    const auto recs = datagen::read_qa_records((dir / "o" / "qa.jsonl").string());
    CHECK(std::any_of(recs.begin(), recs.end(), [](const auto& q) { return q.task == datagen::QaTask::fine_cls; }));
  }

  TEST_CASE("empty annotations give an empty dataset") {
    const auto dir = temp_dir("genqa_empty");
    spit(dir / "ann.jsonl", "");
    const auto r = run({"genqa", "--annotations", (dir / "ann.jsonl").string(), "--seed", "1", "--out",
                        (dir / "o").string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(slurp(dir / "o" / "qa.jsonl").empty());
    CHECK(r.out.find("total") != std::string::npos);
  }

  TEST_CASE("eval with a subset, and with missing predictions") {
    const auto dir = temp_dir("eval");
    REQUIRE(run({"genqa", "--annotations", kFixtures + "/annotations.jsonl", "--provider-stub",
                 kFixtures + "/stub_provider", "--seed", "7", "--out", dir.string()})
                .code == cli::kExitOk);
    const auto gold = datagen::read_qa_records((dir / "qa.jsonl").string());
    auto preds = mock::predict(gold);
    eval::write_predictions((dir / "pred.jsonl").string(), preds);

    auto r = run({"eval", "--predictions", (dir / "pred.jsonl").string(), "--gold", (dir / "qa.jsonl").string(),
                  "--subset", "low-light", "--out", (dir / "e").string()});
    REQUIRE(r.code == cli::kExitOk);
    const auto report = datagen::Json::parse(slurp(dir / "e" / "report.json"));
    CHECK(report["subset_filter"] == "low-light");
    CHECK(report["subsets"].contains("low-light"));
    CHECK(!report["subsets"].contains("blue-tint"));
    CHECK(r.out == slurp(dir / "e" / "report.json"));

    r = run({"eval", "--predictions", (dir / "pred.jsonl").string(), "--gold", (dir / "qa.jsonl").string(), "--format",
             "csv", "--out", (dir / "c").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(slurp(dir / "c" / "report.csv").rfind("scope,task,metric,value\n", 0) == 0);

    preds.pop_back();
    eval::write_predictions((dir / "short.jsonl").string(), preds);
    r = run({"eval", "--predictions", (dir / "short.jsonl").string(), "--gold", (dir / "qa.jsonl").string(), "--out",
             (dir / "m").string()});
    CHECK(r.code == cli::kExitCheckFailed);
    CHECK(r.err.find(gold.back().id) != std::string::npos);

    preds.push_back({"nowhere-detection-0", "detection", "fish:[0, 0, 1, 1]"});
    preds.push_back({gold.back().id, std::string(datagen::to_string(gold.back().task)), gold.back().answer});
    eval::write_predictions((dir / "extra.jsonl").string(), preds);
    r = run({"eval", "--predictions", (dir / "extra.jsonl").string(), "--gold", (dir / "qa.jsonl").string(), "--out",
             (dir / "x").string()});
    CHECK(r.code == cli::kExitCheckFailed);
    CHECK(r.err.find("nowhere-detection-0") != std::string::npos);
  }

  TEST_CASE("stats prints every format") {
    const auto dir = temp_dir("stats");
    REQUIRE(run({"genqa", "--annotations", kFixtures + "/annotations.jsonl", "--seed", "2", "--out", dir.string()})
                .code == cli::kExitOk);
    for (const char* fmt : {"table", "json", "csv"}) {
      const auto r = run({"stats", "--dataset", (dir / "qa.jsonl").string(), "--format", fmt, "--out",
                          (dir / "s").string()});
      CHECK(r.code == cli::kExitOk);
      CHECK(!r.out.empty());
    }
    CHECK(slurp(dir / "s" / "stats.csv") == slurp(dir / "stats.csv"));
  }
}

TEST_SUITE("cli.selfcheck") {
  TEST_CASE("default configuration passes") {
    const auto dir = temp_dir("selfcheck");
    const auto r = run({"vfe-selfcheck", "--seed", "3", "--instances", "2", "--out", dir.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("[FAIL]") == std::string::npos);
    const auto s = datagen::Json::parse(slurp(dir / "vfe-selfcheck.summary.json"));
    CHECK(s["passed"] == true);
    CHECK(s["max_grad_relative_error"].get<double>() < 1e-4);
  }

  TEST_CASE("w_max = 0 skips monotonicity with a notice") {
    const auto dir = temp_dir("selfcheck0");
    const auto r = run({"vfe-selfcheck", "--seed", "3", "--w-max", "0", "--instances", "1", "--out", dir.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("[SKIP] monotonicity") != std::string::npos);
  }

  TEST_CASE("checkpoints load, and a corrupted one names the parameter") {
    const auto dir = temp_dir("selfcheck_ckpt");
    Rng rng(5);
    const auto params = vfe::VfeParameters::initialize(8, 4, 8, rng);
    auto manifest = vfe::save_vfe(params);
    manifest.save(dir / "good.json");
    auto r = run({"vfe-selfcheck", "--seed", "1", "--instances", "1", "--checkpoint", (dir / "good.json").string(),
                  "--out", (dir / "o").string()});
    CHECK(r.code == cli::kExitOk);

    for (auto& t : manifest.tensors)
      if (t.name == "vfe.w_k") t.value = vfe::Matrix::Zero(3, 3);
    manifest.save(dir / "bad.json");
    r = run({"vfe-selfcheck", "--seed", "1", "--checkpoint", (dir / "bad.json").string(), "--out",
             (dir / "o").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("w_k") != std::string::npos);
  }
}
