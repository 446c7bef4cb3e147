#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles/detection_oracle.hpp"
#include "support/generators.hpp"
#include "uwsu/common/rng.hpp"
#include "uwsu/datagen/generate.hpp"
#include "uwsu/eval/evaluate.hpp"
#include "uwsu/eval/metrics.hpp"
#include "uwsu/eval/parse.hpp"
#include "uwsu/eval/text_metrics.hpp"

using namespace uwsu;
using namespace uwsu::eval;
using datagen::QaRecord;
using datagen::QaTask;
using namespace testgen;

namespace {

const std::string kFixtures = UWSU_FIXTURE_DIR;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

QaRecord rec(std::string id, QaTask task, std::string answer, std::vector<std::string> conditions = {}) {
  QaRecord r;
  r.id = std::move(id);
  r.image_id = r.id.substr(0, r.id.find('-', r.id.find('-') + 1));
  r.source = "test";
  r.task = task;
  r.question = "q";
  r.answer = std::move(answer);
  r.conditions = std::move(conditions);
  return r;
}

Prediction pred(const QaRecord& r, std::string text) {
  return {r.id, std::string(datagen::to_string(r.task)), std::move(text)};
}

}  // namespace

TEST_SUITE("eval.parse") {
  TEST_CASE("single detection segment") {
    const auto p = parse_detection_output("fish:[0.100, 0.200, 0.500, 0.800]");
    REQUIRE(p.entries.size() == 1);
    CHECK(p.diagnostics.empty());
    CHECK(p.entries[0].class_name == "fish");
    CHECK(p.entries[0].bbox == Bbox{0.1, 0.2, 0.5, 0.8});
    CHECK(p.entries[0].confidence == 1.0);
  }

  TEST_CASE("empty text gives nothing") {
    const auto p = parse_detection_output("");
    CHECK(p.entries.empty());
    CHECK(p.diagnostics.empty());
  }

  TEST_CASE("three-number segment is skipped with a reason") {
    const auto p = parse_detection_output("fish:[0.1,0.2,0.5], turtle:[0.0, 0.0, 0.5, 0.5] sure!");
    REQUIRE(p.entries.size() == 1);
    CHECK(p.entries[0].class_name == "turtle");
    REQUIRE(p.diagnostics.size() == 1);
    CHECK(p.diagnostics[0].segment == "fish:[0.1,0.2,0.5]");
    CHECK(p.diagnostics[0].reason.find("found 3") != std::string::npos);
  }

  TEST_CASE("whitespace, newlines and prose around segments") {
    const auto p = parse_detection_output(
        "Sure, here you go:\n  sea turtle :  [ 0.1 ,0.2,\n0.3 , 0.4 ]\ndiver:[0,0,1,1]. Done.");
    REQUIRE(p.entries.size() == 2);
    CHECK(p.entries[0].class_name == "sea turtle");
    CHECK(p.entries[0].bbox == Bbox{0.1, 0.2, 0.3, 0.4});
    CHECK(p.entries[1].class_name == "diver");
    CHECK(p.entries[1].bbox == Bbox{0, 0, 1, 1});
  }

  TEST_CASE("pixel coordinates need an image size") {
    const std::string text = "fish:[10, 20, 50, 80]";
    const auto without = parse_detection_output(text);
    CHECK(without.entries.empty());
    REQUIRE(without.diagnostics.size() == 1);
    CHECK(without.diagnostics[0].reason.find("image size") != std::string::npos);
    const auto with = parse_detection_output(text, ImageSize{100, 200});
    REQUIRE(with.entries.size() == 1);
    CHECK(with.entries[0].bbox.x1 == doctest::Approx(0.1));
    CHECK(with.entries[0].bbox.y1 == doctest::Approx(0.1));
    CHECK(with.entries[0].bbox.x2 == doctest::Approx(0.5));
    CHECK(with.entries[0].bbox.y2 == doctest::Approx(0.4));
  }

  TEST_CASE("clamping and degenerate boxes") {
    const auto p = parse_detection_output("a:[-0.2, 0.1, 0.5, 1.0], b:[0.5, 0.5, 0.5, 0.9], c:[0.6, 0.2, 0.4, 0.3]");
    REQUIRE(p.entries.size() == 1);
    CHECK(p.entries[0].bbox == Bbox{0.0, 0.1, 0.5, 1.0});
    CHECK(p.diagnostics.size() == 2);
  }

  TEST_CASE("missing names, unclosed brackets and garbage") {
    CHECK(parse_detection_output("[0.1, 0.2, 0.3, 0.4]").diagnostics.at(0).reason == "missing class name");
    const auto unclosed = parse_detection_output("fish:[0.1, 0.2, 0.3, 0.4");
    CHECK(unclosed.entries.empty());
    CHECK(unclosed.diagnostics.at(0).reason == "unclosed bracket");
    const auto garbage = parse_detection_output("I cannot see anything in this image.");
    CHECK(garbage.entries.empty());
    CHECK(garbage.diagnostics.size() == 1);
    CHECK(parse_detection_output("fish:[a, b, c, d]").diagnostics.at(0).reason.find("non-numeric") == 0);
  }

  TEST_CASE("fuzzed outputs never throw and keep boxes valid") {
    Rng rng(99);
    const std::vector<std::string> seeds = {
        "fish:[0.100, 0.200, 0.500, 0.800]",
        "fish:[0.100, 0.200, 0.500, 0.800], turtle:[0.000, 0.000, 0.500, 0.500]",
        "There is a diver:[0.25, 0.30, 0.75, 0.90] near the reef.",
        "",
    };
    for (int i = 0; i < 1000; ++i) {
      const std::string text = mutate(seeds[rng.below(seeds.size())], rng);
      ParsedDetections p;
      REQUIRE_NOTHROW(p = parse_detection_output(text));
      for (const auto& e : p.entries) {
        CHECK(!e.class_name.empty());
        CHECK(e.bbox.is_normalized());
        CHECK(e.bbox.x1 < e.bbox.x2);
        CHECK(e.bbox.y1 < e.bbox.y2);
      }
      REQUIRE_NOTHROW((void)try_parse_bbox(text));
      REQUIRE_NOTHROW((void)parse_count(text));
    }
  }

  TEST_CASE("parsing is idempotent on its own serialization") {
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
      std::string text;
      const int n = static_cast<int>(rng.below(4));
      for (int k = 0; k < n; ++k) {
        const Bbox b = random_box(rng);
        text += (k ? " and " : "") + std::string(k % 2 ? "sea turtle" : "fish") + ":[" + std::to_string(b.x1) + "," +
                std::to_string(b.y1) + "," + std::to_string(b.x2) + "," + std::to_string(b.y2) + "]";
      }
      text = mutate(text, rng);
      const auto first = parse_detection_output(text);
      const std::string s1 = serialize_detections(first.entries);
      const auto second = parse_detection_output(s1);
      CHECK(second.diagnostics.empty());
      REQUIRE(second.entries.size() == first.entries.size());
      for (std::size_t k = 0; k < first.entries.size(); ++k) {
        CHECK(second.entries[k].class_name == first.entries[k].class_name);
        CHECK(second.entries[k].bbox == first.entries[k].bbox);
      }
      CHECK(serialize_detections(second.entries) == s1);
    }
  }

  TEST_CASE("formatted boxes round trip within 5e-4") {
    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
      const Bbox b = random_box(rng);
      const Bbox back = parse_bbox(datagen::format_bbox(b));
      CHECK(std::abs(back.x1 - b.x1) <= 5e-4);
      CHECK(std::abs(back.y1 - b.y1) <= 5e-4);
      CHECK(std::abs(back.x2 - b.x2) <= 5e-4);
      CHECK(std::abs(back.y2 - b.y2) <= 5e-4);
    }
  }

  TEST_CASE("parse_bbox") {
    CHECK(parse_bbox("[0.000, 0.000, 1.000, 1.000]") == Bbox{0, 0, 1, 1});
    CHECK(parse_bbox("The turtle is at [0.12, 0.3, 0.5, 0.61] in the frame.") == Bbox{0.12, 0.3, 0.5, 0.61});
    CHECK(parse_bbox("[1, 2] then [0.1, 0.1, 0.2, 0.2]") == Bbox{0.1, 0.1, 0.2, 0.2});
    CHECK_THROWS_AS(parse_bbox("no box here"), ParseError);
    CHECK_THROWS_AS(parse_bbox("[0.5, 0.5, 0.2, 0.9]"), ParseError);
  }

  TEST_CASE("parse_count") {
    CHECK(parse_count("C") == CountAnswer{CountAnswer::Kind::letter, 0, 'C'});
    CHECK(parse_count("There are 42 fish") == CountAnswer{CountAnswer::Kind::number, 42, 'A'});
    CHECK(parse_count("C. 110") == CountAnswer{CountAnswer::Kind::letter, 0, 'C'});
    CHECK(parse_count("(b)")->letter == 'B');
    CHECK(parse_count("  d  ")->letter == 'D');
    CHECK(parse_count("A lot, maybe 7")->kind == CountAnswer::Kind::number);
    CHECK(parse_count("A lot, maybe 7")->value == 7);
    CHECK_FALSE(parse_count("E").has_value());
    CHECK_FALSE(parse_count("none").has_value());
    CHECK_FALSE(parse_count("").has_value());
  }
}

TEST_SUITE("eval.metrics") {
  TEST_CASE("iou") {
    CHECK(iou({0.1, 0.1, 0.4, 0.5}, {0.1, 0.1, 0.4, 0.5}) == 1.0);
    CHECK(iou({0, 0, 0.2, 0.2}, {0.5, 0.5, 0.9, 0.9}) == 0.0);
    CHECK(iou({0, 0, 2, 2}, {1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const Bbox a = random_box(rng), b = random_box(rng);
      const double v = iou(a, b);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(v == iou(b, a));
    }
  }

  TEST_CASE("grounding") {
    const std::vector<Bbox> golds = {{0, 0, 0.5, 0.5}, {0, 0, 0.5, 0.5}, {0, 0, 0.5, 0.5}};
    const auto perfect = grounding_metrics({golds[0], golds[1], golds[2]}, golds);
    CHECK(perfect.miou == 1.0);
    CHECK(perfect.pr50 == 1.0);
    CHECK(perfect.pr75 == 1.0);
    CHECK(perfect.ap50 == 1.0);
    const auto failed = grounding_metrics({std::nullopt, std::nullopt, std::nullopt}, golds);
    CHECK(failed.miou == 0.0);
    CHECK(failed.pr50 == 0.0);
    CHECK(failed.ap50 == 0.0);
    CHECK(failed.parse_failures == 3);
    // IoUs 1, 0.5 and a parse failure. Two hits out of three golds reach
    // recall 2/3 at precision 1, so 67 of the 101 recall levels score 1.
    const auto mixed = grounding_metrics({Bbox{0, 0, 0.5, 0.5}, Bbox{0, 0, 0.5, 0.25}, std::nullopt}, golds);
    CHECK(mixed.miou == doctest::Approx(0.5));
    CHECK(mixed.pr50 == doctest::Approx(2.0 / 3.0));
    CHECK(mixed.pr75 == doctest::Approx(1.0 / 3.0));
    CHECK(mixed.ap50 == doctest::Approx(67.0 / 101.0));
    CHECK_THROWS_AS(grounding_metrics({std::nullopt}, golds), DimensionError);
  }

  TEST_CASE("interpolated AP") {
    CHECK(interpolated_ap({}, 0) == 0.0);
    CHECK(interpolated_ap({}, 3) == 0.0);
    CHECK(interpolated_ap({true}, 1) == 1.0);
    // Hits at ranks 1 and 3 of 2 golds: precision 1 up to recall 0.5, then 2/3.
    CHECK(interpolated_ap({true, false, true}, 2) == doctest::Approx((51.0 + 50.0 * 2.0 / 3.0) / 101.0));
  }

  TEST_CASE("detection: trivial instances") {
    DetectionImage im;
    im.golds = {{"fish", {0.1, 0.1, 0.3, 0.3}}};
    im.predictions = {{"Fish ", {0.1, 0.1, 0.3, 0.3}, 1.0}};
    const auto perfect = detection_metrics({im});
    CHECK(perfect.map == 1.0);
    CHECK(perfect.map50 == 1.0);
    CHECK(perfect.map75 == 1.0);
    CHECK(perfect.ar100 == 1.0);
    im.predictions.clear();
    const auto none = detection_metrics({im});
    CHECK(none.map == 0.0);
    CHECK(none.ar100 == 0.0);
    CHECK(detection_metrics({}).classes == 0);
  }

  TEST_CASE("detection: unknown classes are dropped and counted") {
    DetectionImage im;
    im.golds = {{"fish", {0.1, 0.1, 0.3, 0.3}}};
    im.predictions = {{"crab", {0.5, 0.5, 0.9, 0.9}, 1.0}, {"fish", {0.1, 0.1, 0.3, 0.3}, 1.0}};
    const auto m = detection_metrics({im});
    CHECK(m.unknown_class_predictions == 1);
    CHECK(m.classes == 1);
    CHECK(m.map == 1.0);
  }

  TEST_CASE("detection: emission order decides ties") {
    DetectionImage im;
    im.golds = {{"fish", {0.1, 0.1, 0.3, 0.3}}};
    im.predictions = {{"fish", {0.6, 0.6, 0.8, 0.8}, 1.0}, {"fish", {0.1, 0.1, 0.3, 0.3}, 1.0}};
    const double late = detection_metrics({im}).map50;
    std::swap(im.predictions[0], im.predictions[1]);
    const double early = detection_metrics({im}).map50;
    CHECK(early == 1.0);
    CHECK(late == doctest::Approx(0.5));
  }

  TEST_CASE("detection: at most 100 detections per image and class") {
    DetectionImage im;
    im.golds = {{"fish", {0.1, 0.1, 0.3, 0.3}}};
    for (int i = 0; i < 120; ++i) im.predictions.push_back({"fish", {0.6, 0.6, 0.8, 0.8}, 1.0});
    im.predictions.push_back({"fish", {0.1, 0.1, 0.3, 0.3}, 1.0});
    CHECK(detection_metrics({im}).ar100 == 0.0);
    im.predictions.erase(im.predictions.begin(), im.predictions.begin() + 30);
    CHECK(detection_metrics({im}).ar100 == 1.0);
  }

  TEST_CASE("detection matches the exhaustive oracle on random small instances") {
    Rng rng(2718);
    const std::vector<std::string> classes = {"fish", "turtle", "diver"};
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      const bool grid = inst % 2 == 0;
      const bool scored = inst % 3 == 0;
      const auto nclass = 1 + rng.below(3);
      std::vector<DetectionImage> images(1 + rng.below(3));
      std::vector<oracle::Image> ref(images.size());
      for (std::size_t i = 0; i < images.size(); ++i) {
        const auto ng = 1 + rng.below(5);
        for (std::uint64_t g = 0; g < ng; ++g) {
          const std::string c = classes[rng.below(nclass)];
          const Bbox b = grid ? grid_box(rng) : random_box(rng);
          images[i].golds.push_back({c, b});
          ref[i].golds.push_back({c, {b.x1, b.y1, b.x2, b.y2}});
        }
        const auto nd = rng.below(6);
        for (std::uint64_t d = 0; d < nd; ++d) {
          std::string c;
          Bbox b;
          if (rng.uniform() < 0.7) {
            const auto& g = images[i].golds[rng.below(images[i].golds.size())];
            c = rng.uniform() < 0.85 ? g.class_name : classes[rng.below(nclass)];
            b = grid ? g.bbox : jitter(g.bbox, 0.08, rng);
            if (grid && rng.uniform() < 0.5) b = grid_box(rng);
          } else {
            c = classes[rng.below(nclass)];
            b = grid ? grid_box(rng) : random_box(rng);
          }
          const double conf = scored ? static_cast<double>(rng.below(4)) / 4.0 : 1.0;
          images[i].predictions.push_back({c, b, conf});
          ref[i].dets.push_back({c, {b.x1, b.y1, b.x2, b.y2}, conf});
        }
      }
      const auto got = detection_metrics(images);
      const auto want = oracle::brute_force_detection(ref);
      worst = std::max({worst, std::abs(got.map - want.map), std::abs(got.map50 - want.map50),
                        std::abs(got.map75 - want.map75), std::abs(got.ar100 - want.ar100)});
    }
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("detection matches frozen pycocotools values") {
    const auto cases = load_json(kFixtures + "/reference/detection.json");
    REQUIRE(cases.size() == 5);
    for (const auto& c : cases) {
      std::vector<DetectionImage> images;
      for (const auto& im : c["images"]) {
        DetectionImage d;
        for (const auto& p : im["predictions"]) {
          const auto b = p["bbox"];
          d.predictions.push_back({p["class"], {b[0], b[1], b[2], b[3]}, 1.0});
        }
        for (const auto& g : im["golds"]) {
          const auto b = g["bbox"];
          d.golds.push_back({g["class"], {b[0], b[1], b[2], b[3]}});
        }
        images.push_back(std::move(d));
      }
      const auto m = detection_metrics(images);
      const auto& e = c["expected"];
      CHECK(std::abs(m.map - e["map"].get<double>()) <= 1e-9);
      CHECK(std::abs(m.map50 - e["map@0.5"].get<double>()) <= 1e-9);
      CHECK(std::abs(m.map75 - e["map@0.75"].get<double>()) <= 1e-9);
      CHECK(std::abs(m.ar100 - e["ar@100"].get<double>()) <= 1e-9);
    }
  }

  TEST_CASE("counting") {
    const auto perfect = counting_metrics({{3, 3}, {10, 10}}, {{'A', 'A'}, {'C', 'C'}});
    CHECK(*perfect.mae == 0.0);
    CHECK(*perfect.rmse == 0.0);
    CHECK(*perfect.acc == 1.0);
    const auto plus5 = counting_metrics({{5, 0}, {15, 10}, {105, 100}, {8, 3}}, {});
    CHECK(*plus5.mae == 5.0);
    CHECK(*plus5.rmse == 5.0);
    CHECK_FALSE(plus5.acc.has_value());
    // Errors 2, -4 and a failure read as 0 against gold 6; two of three letters right.
    const auto mixed = counting_metrics({{4, 2}, {1, 5}, {std::nullopt, 6}}, {{'A', 'A'}, {std::nullopt, 'B'}, {'D', 'D'}});
    CHECK(*mixed.mae == doctest::Approx(4.0));
    CHECK(*mixed.rmse == doctest::Approx(std::sqrt(56.0 / 3.0)));
    CHECK(*mixed.acc == doctest::Approx(2.0 / 3.0));
    CHECK(mixed.parse_failures == 2);
  }

  TEST_CASE("RMSE is never below MAE") {
    Rng rng(8);
    for (int run = 0; run < 500; ++run) {
      std::vector<std::pair<std::optional<long long>, long long>> pairs;
      const auto n = 1 + rng.below(20);
      for (std::uint64_t i = 0; i < n; ++i) {
        std::optional<long long> p;
        if (rng.uniform() < 0.9) p = static_cast<long long>(rng.below(300));
        pairs.emplace_back(p, static_cast<long long>(rng.below(300)));
      }
      const auto m = counting_metrics(pairs, {});
      CHECK(*m.mae >= 0.0);
      CHECK(*m.rmse >= *m.mae - 1e-12);
    }
  }

  TEST_CASE("classification") {
    const auto perfect = classification_metrics({{"fish", "fish"}, {" Turtle", "turtle"}});
    CHECK(perfect.acc == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.f1 == 1.0);
    const auto wrong = classification_metrics({{"crab", "fish"}, {"eel", "fish"}});
    CHECK(wrong.acc == 0.0);
    CHECK(wrong.precision == 0.0);
    CHECK(wrong.f1 == 0.0);
    // Gold a,a,a,b against a,a,b,b: class a has P 1 and R 2/3, class b has
    // P 1/2 and R 1.
    const auto mixed = classification_metrics({{"a", "a"}, {"A", "a"}, {"b", "a"}, {"b", "b"}});
    CHECK(mixed.acc == doctest::Approx(0.75));
    CHECK(mixed.precision == doctest::Approx(0.75));
    CHECK(mixed.f1 == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0));
  }
}

TEST_SUITE("eval.text") {
  TEST_CASE("tokenizer") {
    CHECK(tokenize("A Turtle, swimming!  Over-the reef.") ==
          Tokens{"a", "turtle", "swimming", "over", "the", "reef"});
    CHECK(tokenize("").empty());
    CHECK(tokenize(" ... ").empty());
    CHECK(kTokenizerVersion == "uwtok-1");
  }

  TEST_CASE("stemmer matches the frozen reference word list") {
    std::ifstream in(kFixtures + "/reference/porter_words.tsv");
    REQUIRE(in.good());
    std::string line;
    int n = 0, bad = 0;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      const std::string word = line.substr(0, tab), stem = line.substr(tab + 1);
      ++n;
      if (porter_stem(word) != stem) {
        if (++bad <= 10) MESSAGE(word << " -> " << porter_stem(word) << " expected " << stem);
      }
    }
    CHECK(n > 5000);
    CHECK(bad == 0);
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("Fishes") == "fish");
  }

  TEST_CASE("bleu4 basics") {
    const Tokens s = tokenize("a small fish swims near the coral reef");
    CHECK(bleu4({s}, {{s}}) == doctest::Approx(1.0));
    CHECK(bleu4({tokenize("fish near reef coral")}, {{tokenize("coral reef near fish")}}) == 0.0);
    CHECK(bleu4({}, {}) == 0.0);
    CHECK_THROWS_AS(bleu4({s}, {{}}), ValidationError);
  }

  TEST_CASE("bleu4 hand corpus") {
    // Clipped matches: 8/9 unigrams, 5/7 bigrams, 3/5 trigrams, 2/3
    // four-grams; lengths equal so there is no brevity penalty.
    const std::vector<Tokens> c = {tokenize("a b c d e"), tokenize("a b x d")};
    const std::vector<std::vector<Tokens>> r = {{tokenize("a b c d e")}, {tokenize("a b c d")}};
    const double expected = std::pow(8.0 / 9.0 * 5.0 / 7.0 * 3.0 / 5.0 * 2.0 / 3.0, 0.25);
    CHECK(bleu4(c, r) == doctest::Approx(expected).epsilon(1e-12));
    // References of 3 and 5 are equally close to 4; the shorter one wins,
    // so there is no brevity penalty.
    const std::vector<Tokens> c2 = {tokenize("a b c d")};
    CHECK(bleu4(c2, {{tokenize("a b c d e"), tokenize("a b c")}}) == doctest::Approx(1.0));
    CHECK(bleu4(c2, {{tokenize("a b c d e")}}) == doctest::Approx(std::exp(1.0 - 5.0 / 4.0)));
  }

  TEST_CASE("cider basics") {
    const Tokens s1 = tokenize("a green turtle rests on sand");
    const Tokens s2 = tokenize("two divers inspect an old wreck");
    const auto scores = cider_scores({s1, tokenize("something else entirely")}, {{s1}, {s2}});
    CHECK(scores[0] == doctest::Approx(10.0));
    CHECK(cider({Tokens{}}, {{s1}}) == 0.0);
    CHECK(cider({{}, s1}, {{s2}, {s1}}) >= 0.0);
    // With one document every n-gram appears everywhere, so IDF is 0.
    CHECK(cider({s1}, {{s1}}) == 0.0);
    CHECK(cider({}, {}) == 0.0);
  }

  TEST_CASE("meteor_lite basics") {
    const Tokens s = tokenize("a turtle swims over the reef");
    const double m = static_cast<double>(s.size());
    CHECK(meteor_lite(s, {s}) == doctest::Approx(1.0 - 0.5 * std::pow(1.0 / m, 3.0)));
    CHECK(meteor_lite(s, {tokenize("two crabs fight")}) == 0.0);
    CHECK(meteor_lite({"fishes"}, {{"fish"}}) > 0.0);
    CHECK(meteor_lite({}, {s}) == 0.0);
    CHECK(meteor_lite(s, {}) == 0.0);
  }

  TEST_CASE("text metrics match frozen reference values") {
    const auto fixtures = load_json(kFixtures + "/reference/text_metrics.json");
    REQUIRE(fixtures.size() == 5);
    for (const auto& fx : fixtures) {
      CAPTURE(fx["name"].get<std::string>());
      std::vector<Tokens> cands;
      std::vector<std::vector<Tokens>> refs;
      for (const auto& c : fx["candidates"]) cands.push_back(tokenize(c.get<std::string>()));
      for (const auto& rs : fx["references"]) {
        refs.emplace_back();
        for (const auto& r : rs) refs.back().push_back(tokenize(r.get<std::string>()));
      }
      CHECK(std::abs(bleu4(cands, refs) - fx["bleu4"].get<double>()) <= 1e-6);
      CHECK(std::abs(bleu4(cands, refs, true) - fx["bleu4_smoothed"].get<double>()) <= 1e-6);
      CHECK(std::abs(cider(cands, refs) - fx["cider"].get<double>()) <= 1e-6);
      const auto per = cider_scores(cands, refs);
      for (std::size_t i = 0; i < per.size(); ++i) {
        CHECK(std::abs(per[i] - fx["cider_per_candidate"][i].get<double>()) <= 1e-6);
        CHECK(std::abs(meteor_lite(cands[i], refs[i]) - fx["meteor_lite"][i].get<double>()) <= 1e-6);
      }
    }
  }

  TEST_CASE("text metric bounds on random corpora") {
    Rng rng(21);
    const std::vector<std::string> vocab = {"fish", "fishes", "reef", "coral", "a", "the", "swims", "swimming",
                                            "turtle", "diver", "blue", "water", "near", "over"};
    for (int run = 0; run < 100; ++run) {
      std::vector<Tokens> cands;
      std::vector<std::vector<Tokens>> refs;
      const auto n = 1 + rng.below(5);
      for (std::uint64_t i = 0; i < n; ++i) {
        auto sentence = [&] {
          Tokens t(rng.below(9));
          for (auto& w : t) w = vocab[rng.below(vocab.size())];
          return t;
        };
        cands.push_back(sentence());
        refs.push_back({sentence(), sentence()});
        const double m = meteor_lite(cands.back(), refs.back());
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
      }
      for (bool smooth : {false, true}) {
        const double b = bleu4(cands, refs, smooth);
        CHECK(b >= 0.0);
        CHECK(b <= 1.0 + 1e-12);
      }
      const double c = cider(cands, refs);
      CHECK(c >= 0.0);
      CHECK(c / 10.0 <= 1.0 + 1e-12);
    }
  }
}

TEST_SUITE("eval.evaluate") {
  std::vector<QaRecord> gold_set() {
    return {
        rec("img-a-det-0", QaTask::detection, "fish:[0.100, 0.100, 0.300, 0.300]", {"low-light"}),
        rec("img-b-det-0", QaTask::detection, "turtle:[0.500, 0.500, 0.900, 0.900], fish:[0.000, 0.000, 0.200, 0.200]",
            {"turbid"}),
        rec("img-a-grd-0", QaTask::grounding, "[0.100, 0.100, 0.300, 0.300]", {"low-light"}),
        rec("img-b-grd-0", QaTask::grounding, "[0.500, 0.500, 0.900, 0.900]", {"turbid"}),
        rec("img-a-cnt-0", QaTask::counting_regress, "12", {"low-light"}),
        rec("img-b-cnt-0", QaTask::counting_choice, "B", {"turbid"}),
        rec("img-a-cls-0", QaTask::coarse_cls, "fish", {"low-light"}),
        rec("img-b-cls-0", QaTask::fine_cls, "Actinopterygii", {"turbid"}),
        rec("img-a-cap-0", QaTask::image_caption, "A small fish swims near the reef.", {"low-light"}),
        rec("img-b-cap-0", QaTask::region_caption, "A green turtle.", {"turbid"}),
        rec("img-b-vqa-0", QaTask::vqa, "It is a turtle.", {"turbid"}),
    };
  }

  std::vector<Prediction> perfect_predictions(const std::vector<QaRecord>& gold) {
    std::vector<Prediction> out;
    for (const auto& r : gold) out.push_back(pred(r, r.answer));
    return out;
  }

  TEST_CASE("empty run gives zero counts") {
    const auto report = evaluate({}, {});
    CHECK(report.tokenizer == "uwtok-1");
    REQUIRE(report.overall.tasks.size() == 8);
    for (const auto& [task, s] : report.overall.tasks) {
      CHECK(s.count == 0);
      CHECK(s.metrics.empty());
    }
    CHECK(report.subsets.empty());
    const auto j = report.to_json();
    CHECK(j["tasks"]["detection"]["count"] == 0);
  }

  TEST_CASE("perfect predictions score perfectly") {
    const auto gold = gold_set();
    const auto report = evaluate(perfect_predictions(gold), gold);
    const auto& o = report.overall;
    CHECK(o.at("detection").count == 2);
    CHECK(o.metric("detection", "map") == 1.0);
    CHECK(o.metric("grounding", "miou") == 1.0);
    CHECK(o.metric("grounding", "ap@0.5") == 1.0);
    CHECK(o.at("counting").count == 2);
    CHECK(o.metric("counting", "mae") == 0.0);
    CHECK(o.metric("counting", "acc") == 1.0);
    CHECK(o.metric("coarse_cls", "acc") == 1.0);
    CHECK(o.metric("fine_cls", "f1") == 1.0);
    CHECK(o.metric("vqa", "meteor_lite") > 0.9);
    CHECK(report.diagnostics.missing_predictions.empty());
    REQUIRE(report.subsets.size() == 2);
    CHECK(report.subsets.at("turbid").at("detection").count == 1);
  }

  TEST_CASE("report is independent of input order") {
    auto gold = gold_set();
    auto preds = perfect_predictions(gold);
    preds[0].output_text = "fish:[0.1, 0.1, 0.25, 0.3]";
    preds[3].output_text = "[0.55, 0.5, 0.9, 0.9]";
    preds[4].output_text = "about 9";
    const std::string a = evaluate(preds, gold).to_json_string();
    Rng rng(4);
    for (int k = 0; k < 10; ++k) {
      for (std::size_t i = gold.size(); i > 1; --i) std::swap(gold[i - 1], gold[rng.below(i)]);
      for (std::size_t i = preds.size(); i > 1; --i) std::swap(preds[i - 1], preds[rng.below(i)]);
      CHECK(evaluate(preds, gold).to_json_string() == a);
    }
  }

  TEST_CASE("missing and unexpected predictions are reported") {
    const auto gold = gold_set();
    auto preds = perfect_predictions(gold);
    preds.erase(preds.begin() + 2);
    preds.push_back({"stray-id", "vqa", "hello"});
    preds[0].task = "grounding";
    const auto report = evaluate(preds, gold);
    CHECK(report.diagnostics.missing_predictions == std::vector<std::string>{"img-a-grd-0"});
    CHECK(report.diagnostics.unexpected_predictions == std::vector<std::string>{"stray-id"});
    CHECK(report.diagnostics.task_mismatches == std::vector<std::string>{"img-a-det-0"});
    CHECK(report.diagnostics.grounding_parse_failures == 1);
    CHECK(report.overall.metric("grounding", "miou") == doctest::Approx(0.5));
  }

  TEST_CASE("duplicate ids are rejected") {
    const auto gold = gold_set();
    auto preds = perfect_predictions(gold);
    preds.push_back(preds.front());
    CHECK_THROWS_AS(evaluate(preds, gold), ValidationError);
    auto dup_gold = gold;
    dup_gold.push_back(gold.front());
    CHECK_THROWS_AS(evaluate(perfect_predictions(gold), dup_gold), ValidationError);
  }

  TEST_CASE("subset filter keeps only tagged records") {
    const auto gold = gold_set();
    EvalOptions opt;
    opt.subset = "low-light";
    const auto report = evaluate(perfect_predictions(gold), gold, opt);
    CHECK(report.overall.at("detection").count == 1);
    CHECK(report.overall.at("vqa").count == 0);
    CHECK(report.subsets.size() == 1);
    CHECK(report.to_json()["subset_filter"] == "low-light");
  }

  TEST_CASE("adding a perfectly matched prediction never lowers pr@t or acc") {
    Rng rng(77);
    for (int run = 0; run < 100; ++run) {
      std::vector<QaRecord> gold;
      std::vector<Prediction> preds;
      const auto n = 1 + rng.below(8);
      for (std::uint64_t i = 0; i < n; ++i) {
        const Bbox g = random_box(rng);
        gold.push_back(rec("im" + std::to_string(i) + "-x-grd", QaTask::grounding, datagen::format_bbox(g)));
        preds.push_back(pred(gold.back(), datagen::format_bbox(jitter(g, 0.2, rng))));
        gold.push_back(rec("im" + std::to_string(i) + "-x-cls", QaTask::coarse_cls, rng.uniform() < 0.5 ? "fish" : "eel"));
        preds.push_back(pred(gold.back(), rng.uniform() < 0.5 ? "fish" : "eel"));
      }
      const auto before = evaluate(preds, gold).overall;
      const Bbox g = random_box(rng);
      gold.push_back(rec("zz-x-grd", QaTask::grounding, datagen::format_bbox(g)));
      preds.push_back(pred(gold.back(), gold.back().answer));
      gold.push_back(rec("zz-x-cls", QaTask::coarse_cls, "fish"));
      preds.push_back(pred(gold.back(), "fish"));
      const auto after = evaluate(preds, gold).overall;
      CHECK(after.metric("grounding", "pr@0.5") >= before.metric("grounding", "pr@0.5"));
      CHECK(after.metric("grounding", "pr@0.75") >= before.metric("grounding", "pr@0.75"));
      CHECK(after.metric("coarse_cls", "acc") >= before.metric("coarse_cls", "acc"));
    }
  }

  TEST_CASE("reported values stay within their ranges") {
    Rng rng(55);
    const auto gold = gold_set();
    for (int run = 0; run < 50; ++run) {
      std::vector<Prediction> preds;
      for (const auto& r : gold) preds.push_back(pred(r, mutate(r.answer, rng)));
      const auto report = evaluate(preds, gold);
      for (const auto& [task, s] : report.overall.tasks) {
        for (const auto& [name, v] : s.metrics) {
          CAPTURE(task + "/" + name);
          CHECK(std::isfinite(v));
          CHECK(v >= 0.0);
          if (name == "cider") {
            CHECK(v <= 10.0);
          } else if (name != "mae" && name != "rmse") {
            CHECK(v <= 1.0);
          }
        }
      }
      CHECK(report.overall.metric("counting", "rmse") >= report.overall.metric("counting", "mae"));
    }
  }

  TEST_CASE("csv flattening") {
    const auto gold = gold_set();
    const auto csv = evaluate(perfect_predictions(gold), gold).to_csv();
    CHECK(csv.rfind("scope,task,metric,value\n", 0) == 0);
    CHECK(csv.find("all,detection,map,1.000000\n") != std::string::npos);
    CHECK(csv.find("subset:turbid,vqa,count,1\n") != std::string::npos);
  }

  TEST_CASE("prediction JSONL") {
    const Prediction p = prediction_from_json(nlohmann::ordered_json::parse(R"({"id":"x","task":"vqa","output_text":"y"})"));
    CHECK(p.id == "x");
    CHECK(p.output_text == "y");
    CHECK_THROWS_AS(prediction_from_json(nlohmann::ordered_json::parse(R"({"id":"x"})")), ValidationError);
    CHECK_THROWS_AS(prediction_from_json(nlohmann::ordered_json::parse("[1]")), ValidationError);
  }
}
