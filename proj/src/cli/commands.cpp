#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "uwsu/common/error.hpp"
#include "uwsu/common/rng.hpp"
#include "uwsu/datagen/generate.hpp"
#include "uwsu/datagen/provider.hpp"
#include "uwsu/datagen/quality.hpp"
#include "uwsu/datagen/stats.hpp"
#include "uwsu/eval/evaluate.hpp"
#include "uwsu/imaging/imaging.hpp"
#include "uwsu/imaging/io.hpp"
#include "uwsu/pipeline/pipeline.hpp"
#include "uwsu/vfe/checkpoint.hpp"
#include "uwsu/vfe/vfe.hpp"

namespace uwsu::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

template <typename T>
const T& need(const std::optional<T>& v, const std::string& what) {
  if (!v) throw ValidationError("missing " + what);
  return *v;
}

fs::path output_dir(const Context& ctx) {
  const fs::path dir = need(ctx.config.paths.outputs, "output directory (--out or paths.outputs)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

void write_summary(const fs::path& dir, const std::string& command, const Json& summary) {
  write_text(dir / (command + ".summary.json"), summary.dump(2) + "\n");
}

Json rgb_json(const imaging::Rgb& v) { return Json::array({v[0], v[1], v[2]}); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Image/depth pairs: a single file pair, or every PNG of a directory matched
// by stem against <depths>/<stem>.png or <depths>/<stem>.uwdm.
std::vector<std::pair<fs::path, fs::path>> image_pairs(const fs::path& images, const fs::path& depths) {
  std::vector<std::pair<fs::path, fs::path>> out;
  const auto depth_for = [&](const fs::path& img) {
    if (!fs::is_directory(depths)) return depths;
    for (const char* ext : {".png", ".uwdm"}) {
      const fs::path p = depths / (img.stem().string() + ext);
      if (fs::exists(p)) return p;
    }
    throw IoError("missing depth map for " + img.string() + ": expected " +
                  (depths / (img.stem().string() + ".png")).string() + " or .uwdm");
  };
  if (fs::is_directory(images)) {
    std::vector<fs::path> pngs;
    for (const auto& e : fs::directory_iterator(images))
      if (e.is_regular_file() && e.path().extension() == ".png") pngs.push_back(e.path());
    std::sort(pngs.begin(), pngs.end());
    if (pngs.empty()) throw IoError("no PNG files in " + images.string());
    for (const auto& p : pngs) out.emplace_back(p, depth_for(p));
  } else {
    if (!fs::exists(images)) throw IoError("missing image " + images.string());
    out.emplace_back(images, depth_for(images));
  }
  for (const auto& [img, depth] : out)
    if (!fs::exists(depth)) throw IoError("missing depth map " + depth.string());
  return out;
}

int run_imaging(Context& ctx, bool restoring) {
  const auto& cfg = ctx.config;
  const std::string command = restoring ? "restore" : "degrade";
  const auto beta = need(cfg.physics.beta, "attenuation coefficients (--beta or physics.beta)");
  if (!restoring) need(cfg.physics.backscatter, "backscatter (--backscatter or physics.backscatter)");
  if (restoring && !cfg.physics.backscatter) need(cfg.physics.patch_size, "backscatter or patch size for estimation");
  const auto pairs = image_pairs(need(cfg.paths.images, "input images (--image or paths.images)"),
                                 need(cfg.paths.depths, "depth maps (--depth or paths.depths)"));
  const fs::path dir = output_dir(ctx);
  const imaging::AttenuationModel atten(imaging::Rgb{beta[0], beta[1], beta[2]});

  Json summary;
  summary["command"] = command;
  summary["beta"] = rgb_json({beta[0], beta[1], beta[2]});
  summary["images"] = Json::array();
  std::size_t clamped = 0, saturated = 0;
  for (const auto& [img_path, depth_path] : pairs) {
    int bit_depth = 8;
    const imaging::RgbImage input = imaging::read_rgb_png(img_path, &bit_depth);
    const imaging::DepthMap depth = imaging::read_depth(depth_path);
    imaging::Backscatter back;
    std::string source = "config";
    if (cfg.physics.backscatter) {
      const auto& b = *cfg.physics.backscatter;
      back.b = {b[0], b[1], b[2]};
    } else {
      const imaging::PatchGrid grid(input.height(), input.width(), *cfg.physics.patch_size);
      back = imaging::estimate_backscatter(input, grid);
      source = "estimated";
    }
    imaging::ImagingReport report;
    const imaging::RgbImage result = restoring ? imaging::restore(input, depth, atten, back, &report)
                                               : imaging::degrade(input, depth, atten, back, &report);
    const fs::path out_path = dir / img_path.filename();
    imaging::write_rgb_png(out_path, result, bit_depth);
    clamped += report.clamped_values;
    saturated += report.saturated_values;
    Json entry;
    entry["input"] = img_path.string();
    entry["depth"] = depth_path.string();
    entry["output"] = out_path.string();
    entry["bit_depth"] = bit_depth;
    entry["backscatter"] = rgb_json(back.b);
    entry["backscatter_source"] = source;
    entry["clamped_values"] = report.clamped_values;
    entry["saturated_values"] = report.saturated_values;
    summary["images"].push_back(entry);
    ctx.out << command << " " << img_path.string() << " -> " << out_path.string() << " (" << bit_depth
            << "-bit, clamped " << report.clamped_values << ", saturated " << report.saturated_values << ")\n";
  }
  summary["clamped_values"] = clamped;
  summary["saturated_values"] = saturated;
  write_summary(dir, command, summary);
  return kExitOk;
}

std::vector<std::string> read_taxonomy(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open taxonomy " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::string> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      out = nlohmann::json::parse(text).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("taxonomy " + path.string() + ": " + e.what());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      out.push_back(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
    }
  }
  if (out.empty()) throw ValidationError("taxonomy " + path.string() + " is empty");
  return out;
}

}  // namespace

int cmd_degrade(Context& ctx) { return run_imaging(ctx, false); }
int cmd_restore(Context& ctx) { return run_imaging(ctx, true); }

int cmd_synth(Context& ctx, int count, int height, int width) {
  const std::uint64_t seed = need(ctx.config.seed, "--seed");
  if (count < 0) throw ValidationError("--count must be >= 0");
  imaging::SceneSpec spec;
  spec.height = height;
  spec.width = width;
  if (const auto& b = ctx.config.physics.beta) spec.atten = imaging::AttenuationModel(imaging::Rgb{(*b)[0], (*b)[1], (*b)[2]});
  if (const auto& b = ctx.config.physics.backscatter) spec.back.b = {(*b)[0], (*b)[1], (*b)[2]};
  spec.validate();
  const fs::path dir = output_dir(ctx);
  for (const char* sub : {"clean", "depth", "degraded"}) fs::create_directories(dir / sub);

  Json summary;
  summary["command"] = "synth";
  summary["seed"] = seed;
  summary["height"] = height;
  summary["width"] = width;
  summary["beta"] = rgb_json(spec.atten.constant_beta());
  summary["backscatter"] = rgb_json(spec.back.b);
  summary["scenes"] = Json::array();
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d", i);
    const auto pair = imaging::synthesize_pair(record_seed(seed, name), spec);
    imaging::write_rgb_png(dir / "clean" / (std::string(name) + ".png"), pair.clean, 16);
    imaging::write_depth_raw(dir / "depth" / (std::string(name) + ".uwdm"), pair.depth);
    imaging::write_rgb_png(dir / "degraded" / (std::string(name) + ".png"), pair.degraded, 16);
    summary["scenes"].push_back(name);
  }
  write_summary(dir, "synth", summary);
  ctx.out << "synth: wrote " << count << " scene(s) to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_genqa(Context& ctx, const std::optional<std::string>& provider_url) {
  const auto& cfg = ctx.config;
  datagen::GenerationConfig gen;
  gen.seed = need(cfg.seed, "--seed");
  const std::string ann_path = need(cfg.paths.annotations, "annotations (--annotations or paths.annotations)");
  if (cfg.paths.taxonomy) gen.taxonomy = read_taxonomy(*cfg.paths.taxonomy);
  if (cfg.paths.provider_stub && provider_url) throw ValidationError("choose one of --provider-stub and --provider-url");
  std::unique_ptr<datagen::CaptionProvider> provider;
  if (cfg.paths.provider_stub) provider = std::make_unique<datagen::FileStubProvider>(*cfg.paths.provider_stub);
  if (provider_url) provider = std::make_unique<datagen::HttpProvider>(*provider_url);

  const auto annotations = datagen::read_annotations(ann_path);
  const fs::path dir = output_dir(ctx);
  const auto generated = datagen::generate_dataset(annotations, gen, provider.get());
  const datagen::RuleJudge judge;
  const auto filtered =
      datagen::quality_filter(generated.records, judge, datagen::make_regenerator(annotations, gen, provider.get()));
  const auto kept = filtered.kept();
  datagen::write_qa_records((dir / "qa.jsonl").string(), kept);
  const auto stats = datagen::dataset_stats(kept);
  write_text(dir / "stats.json", stats.to_json().dump(2) + "\n");
  write_text(dir / "stats.csv", stats.to_csv());

  Json summary;
  summary["command"] = "genqa";
  summary["seed"] = gen.seed;
  summary["annotations"] = ann_path;
  summary["provider"] = provider ? Json(provider->id()) : Json(nullptr);
  summary["records"] = kept.size();
  summary["accepted"] = filtered.accepted.size();
  summary["replaced"] = filtered.replaced.size();
  summary["rejected"] = Json::array();
  for (const auto& r : filtered.rejected) summary["rejected"].push_back({{"id", r.record.id}, {"reason", r.reason}});
  summary["skipped"] = Json::array();
  for (const auto& s : generated.skipped)
    summary["skipped"].push_back({{"image_id", s.image_id}, {"task", s.task}, {"reason", s.reason}});
  write_summary(dir, "genqa", summary);

  ctx.out << stats.to_table();
  ctx.out << "genqa: " << kept.size() << " records (" << filtered.replaced.size() << " regenerated, "
          << filtered.rejected.size() << " rejected, " << generated.skipped.size() << " skipped) -> "
          << (dir / "qa.jsonl").string() << "\n";
  for (const auto& s : generated.skipped) ctx.err << "skipped " << s.image_id << " " << s.task << ": " << s.reason << "\n";
  for (const auto& r : filtered.rejected) ctx.err << "rejected " << r.record.id << ": " << r.reason << "\n";
  return kExitOk;
}

int cmd_eval(Context& ctx, const std::optional<std::string>& subset) {
  const auto& cfg = ctx.config;
  const std::string format = ctx.format.empty() ? "json" : ctx.format;
  if (format != "json" && format != "csv") throw ValidationError("eval supports --format json or csv");
  const std::string pred_path = need(cfg.paths.predictions, "predictions (--predictions or paths.predictions)");
  const std::string gold_path = need(cfg.paths.gold, "gold records (--gold or paths.gold)");
  const auto preds = eval::read_predictions(pred_path);
  const auto gold = datagen::read_qa_records(gold_path);
  const fs::path dir = output_dir(ctx);
  eval::EvalOptions opt;
  opt.subset = subset;
  const auto report = eval::evaluate(preds, gold, opt);
  const std::string text = format == "json" ? report.to_json_string() : report.to_csv();
  const fs::path report_path = dir / (format == "json" ? "report.json" : "report.csv");
  write_text(report_path, text);

  Json summary;
  summary["command"] = "eval";
  summary["predictions"] = pred_path;
  summary["gold"] = gold_path;
  summary["subset"] = subset ? Json(*subset) : Json(nullptr);
  summary["report"] = report_path.string();
  summary["missing_predictions"] = report.diagnostics.missing_predictions.size();
  summary["unexpected_predictions"] = report.diagnostics.unexpected_predictions.size();
  summary["task_mismatches"] = report.diagnostics.task_mismatches.size();
  write_summary(dir, "eval", summary);

  ctx.out << text;
  const auto& diag = report.diagnostics;
  const auto mention = [&](const std::vector<std::string>& ids, const char* what) {
    if (!ids.empty()) ctx.err << "eval: " << ids.size() << " " << what << ", first: " << ids.front() << "\n";
  };
  mention(diag.missing_predictions, "gold record(s) have no prediction");
  mention(diag.unexpected_predictions, "prediction(s) match no gold record");
  mention(diag.task_mismatches, "prediction(s) name a different task than their gold record");
  const bool mismatch =
      !diag.missing_predictions.empty() || !diag.unexpected_predictions.empty() || !diag.task_mismatches.empty();
  return mismatch ? kExitCheckFailed : kExitOk;
}

int cmd_stats(Context& ctx) {
  const std::string format = ctx.format.empty() ? "table" : ctx.format;
  if (format != "json" && format != "csv" && format != "table")
    throw ValidationError("stats supports --format table, json or csv");
  const std::string path = need(ctx.config.paths.dataset, "dataset (--dataset or paths.dataset)");
  const auto stats = datagen::dataset_stats(datagen::read_qa_records(path));
  const fs::path dir = output_dir(ctx);
  write_text(dir / "stats.json", stats.to_json().dump(2) + "\n");
  write_text(dir / "stats.csv", stats.to_csv());
  Json summary;
  summary["command"] = "stats";
  summary["dataset"] = path;
  summary["records"] = stats.total;
  write_summary(dir, "stats", summary);
  if (format == "json") ctx.out << stats.to_json().dump(2) << "\n";
  else if (format == "csv") ctx.out << stats.to_csv();
  else ctx.out << stats.to_table();
  return kExitOk;
}

// ---- vfe-selfcheck ----

namespace {

struct CheckResult {
  std::string name;
  std::string status;  // pass, fail or skip
  std::string detail;
};

vfe::Matrix normal_matrix(Rng& rng, int rows, int cols, double scale) {
  vfe::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double max_abs(const vfe::Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

int cmd_vfe_selfcheck(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::uint64_t seed = need(cfg.seed, "--seed");
  int d = cfg.vfe.d.value_or(16), e = cfg.vfe.e.value_or(8), h = cfg.vfe.h.value_or(16);
  double w_max = cfg.vfe.w_max.value_or(10.0);
  const int instances = cfg.vfe.instances.value_or(5);
  if (d <= 0 || e <= 0 || h <= 0 || instances <= 0) throw ValidationError("vfe dimensions and instances must be > 0");

  std::optional<vfe::VfeParameters> loaded;
  if (cfg.paths.checkpoint) {
    loaded = vfe::load_vfe(vfe::TensorManifest::load(*cfg.paths.checkpoint));
    d = loaded->dim();
    e = loaded->depth_dim();
    h = loaded->hidden_dim();
    w_max = loaded->w_max;
  }
  const fs::path dir = output_dir(ctx);
  Rng rng(seed);
  const vfe::TokenGrid grid{4, 4};
  const vfe::TokenGrid dgrid{3, 3};
  const int n = grid.count();
  const auto random_depth = [&](double scale) {
    vfe::DepthFeature f;
    f.tokens = normal_matrix(rng, dgrid.count(), e, scale);
    f.grid = dgrid;
    return f;
  };
  const auto base_params = [&](double scale) {
    return loaded ? *loaded : vfe::VfeParameters::random(d, e, h, rng, scale, w_max);
  };

  std::vector<CheckResult> checks;
  double worst_grad = 0.0;

  {
    const auto p = vfe::VfeParameters::zeros(d, e, h, w_max);
    vfe::Matrix v = normal_matrix(rng, n, d, 1.0);
    const int k = static_cast<int>(rng.below(n));
    v.row(k).setZero();
    const double diff = max_abs(vfe::enhance(v, k, random_depth(1.0), grid, p) - v);
    checks.push_back({"identity (s = 0, W = 0)", diff == 0.0 ? "pass" : "fail", "max |v_e - v| = " + fmt("%.3g", diff)});
  }
  {
    auto p = base_params(0.3);
    if (w_max > 0.0) {
      p.mlp_w2.setZero();
      p.mlp_b2.setZero();
    }
    const vfe::Matrix v = normal_matrix(rng, n, d, 1.0);
    const int k = static_cast<int>(rng.below(n));
    const auto s = vfe::backscatter_response(v, k, vfe::aggregate_global(v, p));
    const double diff = max_abs(vfe::enhance(v, k, random_depth(1.0), grid, p) - vfe::remove_backscatter(v, s));
    checks.push_back({"identity scaling (W = 0)", diff == 0.0 ? "pass" : "fail",
                      "max |v_e - (v - s)| = " + fmt("%.3g", diff) + (w_max == 0.0 ? " (W clamped by w_max = 0)" : "")});
  }
  {
    // Bounds go through the same vectorised exp as the module.
    const Eigen::Array2d ends = Eigen::Array2d(-w_max, w_max).exp();
    const double lo = ends[0], hi = ends[1];
    std::size_t bad = 0;
    const int cases = 10000;
    for (int c = 0; c < cases; ++c) {
      const double scale = std::pow(10.0, rng.uniform(-3.0, 6.0));
      const auto p = vfe::VfeParameters::random(d, e, h, rng, std::pow(10.0, rng.uniform(-1.0, 2.0)), w_max);
      const auto w = vfe::absorption_weights(random_depth(scale), grid, p);
      const vfe::Matrix ew = w.array().exp().matrix();
      if (!ew.allFinite() || ew.minCoeff() < lo || ew.maxCoeff() > hi) ++bad;
    }
    checks.push_back({"exp(W) bounds", bad == 0 ? "pass" : "fail",
                      std::to_string(cases) + " adversarial cases, " + std::to_string(bad) + " out of [e^-w_max, e^w_max]"});
  }
  if (w_max == 0.0) {
    checks.push_back({"monotonicity in W", "skip", "w_max = 0 clamps W to 0, so there is nothing to vary"});
  } else {
    auto p = vfe::VfeParameters::random(d, e, h, rng, 0.05, w_max);
    const vfe::Matrix v = normal_matrix(rng, n, d, 1.0);
    const int k = static_cast<int>(rng.below(n));
    const auto depth = random_depth(1.0);
    const vfe::Matrix before = vfe::enhance(v, k, depth, grid, p);
    const double step = std::min(0.1, w_max / 4.0);
    p.mlp_b2.array() += step;
    const vfe::Matrix after = vfe::enhance(v, k, depth, grid, p);
    bool ok = true;
    for (int i = 0; i < before.rows(); ++i)
      for (int j = 0; j < before.cols(); ++j)
        if (std::abs(after(i, j)) < std::abs(before(i, j))) ok = false;
    checks.push_back({"monotonicity in W", ok ? "pass" : "fail", "raising W never shrinks |v_e|"});
  }
  {
    double worst = 0.0;
    std::string where;
    bool finite = true;
    for (int i = 0; i < instances; ++i) {
      const auto p = base_params(0.3);
      const vfe::Matrix v = normal_matrix(rng, n, d, 1.0);
      const int k = static_cast<int>(rng.below(n));
      const auto r = vfe::grad_check(p, v, k, random_depth(1.0), grid);
      finite = finite && r.all_finite;
      if (r.max_relative_error >= worst) worst = r.max_relative_error, where = r.worst_parameter;
    }
    worst_grad = std::max(worst_grad, worst);
    checks.push_back({"vfe gradients", finite && worst < 1e-4 ? "pass" : "fail",
                      std::to_string(instances) + " instances, max relative error " + fmt("%.3g", worst) + " (" + where + ")"});
  }
  pipeline::PipelineConfig pc;
  pc.patch = 4;
  pc.depth_patch = 4;
  pc.dim = d;
  pc.depth_dim = e;
  pc.hidden = h;
  pc.lang_dim = 8;
  pc.w_max = w_max;
  const auto random_scene = [&]() {
    imaging::RgbImage img(16, 16);
    for (auto& x : img.values()) x = rng.uniform();
    imaging::DepthMap depth(16, 16);
    for (auto& z : depth.values()) z = rng.uniform(0.5, 3.0);
    return std::make_pair(img, depth);
  };
  {
    double worst = 0.0;
    std::string where;
    bool finite = true;
    for (int i = 0; i < instances; ++i) {
      auto params = pipeline::PipelineParameters::random(pc, rng);
      if (loaded) params.vfe = *loaded;
      const auto [img, depth] = random_scene();
      const auto r = pipeline::end_to_end_grad_check(params, img, depth);
      finite = finite && r.all_finite;
      if (r.max_relative_error >= worst) worst = r.max_relative_error, where = r.worst_parameter;
    }
    worst_grad = std::max(worst_grad, worst);
    checks.push_back({"pipeline gradients", finite && worst < 1e-4 ? "pass" : "fail",
                      std::to_string(instances) + " instances, max relative error " + fmt("%.3g", worst) + " (" + where + ")"});
  }
  {
    const auto params = pipeline::PipelineParameters::random(pc, rng);
    const auto [img, depth] = random_scene();
    const auto trace = pipeline::forward_trace(img, depth, params);
    const vfe::Matrix d_o = normal_matrix(rng, trace.output.original.rows(), trace.output.original.cols(), 1.0);
    const vfe::Matrix d_e = normal_matrix(rng, trace.output.enhanced.rows(), trace.output.enhanced.cols(), 1.0);
    const auto both = pipeline::backward(trace, params, d_o, d_e);
    const auto only_o = pipeline::backward(trace, params, d_o, vfe::Matrix::Zero(d_e.rows(), d_e.cols()));
    const auto only_e = pipeline::backward(trace, params, vfe::Matrix::Zero(d_o.rows(), d_o.cols()), d_e);
    const auto tb = both.tensors(), to = only_o.tensors(), te = only_e.tensors();
    double worst = 0.0;
    for (std::size_t i = 0; i < tb.size(); ++i) {
      const vfe::Matrix diff = *tb[i].value - (*to[i].value + *te[i].value);
      worst = std::max(worst, max_abs(diff) / std::max(1.0, max_abs(*tb[i].value)));
    }
    checks.push_back({"shared projector accumulation", worst < 1e-12 ? "pass" : "fail",
                      "max relative gap between joint and summed gradients " + fmt("%.3g", worst)});
  }
  {
    const auto p = base_params(0.3);
    const auto reloaded = vfe::load_vfe(vfe::TensorManifest::from_json(nlohmann::ordered_json::parse(vfe::save_vfe(p).to_json().dump())));
    const auto a = p.tensors();
    const auto b = reloaded.tensors();
    bool same = a.size() == b.size() && reloaded.w_max == p.w_max;
    for (std::size_t i = 0; same && i < a.size(); ++i) same = *a[i].value == *b[i].value;
    checks.push_back({"checkpoint round trip", same ? "pass" : "fail",
                      loaded ? "loaded " + *cfg.paths.checkpoint + " and reloaded bit-exact" : "save and reload bit-exact"});
  }

  int failed = 0, skipped = 0, passed = 0;
  Json summary;
  summary["command"] = "vfe-selfcheck";
  summary["seed"] = seed;
  summary["d"] = d;
  summary["e"] = e;
  summary["h"] = h;
  summary["w_max"] = w_max;
  summary["instances"] = instances;
  summary["checks"] = Json::array();
  for (const auto& c : checks) {
    if (c.status == "pass") ++passed;
    if (c.status == "fail") ++failed;
    if (c.status == "skip") ++skipped;
    std::string tag = c.status;
    std::transform(tag.begin(), tag.end(), tag.begin(), [](char ch) { return static_cast<char>(std::toupper(ch)); });
    ctx.out << "[" << tag << "] " << c.name << ": " << c.detail << "\n";
    summary["checks"].push_back({{"name", c.name}, {"status", c.status}, {"detail", c.detail}});
  }
  summary["max_grad_relative_error"] = worst_grad;
  summary["passed"] = failed == 0;
  write_summary(dir, "vfe-selfcheck", summary);
  ctx.out << "vfe-selfcheck: " << passed << " passed, " << failed << " failed, " << skipped
          << " skipped; max grad relative error " << fmt("%.3g", worst_grad) << "\n";
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace uwsu::cli
