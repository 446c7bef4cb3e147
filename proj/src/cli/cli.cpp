#include <array>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "uwsu/cli/cli.hpp"
#include "uwsu/common/error.hpp"

namespace uwsu::cli {

namespace {

// "r,g,b" or a single value for all channels.
std::array<double, 3> parse_rgb(const std::string& text, const std::string& flag) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (part.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError(flag + ": '" + text + "' is not a number list");
    }
  }
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw ValidationError(flag + ": expected one or three comma-separated numbers");
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::optional<std::string> subset;
  std::optional<std::string> image, depth, beta, backscatter;
  std::optional<int> patch_size;
  std::optional<std::string> annotations, provider_stub, provider_url, taxonomy;
  std::optional<std::string> predictions, gold, dataset, checkpoint;
  std::optional<int> d, e, h, instances;
  std::optional<double> w_max;
  int count = 4, height = 32, width = 32;
};

void add_common(CLI::App* sub, Flags& f, bool with_format) {
  sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--out", f.out, "output directory")->required();
  if (with_format) sub->add_option("--format", f.format, "output format")->check(CLI::IsMember({"json", "csv", "table"}));
}

Config merged_config(const Flags& f) {
  Config c = f.config.empty() ? Config{} : load_config(f.config);
  const auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  c.paths.outputs = f.out;
  set(c.seed, f.seed);
  set(c.paths.images, f.image);
  set(c.paths.depths, f.depth);
  set(c.paths.annotations, f.annotations);
  set(c.paths.provider_stub, f.provider_stub);
  set(c.paths.taxonomy, f.taxonomy);
  set(c.paths.predictions, f.predictions);
  set(c.paths.gold, f.gold);
  set(c.paths.dataset, f.dataset);
  set(c.paths.checkpoint, f.checkpoint);
  if (f.beta) c.physics.beta = parse_rgb(*f.beta, "--beta");
  if (f.backscatter) c.physics.backscatter = parse_rgb(*f.backscatter, "--backscatter");
  set(c.physics.patch_size, f.patch_size);
  set(c.vfe.d, f.d);
  set(c.vfe.e, f.e);
  set(c.vfe.h, f.h);
  set(c.vfe.w_max, f.w_max);
  set(c.vfe.instances, f.instances);
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Underwater scene understanding toolkit", "uwsu"};
  app.require_subcommand(1);
  Flags f;

  auto* degrade = app.add_subcommand("degrade", "apply the underwater imaging model to clean images");
  auto* restore = app.add_subcommand("restore", "invert the imaging model on degraded images");
  for (auto* sub : {degrade, restore}) {
    add_common(sub, f, false);
    sub->add_option("--image", f.image, "PNG file or directory");
    sub->add_option("--depth", f.depth, "depth file or directory");
    sub->add_option("--beta", f.beta, "attenuation coefficients r,g,b");
    sub->add_option("--backscatter", f.backscatter, "backscatter r,g,b");
  }
  restore->add_option("--patch-size", f.patch_size, "patch size for backscatter estimation");

  auto* synth = app.add_subcommand("synth", "write synthetic clean/depth/degraded triples");
  add_common(synth, f, false);
  synth->add_option("--count", f.count, "number of scenes");
  synth->add_option("--height", f.height, "image height");
  synth->add_option("--width", f.width, "image width");
  synth->add_option("--beta", f.beta, "attenuation coefficients r,g,b");
  synth->add_option("--backscatter", f.backscatter, "backscatter r,g,b");

  auto* genqa = app.add_subcommand("genqa", "generate question-answer records from annotations");
  add_common(genqa, f, false);
  genqa->add_option("--annotations", f.annotations, "annotation JSONL");
  genqa->add_option("--provider-stub", f.provider_stub, "directory of canned provider replies");
  genqa->add_option("--provider-url", f.provider_url, "HTTP(S) caption provider endpoint");
  genqa->add_option("--taxonomy", f.taxonomy, "fine-grained class vocabulary");

  auto* eval = app.add_subcommand("eval", "score predictions against gold records");
  add_common(eval, f, true);
  eval->add_option("--predictions", f.predictions, "prediction JSONL");
  eval->add_option("--gold", f.gold, "gold QA JSONL");
  eval->add_option("--subset", f.subset, "restrict to one subset tag");

  auto* selfcheck = app.add_subcommand("vfe-selfcheck", "run the enhancement module's self-checks");
  add_common(selfcheck, f, false);
  selfcheck->add_option("--checkpoint", f.checkpoint, "VFE checkpoint to check");
  selfcheck->add_option("--dim", f.d, "vision token width");
  selfcheck->add_option("--depth-dim", f.e, "depth token width");
  selfcheck->add_option("--hidden", f.h, "absorption MLP width");
  selfcheck->add_option("--w-max", f.w_max, "absorption clamp");
  selfcheck->add_option("--instances", f.instances, "random instances per gradient check");

  auto* stats = app.add_subcommand("stats", "summarise a QA dataset");
  add_common(stats, f, true);
  stats->add_option("--dataset", f.dataset, "QA JSONL");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx{merged_config(f), f.format, out, err};
    if (*degrade) return cmd_degrade(ctx);
    if (*restore) return cmd_restore(ctx);
    if (*synth) return cmd_synth(ctx, f.count, f.height, f.width);
    if (*genqa) return cmd_genqa(ctx, f.provider_url);
    if (*eval) return cmd_eval(ctx, f.subset);
    if (*selfcheck) return cmd_vfe_selfcheck(ctx);
    if (*stats) return cmd_stats(ctx);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace uwsu::cli
