#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "uwsu/cli/cli.hpp"

namespace uwsu::cli {

struct Context {
  Config config;
  std::string format;  // json, csv or table; empty for the command default
  std::ostream& out;
  std::ostream& err;
};

int cmd_degrade(Context& ctx);
int cmd_restore(Context& ctx);
int cmd_synth(Context& ctx, int count, int height, int width);
int cmd_genqa(Context& ctx, const std::optional<std::string>& provider_url);
int cmd_eval(Context& ctx, const std::optional<std::string>& subset);
int cmd_vfe_selfcheck(Context& ctx);
int cmd_stats(Context& ctx);

}  // namespace uwsu::cli
