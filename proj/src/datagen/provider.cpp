#include "uwsu/datagen/provider.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "httplib.h"
#include "uwsu/datagen/generate.hpp"

namespace uwsu::datagen {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string describe(const std::vector<LineDiagnostic>& diags) {
  std::string msg = "unparseable VQA block";
  for (const auto& d : diags) msg += "; line " + std::to_string(d.line) + ": " + d.message;
  return msg;
}

}  // namespace

std::string FileStubProvider::complete(const ProviderRequest& request) {
  const std::string kind(to_string(request.kind));
  std::vector<std::filesystem::path> candidates;
  if (request.kind == PromptKind::region_caption) {
    candidates.push_back(dir_ / (request.image_id + "." + kind + "." + std::to_string(request.region_index) + ".txt"));
  }
  candidates.push_back(dir_ / (request.image_id + "." + kind + ".txt"));
  for (const auto& path : candidates) {
    std::ifstream in(path, std::ios::binary);
    if (!in) continue;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }
  throw ProviderError("no stub text at " + candidates.back().string());
}

HttpProvider::HttpProvider(std::string endpoint, std::string token_env, int timeout_seconds)
    : endpoint_(std::move(endpoint)), token_env_(std::move(token_env)), timeout_seconds_(timeout_seconds) {
  static const std::regex url(R"(^https?://[^/]+(/.*)?$)");
  if (!std::regex_match(endpoint_, url)) throw ValidationError("provider endpoint must be an http(s) URL: " + endpoint_);
}

std::string HttpProvider::complete(const ProviderRequest& request) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  std::regex_match(endpoint_, m, url);
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(base);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  httplib::Headers headers;
  if (const char* token = std::getenv(token_env_.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const nlohmann::json body = {{"prompt", request.prompt}, {"image", request.image_id}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw ProviderError("provider request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("provider returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("provider response is not {\"text\": ...}: ") + e.what());
  }
}

std::string render_prompt(PromptKind kind, const std::optional<Bbox>& bbox) {
  std::string prompt(prompt_template(kind));
  if (kind == PromptKind::region_caption) {
    if (!bbox) throw ValidationError("region prompt needs a bbox");
    bbox->validate();
    const auto pos = prompt.find("{bbox}");
    prompt.replace(pos, 6, format_bbox(*bbox));
  }
  return prompt;
}

std::string parse_region_description(std::string_view text) {
  std::string t = trim(text);
  static constexpr std::string_view kLabel = "description:";
  if (t.size() >= kLabel.size()) {
    bool match = true;
    for (std::size_t i = 0; i < kLabel.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(t[i])) != kLabel[i]) match = false;
    if (match) t = trim(std::string_view(t).substr(kLabel.size()));
  }
  return t;
}

VqaParseError::VqaParseError(std::vector<LineDiagnostic> diagnostics)
    : ValidationError(describe(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::vector<VqaPair> parse_vqa(std::string_view text) {
  std::vector<VqaPair> pairs;
  std::vector<LineDiagnostic> diags;
  std::optional<std::pair<int, std::string>> pending;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("Q:", 0) == 0) {
      if (pending) diags.push_back({pending->first, "question has no answer line"});
      const std::string q = trim(std::string_view(line).substr(2));
      if (q.empty()) {
        diags.push_back({lineno, "empty question"});
        pending.reset();
      } else {
        pending.emplace(lineno, q);
      }
    } else if (line.rfind("A:", 0) == 0) {
      const std::string a = trim(std::string_view(line).substr(2));
      if (!pending) {
        diags.push_back({lineno, "answer without a preceding question"});
      } else if (a.empty()) {
        diags.push_back({lineno, "empty answer"});
        pending.reset();
      } else {
        pairs.push_back({pending->second, a});
        pending.reset();
      }
    } else {
      diags.push_back({lineno, "expected a line starting with 'Q:' or 'A:'"});
    }
  }
  if (pending) diags.push_back({pending->first, "question has no answer line"});
  if (diags.empty() && pairs.empty()) diags.push_back({0, "no question-answer pairs"});
  if (!diags.empty()) throw VqaParseError(std::move(diags));
  return pairs;
}

FreeformResult request_freeform(CaptionProvider& provider, const std::string& image_id, PromptKind kind,
                                const std::optional<Bbox>& bbox, int region_index, int attempt) {
  ProviderRequest req{image_id, kind, render_prompt(kind, bbox), bbox, region_index, attempt};
  const std::string text = provider.complete(req);
  FreeformResult out;
  switch (kind) {
    case PromptKind::image_caption: {
      const std::string t = trim(text);
      if (t.empty()) throw ValidationError("provider returned an empty caption for " + image_id);
      out.captions.push_back({image_id, CaptionScope::image, std::nullopt, t, provider.id()});
      break;
    }
    case PromptKind::region_caption: {
      const std::string t = parse_region_description(text);
      if (t.empty()) throw ValidationError("provider returned an empty region caption for " + image_id);
      out.captions.push_back({image_id, CaptionScope::region, bbox, t, provider.id()});
      break;
    }
    case PromptKind::vqa:
      for (auto& p : parse_vqa(text)) {
        QaRecord r;
        r.image_id = image_id;
        r.task = QaTask::vqa;
        r.question = std::move(p.question);
        r.answer = std::move(p.answer);
        out.qa.push_back(std::move(r));
      }
      break;
  }
  return out;
}

}  // namespace uwsu::datagen
