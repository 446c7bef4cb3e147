#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uwsu/common/bbox.hpp"
#include "uwsu/common/error.hpp"
#include "uwsu/datagen/records.hpp"
#include "uwsu/datagen/templates.hpp"

namespace uwsu::datagen {

// Transient provider failure; callers may retry.
class ProviderError : public Error {
 public:
  using Error::Error;
};

struct ProviderRequest {
  std::string image_id;
  PromptKind kind = PromptKind::image_caption;
  std::string prompt;
  std::optional<Bbox> bbox;
  int region_index = 0;
  int attempt = 0;
};

class CaptionProvider {
 public:
  virtual ~CaptionProvider() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const ProviderRequest& request) = 0;
};

// Reads <dir>/<image_id>.<kind>.txt. Region requests first look for
// <image_id>.region_caption.<region_index>.txt.
class FileStubProvider : public CaptionProvider {
 public:
  explicit FileStubProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string id() const override { return "file-stub"; }
  std::string complete(const ProviderRequest& request) override;

 private:
  std::filesystem::path dir_;
};

// POSTs {"prompt", "image"} as JSON to one endpoint and reads {"text"}. The
// bearer token is read from `token_env` on every call and never stored.
class HttpProvider : public CaptionProvider {
 public:
  HttpProvider(std::string endpoint, std::string token_env = "UWSU_PROVIDER_TOKEN",
               int timeout_seconds = 60);
  std::string id() const override { return "http:" + endpoint_; }
  std::string complete(const ProviderRequest& request) override;

 private:
  std::string endpoint_;
  std::string token_env_;
  int timeout_seconds_;
};

// Prompt text for `kind`; region prompts need a bbox.
std::string render_prompt(PromptKind kind, const std::optional<Bbox>& bbox = std::nullopt);

// Drops a leading "description:" label and surrounding whitespace.
std::string parse_region_description(std::string_view text);

struct VqaPair {
  std::string question;
  std::string answer;
};

struct LineDiagnostic {
  int line = 0;
  std::string message;
};

class VqaParseError : public ValidationError {
 public:
  explicit VqaParseError(std::vector<LineDiagnostic> diagnostics);
  const std::vector<LineDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<LineDiagnostic> diagnostics_;
};

// Alternating "Q: ..." / "A: ..." lines; blank lines are ignored. Any stray
// or unpaired line rejects the whole block.
std::vector<VqaPair> parse_vqa(std::string_view text);

struct FreeformResult {
  std::vector<CaptionRecord> captions;
  std::vector<QaRecord> qa;  // vqa only; ids left empty
};

FreeformResult request_freeform(CaptionProvider& provider, const std::string& image_id, PromptKind kind,
                                const std::optional<Bbox>& bbox = std::nullopt, int region_index = 0,
                                int attempt = 0);

}  // namespace uwsu::datagen
