#include "uwsu/datagen/templates.hpp"

#include <array>
#include <regex>

#include "uwsu/common/error.hpp"

namespace uwsu::datagen {

namespace {

constexpr std::array<std::string_view, 10> kImageCaption = {
    "Write a description for the image.",
    "Offer a concise description of the image.",
    "Give a description of the scene.",
    "Give a short description of the image.",
    "Provide a brief description of the image.",
    "Please give a succinct description of what is shown in this image.",
    "Could you describe the image briefly?",
    "Could you provide a description of the image?",
    "Can you give a brief description of this image?",
    "Could you provide a short overview of the image?",
};

constexpr std::array<std::string_view, 10> kRegionCaption = {
    "Please provide a concise description of this region [bbox] in this underwater image.",
    "Please give a brief description of the region [bbox] in this underwater image.",
    "Could you provide a concise description of the region [bbox] in this underwater image?",
    "Please offer a succinct description of the region [bbox].",
    "Please provide a short yet informative description of the region [bbox].",
    "Describe this region [bbox] in the underwater image.",
    "Briefly describe the content of this region [bbox].",
    "In this underwater image, please provide a concise description of the region [bbox].",
    "For this underwater image, concisely describe the content of the region [bbox].",
    "What's in this region [bbox] of the underwater image? Describe it concisely.",
};

constexpr std::array<std::string_view, 5> kGrounding = {
    "Please locate the bounding box coordinates of the [region].",
    "Find and return the bounding box coordinates of the [region].",
    "Give the bounding box coordinates for the [region].",
    "Extract the precise bounding box coordinates that correspond to the given [region].",
    "Detect and outline the bounding box coordinates enclosing the [region].",
};

constexpr std::array<std::string_view, 2> kDetection = {
    "Detect all [class] object in the image.",
    "Detect all underwater object in the image, including [class1], [class2], ..., [classn].",
};

constexpr std::array<std::string_view, 10> kCounting = {
    "How many fish can you find in this image?",
    "Please count the fish in the image.",
    "Identify the number of fish present in this image.",
    "Count the total number of fish visible in this image.",
    "What is the count of fish in this image?",
    "How many fish can you see in this image?",
    "How many fish are visible in this image?",
    "Please count how many fish are in this image.",
    "Can you determine the number of fish in this image?",
    "What is the total number of fish shown in this image?",
};

constexpr std::array<std::string_view, 5> kCoarse = {
    "Identify the object inside the specified regression box [bbox].",
    "Categorize the object located within the provided regression box [bbox] in the underwater image.",
    "Classify the items found inside the given regression box [bbox].",
    "Determine the category of the object inside the specified regression box [bbox].",
    "Assign a category to the object inside the provided regression box [bbox] in the image.",
};

constexpr std::array<std::string_view, 5> kFine = {
    "Please identify the biological class of fish depicted in the image.",
    "Can you recognize the fish taxonomic class shown in this image?",
    "Could you determine the taxonomic class of the fish in the image?",
    "What is the biological class of the fish in the image?",
    "You are requested to identify the biological class of fish present in the image.",
};

constexpr std::string_view kPromptImage =
    R"(You are an AI visual assistant analyzing an underwater image.

Task Overview:

Generate a detailed and accurate description of the image in one sentence.

Image caption guidelines:

1. Ensure that **each description is affirmative and can be inferred clearly from the image**.

2. Identify the main targets such as various fish, sea turtles, jellyfish and other marine organisms, shipwrecks and ruins, coral reefs, seagrass, divers, etc. When describing, mention the accurate number of targets and determine their category.

3. Consider the action or state of the objects, relationship between objects, background and environment.)";

constexpr std::string_view kPromptRegion =
    R"(Given an image, a bounding box (bbox), and additional textual context, generate a high-quality region description. The description must adhere to the following principles:

Input:

bounding box: {bbox}

This bounding box represents the normalized xy-coordinates of the top-left and bottom-right corners of the target region in the image.

Accuracy: Ensure the description precisely reflects the content within the specified bbox without adding speculative or unrelated details.

Specificity: Provide concrete details about the object's attributes (e.g., shape, color, texture) and relevant contextual information.

Objectivity: Avoid any subjective interpretations, emotions, or assumptions about the object's purpose or intent.

Conciseness: Keep the description informative yet succinct, avoiding unnecessary elaboration.

Context Awareness: Consider the surrounding elements only if they are relevant to understanding the object in the bbox.

Output Format:

description: A dark-colored fish with a broad body and a slightly pointed head, swimming near the coral reef.)";

constexpr std::string_view kPromptVqa =
    R"(You are an AI visual assistant analyzing an underwater image. Generate a structured dialogue between yourself and a person asking questions about the image. Your task is to create precise question-answer pairs based purely on the observable visual content of the image. Each answer should be as short as possible, preferably a single word or short phrase, while maintaining accuracy.

Task Overview:
Generate a variety of structured question-answer pairs that reflect the image's content. Questions should cover different aspects of the image and fall into one of the following categories:
Object Recognition Questions: Identifying or detecting object types and categories (e.g., fish species, coral structures).
Attribute Questions: Describing the properties of objects (e.g., color, size, shape, material).
Counting Questions: Asking about the number of specific objects (e.g., number of fish or coral formations).
Spatial Relation Questions: Asking about the relative position or spatial layout of objects (e.g., where objects are located or their relative positions ).

Guidelines:
For "Spatial Relation Questions",do not answer them by "In the ocean".
Ensure that every question has a definite and clear answer based on what is visually observable in the image.
Avoid speculative or ambiguous questions. Questions should be answerable with confidence and based on visible content.
Include both simple (object identification, counting) and moderate (relative positioning, behaviors) questions.


Format:
Follow this exact format for each question-answer pair and no need to include other content:
Q: [Question]
A: [A single word or phrase])";

constexpr std::string_view kSlots[] = {kClassListSlot, kBboxSlot, kRegionSlot, kClassSlot};

const std::regex& bbox_text() {
  static const std::regex re(R"(\[\d+\.\d{3}, \d+\.\d{3}, \d+\.\d{3}, \d+\.\d{3}\])");
  return re;
}

const std::regex& choice_suffix() {
  static const std::regex re(R"( A\. \d+  B\. \d+  C\. \d+  D\. \d+$)");
  return re;
}

bool instantiates(std::string_view tmpl, std::string_view question) {
  for (std::string_view slot : kSlots) {
    const auto pos = tmpl.find(slot);
    if (pos == std::string_view::npos) continue;
    const std::string_view prefix = tmpl.substr(0, pos), suffix = tmpl.substr(pos + slot.size());
    if (question.size() <= prefix.size() + suffix.size()) return false;
    if (question.substr(0, prefix.size()) != prefix) return false;
    if (question.substr(question.size() - suffix.size()) != suffix) return false;
    const std::string value(question.substr(prefix.size(), question.size() - prefix.size() - suffix.size()));
    if (slot == kBboxSlot) return std::regex_match(value, bbox_text());
    return value.find_first_not_of(' ') != std::string::npos;
  }
  return tmpl == question;
}

}  // namespace

std::span<const std::string_view> question_templates(QaTask task) {
  switch (task) {
    case QaTask::detection: return kDetection;
    case QaTask::coarse_cls: return kCoarse;
    case QaTask::fine_cls: return kFine;
    case QaTask::grounding: return kGrounding;
    case QaTask::counting_regress:
    case QaTask::counting_choice: return kCounting;
    case QaTask::image_caption: return kImageCaption;
    case QaTask::region_caption: return kRegionCaption;
    case QaTask::vqa: return {};
  }
  return {};
}

std::string fill_template(std::string_view tmpl, std::string_view value) {
  std::string out(tmpl);
  for (std::string_view slot : kSlots) {
    const auto pos = out.find(slot);
    if (pos != std::string::npos) return out.replace(pos, slot.size(), value);
  }
  return out;
}

int count_template_matches(QaTask task, std::string_view question) {
  std::string q(question);
  if (task == QaTask::counting_choice) {
    std::smatch m;
    if (!std::regex_search(q, m, choice_suffix())) return 0;
    q = q.substr(0, static_cast<std::size_t>(m.position(0)));
  }
  int n = 0;
  for (std::string_view t : question_templates(task))
    if (instantiates(t, q)) ++n;
  return n;
}

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::image_caption: return "image_caption";
    case PromptKind::region_caption: return "region_caption";
    case PromptKind::vqa: return "vqa";
  }
  return "unknown";
}

PromptKind parse_prompt_kind(std::string_view name) {
  for (PromptKind k : {PromptKind::image_caption, PromptKind::region_caption, PromptKind::vqa})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown prompt kind '" + std::string(name) + "'");
}

std::string_view prompt_template(PromptKind kind) {
  switch (kind) {
    case PromptKind::image_caption: return kPromptImage;
    case PromptKind::region_caption: return kPromptRegion;
    case PromptKind::vqa: return kPromptVqa;
  }
  return {};
}

}  // namespace uwsu::datagen
