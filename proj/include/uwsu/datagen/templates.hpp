#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uwsu/datagen/records.hpp"

namespace uwsu::datagen {

// Placeholders as they appear in the question templates.
inline constexpr std::string_view kBboxSlot = "[bbox]";
inline constexpr std::string_view kRegionSlot = "[region]";
inline constexpr std::string_view kClassSlot = "[class]";
inline constexpr std::string_view kClassListSlot = "[class1], [class2], ..., [classn]";

// Question templates for a task. Both counting tasks share one table; VQA
// questions are free-form and have none.
std::span<const std::string_view> question_templates(QaTask task);

// Replaces the single placeholder of `tmpl` (if any) by `value`.
std::string fill_template(std::string_view tmpl, std::string_view value);

// Number of templates of `task` that `question` instantiates. Slots must be
// non-empty; [bbox] slots must hold a formatted box. Counting-choice
// questions are matched after removing the option list.
int count_template_matches(QaTask task, std::string_view question);

enum class PromptKind { image_caption, region_caption, vqa };

std::string_view to_string(PromptKind kind);
PromptKind parse_prompt_kind(std::string_view name);

// Generation prompt text. The region prompt carries a "{bbox}" slot.
std::string_view prompt_template(PromptKind kind);

}  // namespace uwsu::datagen
