#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace xrn::data {

/// Integer encoding is stable: Normal=0, Bacteria=1, Virus=2, Covid19=3.
enum class ClassLabel : int { Normal = 0, Bacteria = 1, Virus = 2, Covid19 = 3 };
inline constexpr std::size_t kNumLabels = 4;
inline constexpr std::array<ClassLabel, kNumLabels> kAllLabels = {
    ClassLabel::Normal, ClassLabel::Bacteria, ClassLabel::Virus, ClassLabel::Covid19};

std::string_view label_name(ClassLabel label);
/// Case-insensitive; also accepts "covid-19" and "covid".
ClassLabel parse_label(std::string_view text);

enum class Split { Train, Val, Test };
std::string_view split_name(Split split);
Split parse_split(std::string_view text);

/// One dataset row. `label` is the task class index (equal to `source`
/// for the 4-class task, 0/1 after a binary filter).
struct SampleRecord {
  std::string image_ref;
  ClassLabel source = ClassLabel::Normal;
  int label = 0;
  Split split = Split::Train;
};

}  // namespace xrn::data
