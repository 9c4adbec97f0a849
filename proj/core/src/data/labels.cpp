#include "xrn/data/labels.hpp"

#include <algorithm>
#include <cctype>

#include "xrn/error.hpp"

namespace xrn::data {

namespace {
std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}
}  // namespace

std::string_view label_name(ClassLabel label) {
  switch (label) {
    case ClassLabel::Normal: return "Normal";
    case ClassLabel::Bacteria: return "Bacteria";
    case ClassLabel::Virus: return "Virus";
    case ClassLabel::Covid19: return "Covid19";
  }
  return "?";
}

ClassLabel parse_label(std::string_view text) {
  const std::string t = lower(text);
  if (t == "normal") return ClassLabel::Normal;
  if (t == "bacteria") return ClassLabel::Bacteria;
  if (t == "virus") return ClassLabel::Virus;
  if (t == "covid19" || t == "covid-19" || t == "covid") return ClassLabel::Covid19;
  throw ConfigError("unknown class label '" + std::string(text) +
                    "' (expected Normal, Bacteria, Virus or Covid19)");
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  const std::string t = lower(text);
  if (t == "train") return Split::Train;
  if (t == "val" || t == "validation") return Split::Val;
  if (t == "test") return Split::Test;
  throw ConfigError("unknown split '" + std::string(text) + "' (expected train, val or test)");
}

}  // namespace xrn::data
