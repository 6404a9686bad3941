#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalelaw/forms.hpp"

namespace scalelaw {

// One published fit of the dense envelope law. `published` keeps the table
// text of each value so that catalog integrity can be checked digit by digit.
struct Preset {
  std::string name;
  DenseParams params;
  std::optional<int> classes;  // set for classification tasks (eps0 fixed)
  std::string units;           // "top1" or "cross-entropy (as published)"
  // alpha, beta, b, c_inf, eta, eps0 (eps0 empty when derived from classes)
  std::array<std::string, 6> published;
};

// Catalog in table order: ImageNet, CIFAR10, CIFAR100, DTD, Aircraft, UCF101,
// PTB, WikiText-2, WikiText-103.
const std::vector<Preset>& preset_catalog();

// Case-sensitive lookup; throws ParseError listing the known names.
const Preset& find_preset(std::string_view name);

}  // namespace scalelaw
