#include "scalelaw/presets.hpp"

#include <cstdlib>

#include "scalelaw/errors.hpp"

namespace scalelaw {

namespace {

double parse(const std::string& text) { return std::strtod(text.c_str(), nullptr); }

Preset vision(std::string name, int classes, std::array<std::string, 6> pub) {
  auto params = DenseParams::with_classes(parse(pub[0]), parse(pub[1]),
                                          parse(pub[2]), parse(pub[3]),
                                          parse(pub[4]), classes);
  return Preset{std::move(name), params, classes, "top1", std::move(pub)};
}

Preset language(std::string name, std::array<std::string, 6> pub) {
  DenseParams params(parse(pub[0]), parse(pub[1]), parse(pub[2]), parse(pub[3]),
                     parse(pub[4]), parse(pub[5]), Eps0Mode::kFreeParameter);
  return Preset{std::move(name), params, std::nullopt,
                "cross-entropy (as published)", std::move(pub)};
}

std::vector<Preset> build() {
  std::vector<Preset> out;
  out.push_back(vision("ImageNet", 1000,
                       {"0.75403879", "0.61131518", "0.75575083", "3.62934233",
                        "18.50376969", ""}));
  out.push_back(vision("CIFAR10", 10,
                       {"0.655043783", "0.534102925", "5.87E-02", "7.14E-14",
                        "19.7701518", ""}));
  out.push_back(vision("CIFAR100", 100,
                       {"0.70403326", "0.50562759", "0.14727227", "0.70969734",
                        "6.92618391", ""}));
  out.push_back(vision("DTD", 47,
                       {"0.400319211", "1.16231333", "4.30E-05", "1.27E-09",
                        "0.846839835", ""}));
  out.push_back(vision("Aircraft", 100,
                       {"1.10233368", "0.831731092", "3.47E-03", "5.16E-10",
                        "1.12529537", ""}));
  out.push_back(vision("UCF101", 101,
                       {"0.933547255", "0.537578077", "4.68E-02", "1.16E-09",
                        "2.98124532", ""}));
  out.push_back(language("PTB", {"0.80962791", "0.34315027", "0.14690378",
                                 "4.99807364", "6.27494232", "6.09699692"}));
  out.push_back(language("WikiText-2",
                         {"1.00822978", "0.21667458", "0.99145936",
                          "8.23497095", "10.37612973", "6.21205331"}));
  out.push_back(language("WikiText-103",
                         {"0.73505031", "0.55718887", "0.32914295",
                          "9.03598661", "16.33563873", "6.59633058"}));
  return out;
}

}  // namespace

const std::vector<Preset>& preset_catalog() {
  static const std::vector<Preset> catalog = build();
  return catalog;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : preset_catalog())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : preset_catalog()) known += (known.empty() ? "" : ", ") + p.name;
  throw ParseError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace scalelaw
