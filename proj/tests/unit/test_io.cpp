#include <cmath>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "scalelaw/errors.hpp"
#include "scalelaw/io.hpp"
#include "scalelaw/presets.hpp"
#include "scalelaw/report.hpp"
#include "scalelaw/rng.hpp"
#include "scalelaw/synthetic.hpp"

using namespace scalelaw;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("dense csv basics") {
  const auto one = parse_dense_csv("m,n,error\n1000,50000,0.31\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].m == 1000);
  CHECK(one[0].n == 50000);
  CHECK(one[0].error == 0.31);
  CHECK(!one[0].replicate);

  const auto with = parse_dense_csv("# comment\n\nm,n,error,replicate\r\n1,2,0.5,3\r\n# x\n4,5,0.25,\n");
  REQUIRE(with.size() == 2);
  CHECK(with[0].replicate == 3);
  CHECK(!with[1].replicate);
}

TEST_CASE("dense csv errors carry their location") {
  CHECK_THROWS_AS(parse_dense_csv("m,n,error\n1000,50000,0\n"), DomainError);
  CHECK(message_of([] { parse_dense_csv("m,n,error\n1000,50000,0\n"); }).find("row 2") !=
        std::string::npos);
  const auto msg = message_of([] { parse_dense_csv("m,n,error\n1,1,0.5\n1,x,0.5\n"); });
  CHECK(msg.find("row 3, column 2 (n)") != std::string::npos);
  CHECK_THROWS_AS(parse_dense_csv("m,n,error\n1,1,0.5\n1,x,0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_dense_csv("n,m,error\n1,1,1\n"), ParseError);
  CHECK_THROWS_AS(parse_dense_csv("m,n,error\n1,1\n"), ParseError);
  CHECK_THROWS_AS(parse_dense_csv("m,n,error\n1,1,0.5,2\n"), ParseError);
  CHECK_THROWS_AS(parse_dense_csv("m,n,error\n-1,1,0.5\n"), DomainError);
  CHECK_THROWS_AS(parse_dense_csv("m,n,error\n1,1,0,5\n"), ParseError);  // decimal comma
  CHECK_THROWS_AS(parse_dense_csv("m,n,error\n"), ParseError);
  CHECK_THROWS_AS(parse_dense_csv(""), ParseError);
  CHECK_THROWS_AS(parse_dense_csv("m,n,error,replicate\n1,1,0.5,-1\n"), ParseError);
}

TEST_CASE("dense csv round trip") {
  const auto p = find_preset("CIFAR100").params;
  NoiseModel noise{NoiseKind::kLognormal, 0.02, 0.0, 3};
  const auto data =
      generate_dense_grid(p, geometric_scales(4, 7), geometric_scales(2, 7), noise, 2);
  const auto back = parse_dense_csv(dense_csv(data));
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].m == data[i].m);
    CHECK(back[i].n == data[i].n);
    CHECK(back[i].error == data[i].error);
    CHECK(back[i].replicate == data[i].replicate);
  }
  CHECK(dense_csv(back) == dense_csv(data));
}

TEST_CASE("prune csv anchors and ladder check") {
  const auto g = parse_prune_csv(
      "depth,width_scale,density,n,error\n20,1,1.0,1,0.1\n20,1,0.8,1,0.11\n20,1,0.64,1,0.12\n");
  REQUIRE(g.records.size() == 3);
  for (const auto& r : g.records) CHECK(r.eps_np == 0.1);
  CHECK(g.warnings.empty());

  const auto msg = message_of([] {
    parse_prune_csv("depth,width_scale,density,n,error\n20,1,0.8,1,0.11\n");
  });
  CHECK(msg.find("depth=20, width_scale=1, n=1") != std::string::npos);

  const auto off = parse_prune_csv(
      "depth,width_scale,density,n,error\n20,1,1,1,0.1\n20,1,0.5,1,0.11\n14,1,1,1,0.1\n");
  REQUIRE(off.warnings.size() == 1);
  CHECK(off.warnings[0].find("depth=20") != std::string::npos);
  CHECK_THROWS_AS(parse_prune_csv("depth,width_scale,density,n,error\n20,1,1.5,1,0.1\n"),
                  DomainError);
}

TEST_CASE("prune csv round trip") {
  const auto configs = cifar_like_configs();
  NoiseModel noise{NoiseKind::kLognormal, 0.034, 0.0, 1};
  const auto fam = generate_prune_family(cifar_like_prune_truth(), cifar_like_eps_np_rule(),
                                         configs, imp_ladder(24), noise, 1);
  const auto back = parse_prune_csv(prune_csv(fam));
  REQUIRE(back.records.size() == fam.size());
  CHECK(back.warnings.empty());
  for (std::size_t i = 0; i < fam.size(); ++i) {
    CHECK(back.records[i].depth == fam[i].depth);
    CHECK(back.records[i].width == fam[i].width);
    CHECK(back.records[i].density == fam[i].density);
    CHECK(back.records[i].error == fam[i].error);
  }
  CHECK(detect_csv_kind(prune_csv(fam)) == CsvKind::kPrune);
  CHECK(detect_csv_kind("m,n,error\n") == CsvKind::kDense);
}

TEST_CASE("shortest round-trip formatting") {
  SplitMix64 rng(5);
  for (int k = 0; k < 10000; ++k) {
    const double v = std::ldexp(rng.uniform(0.5, 1.0), static_cast<int>(rng.below(200)) - 100);
    REQUIRE(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e5) == "1e+05");
}

TEST_CASE("json numbers round-trip") {
  SplitMix64 rng(6);
  Json j = Json::array();
  std::vector<double> vals;
  for (int k = 0; k < 1000; ++k) {
    vals.push_back(rng.normal() * std::pow(10.0, rng.uniform(-30, 30)));
    j.push_back(vals.back());
  }
  const Json back = Json::parse(j.dump());
  for (std::size_t k = 0; k < vals.size(); ++k) CHECK(back[k].get<double>() == vals[k]);
  Json r = make_report("x", Json::object(), Json::object());
  CHECK(r["schema"] == 1);
  CHECK(r.begin().key() == "schema");
}

TEST_CASE("atomic writes") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "scalelaw_io_test";
  fs::remove_all(dir);
  write_file_atomic(dir / "a.txt", "first");
  write_file_atomic(dir / "a.txt", "second");
  CHECK(read_text_file(dir / "a.txt") == "second");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  fs::remove_all(dir);
  CHECK_THROWS_AS(read_text_file(dir / "missing.csv"), ParseError);
}
