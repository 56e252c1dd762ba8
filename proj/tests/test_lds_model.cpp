#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include <doctest.h>

#include "lifeplan/error.hpp"
#include "lifeplan/lds_model.hpp"
#include "support.hpp"

using namespace lifeplan;
using namespace lifeplan::lds;

namespace {

bool mentions(const std::vector<std::string>& msgs, const std::string& field) {
  return std::any_of(msgs.begin(), msgs.end(), [&](const std::string& m) { return m.rfind(field, 0) == 0; });
}

}  // namespace

TEST_CASE("catalog lists the root and ten observations") {
  const auto& cat = biosignature_catalog();
  REQUIRE(cat.size() == 11);
  CHECK(cat[0].id == "s_L");
  CHECK(cat[0].parents.empty());
  for (int i = 1; i <= 10; ++i) {
    CHECK(cat[i].id == "o_" + std::to_string(i));
    CHECK_FALSE(cat[i].parents.empty());
  }
  CHECK(cat[5].lower == 0.0);
  CHECK(cat[5].upper == 22.0);
}

TEST_CASE("default configuration validates") {
  MissionConfig c;
  CHECK(validate_config(c).empty());
  CHECK(c.sigma() == doctest::Approx(0.015));
  c.v_acc = 0.1;
  CHECK(c.sigma() == doctest::Approx(0.05));
}

TEST_CASE("validation names the offending field") {
  MissionConfig c;
  c.lambda = 1.2;
  auto msgs = validate_config(c);
  REQUIRE(msgs.size() == 1);
  CHECK(mentions(msgs, "lambda"));

  MissionConfig off_grid;
  off_grid.usage[5] = 0.885;
  CHECK(mentions(validate_config(off_grid), "instrument_usage.Nanopore"));

  MissionConfig other;
  other.discount = 1.0;
  other.p_biotic = -0.1;
  other.bins["o_3"] = 4;
  auto many = validate_config(other);
  CHECK(mentions(many, "discount"));
  CHECK(mentions(many, "p_biotic"));
  CHECK(mentions(many, "bins.o_3"));
}

TEST_CASE("instruments carry their measurements and usage") {
  auto inst = instruments(MissionConfig{});
  REQUIRE(inst.size() == kNumInstruments);
  CHECK(inst[0].name == "HRMS");
  CHECK(inst[5].name == "Nanopore");
  CHECK(inst[5].usage == doctest::Approx(0.89));
  CHECK(inst[4].measured == std::vector<std::string>{"o_2", "o_3"});
  for (int a = 0; a < kNumInstruments; ++a) CHECK(instrument_name(a) == inst[a].name);
}

TEST_CASE("joint alphabets have the expected sizes") {
  const auto& f = testing::default_lds();
  auto inst = instruments(f.config);
  // HRMS: o_5 (4) x o_7, o_8, o_10 (3 each); SMS and uCE-LIF: o_5 x o_6; ESA: o_7 x o_8
  const std::size_t expected[] = {108, 12, 12, 9, 4, 2};
  for (int a = 0; a < kNumInstruments; ++a)
    CHECK(joint_observation_alphabet(inst[a], f.network.discrete).size() == expected[a]);

  auto alpha = joint_observation_alphabet(inst[1], f.network.discrete);
  CHECK(alpha.front() == std::vector<int>{0, 0});
  CHECK(alpha[1] == std::vector<int>{0, 1});
  CHECK(alpha[3] == std::vector<int>{1, 0});
  CHECK(alpha.back() == std::vector<int>{3, 2});
}

TEST_CASE("default bin edges") {
  const auto& cat = biosignature_catalog();
  CHECK(default_bin_edges(cat[1], 2) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(default_bin_edges(cat[5], 4) == std::vector<double>{0, 3, 8, 15, 22});
  auto edges = default_bin_edges(cat[10], 3);
  REQUIRE(edges.size() == 4);
  CHECK(edges.front() == doctest::Approx(-0.5));
  CHECK(edges[1] == doctest::Approx(-0.5 + 0.5 / 3));
  CHECK(edges.back() == doctest::Approx(0.0));
}

TEST_CASE("built network is discriminative") {
  const auto& f = testing::default_lds();
  const auto& net = f.network.discrete;
  CHECK(bayesnet::validate_network(net).empty());
  // P(o_1 = 1) under each life state
  const auto& row = net.tables()[net.index_of("o_1")].rows;
  CHECK(std::abs(row[1][1] - 0.85) < 0.01);
  CHECK(std::abs(row[0][1] - 0.05) < 0.01);
}

TEST_CASE("shipped network file matches the built-in families") {
  auto shipped = bayesnet::load_network_definition(std::string(LIFEPLAN_DATA_DIR) + "/lds_network.json");
  CHECK(bayesnet::dump_network_definition(shipped) ==
        bayesnet::dump_network_definition(default_network_definition(MissionConfig{})));
}

TEST_CASE("shipped configuration loads and validates") {
  auto c = load_config(std::string(LIFEPLAN_DATA_DIR) + "/default_config.json");
  CHECK(validate_config(c).empty());
  CHECK(c.lambda == 0.72);
  CHECK(c.network_file.find("lds_network.json") != std::string::npos);
  auto text = dump_config(c);
  auto back = parse_config(text);
  CHECK(back.usage == c.usage);
  CHECK(back.sweep.t_biotic == c.sweep.t_biotic);
  CHECK(back.evaluation.rollouts == c.evaluation.rollouts);
}

TEST_CASE("config parsing rejects unknown and mistyped fields") {
  CHECK_THROWS_AS(parse_config(R"({"lamda": 0.7})"), ParseError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"precison": 1e-3}})"), ParseError);
  CHECK_THROWS_AS(parse_config(R"({"lambda": "high"})"), ParseError);
  CHECK_THROWS_AS(parse_config(R"({"format": "lifeplan-config/9"})"), ParseError);
  CHECK_THROWS_AS(parse_config("{\n\"lambda\": 0.7,,\n}"), ParseError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);

  auto c = parse_config(R"({"lambda": 0.9, "sigma_acc": 0.02, "instrument_usage": {"SMS": 0.05}})");
  CHECK(c.lambda == 0.9);
  CHECK(c.sigma() == 0.02);
  CHECK(c.usage[1] == 0.05);
  CHECK(c.usage[0] == 0.01);
}

TEST_CASE("a family outside its variable's range is refused") {
  MissionConfig c;
  c.cpt_samples_per_row = bayesnet::kMinSamplesPerRow;
  auto def = default_network_definition(c);
  const int o1 = 1;
  def.families[o1]->rows[0].first = 1.5;
  const std::string path = "bad_family_network.json";
  {
    std::ofstream out(path);
    out << bayesnet::dump_network_definition(def);
  }
  c.network_file = path;
  CHECK_THROWS_AS(build_default_network(c), ValidationError);
  std::remove(path.c_str());
}
