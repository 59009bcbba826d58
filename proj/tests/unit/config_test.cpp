#include <gtest/gtest.h>

#include "config.hpp"
#include "testing.hpp"

namespace certmark::cli {
namespace {

std::string config_error(const std::string& text, const std::string& source = "run.toml") {
  try {
    parse_run_config(text, source);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "expected a configuration error for:\n" << text;
  return {};
}

TEST(Toml, ScalarsArraysAndComments) {
  const auto t = parse_toml(R"(top = 3  # trailing
[a]
f = -0.25
b = true
s = "x # not a comment \"q\""
list = [1, 2.5, "z", false]
empty = []
)");
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t[0].first, "top");
  EXPECT_EQ(std::get<std::int64_t>(t[0].second), 3);
  EXPECT_EQ(t[1].first, "a.f");
  EXPECT_EQ(std::get<double>(t[1].second), -0.25);
  EXPECT_TRUE(std::get<bool>(t[2].second));
  EXPECT_EQ(std::get<std::string>(t[3].second), "x # not a comment \"q\"");
  const auto& list = std::get<std::vector<TomlScalar>>(t[4].second);
  ASSERT_EQ(list.size(), 4u);
  EXPECT_EQ(std::get<double>(list[1]), 2.5);
  EXPECT_EQ(std::get<std::string>(list[2]), "z");
  EXPECT_TRUE(std::get<std::vector<TomlScalar>>(t[5].second).empty());
}

TEST(Toml, SyntaxErrorsNameSourceAndLine) {
  for (const auto& [text, line] : std::vector<std::pair<std::string, int>>{
           {"a = 1\n[broken\n", 2}, {"a = 1\nb\n", 2}, {"a = 1\na = 2\n", 2}, {"\n\nx = \"open\n", 3},
           {"x = [1, 2\n", 1}, {"x = 1 2\n", 1}}) {
    try {
      parse_toml(text, "f.toml");
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig);
      EXPECT_NE(std::string(e.what()).find("f.toml:" + std::to_string(line) + ":"), std::string::npos) << e.what();
    }
  }
}

TEST(RunConfigText, UnknownKeyAndTypeErrorsCarryLocation) {
  auto msg = config_error("seed = 1\n[federated]\nround = 3\n");
  EXPECT_NE(msg.find("run.toml:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("federated.round"), std::string::npos) << msg;
  msg = config_error("[federated]\nclients = \"many\"\n");
  EXPECT_NE(msg.find("run.toml:2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("federated.clients"), std::string::npos) << msg;
  msg = config_error("[model]\nconv = \"gat\"\n");
  EXPECT_NE(msg.find("model.conv"), std::string::npos) << msg;
  msg = config_error("[federated]\nrandom_watermark = 1\n");
  EXPECT_NE(msg.find("federated.random_watermark"), std::string::npos) << msg;
  msg = config_error("seed = -4\n");
  EXPECT_NE(msg.find("run.toml:1:"), std::string::npos) << msg;
  config_error("[attack]\nkinds = [\"pruning\"]\n");
}

TEST(RunConfigText, MutagProfileAndOverrides) {
  const auto c = parse_run_config("[dataset]\nname = \"MUTAG\"\n");
  EXPECT_EQ(c.model.ensemble_size, 2u);
  EXPECT_EQ(c.federated.watermarked_clients, 5u);
  EXPECT_EQ(c.dataset.train_counts, (std::vector<std::size_t>{42, 83}));
  EXPECT_EQ(c.dataset.test_counts, (std::vector<std::size_t>{21, 42}));
  // Explicit keys win over the profile regardless of their position.
  const auto o = parse_run_config("[model]\nensemble_size = 4\n[dataset]\nname = \"MUTAG\"\n");
  EXPECT_EQ(o.model.ensemble_size, 4u);
  const auto p = parse_run_config("[dataset]\nname = \"PROTEINS\"\n");
  EXPECT_EQ(p.model.ensemble_size, 4u);
  EXPECT_EQ(p.dataset.train_counts, (std::vector<std::size_t>{440, 300}));
}

TEST(RunConfigText, EmitParseRoundTrip) {
  RunConfig c = parse_run_config("");
  c.seed = 17;
  c.threads = 3;
  c.dataset.partition = PartitionMode::kLabelSkew;
  c.dataset.train_fraction = 0.7;
  c.model.conv = ConvType::kGsage;
  c.federated.lr = 0.015f;
  c.federated.aggregator = {AggregatorKind::kMultiKrum, 0, 2};
  c.federated.random_watermark = true;
  c.federated.er_edge_probability = 0.3;
  c.watermark.watermark_fraction = 0.125;
  c.attacks = {AttackKind::kFinetune};
  c.attack.lr = 0.003f;
  c.evaluation.mode = WatermarkMode::kGlobal;
  c.evaluation.radii = {0, 2};
  c.evaluation.threshold = 0.6;
  const auto text = emit_run_config(c);
  const auto back = parse_run_config(text);
  EXPECT_TRUE(back == c) << text;
  EXPECT_EQ(emit_run_config(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
  c.threads = 1;
  EXPECT_EQ(config_hash(back), config_hash(c));
  c.seed = 18;
  EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(RunConfigText, ShippedConfigsParseAndValidate) {
  for (const char* name : {"default.toml", "mutag.toml", "mutag_random.toml", "mutag_s4.toml"}) {
    const auto path = testing::config_dir() / name;
    const auto c = load_run_config(path);
    EXPECT_NO_THROW(validate(c)) << name;
    EXPECT_EQ(c.dataset.name, "MUTAG");
  }
}

TEST(Scale, CiPreset) {
  auto c = parse_run_config("");
  apply_scale(c, "ci");
  EXPECT_EQ(c.federated.clients, 10u);
  EXPECT_EQ(c.federated.rounds, 40u);
  EXPECT_LE(c.federated.watermarked_clients, 10u);
  auto same = parse_run_config("");
  apply_scale(same, "full");
  EXPECT_TRUE(same == parse_run_config(""));
  EXPECT_THROW(apply_scale(same, "huge"), Error);
  auto other = parse_run_config("[dataset]\nname = \"DD\"\n");
  EXPECT_THROW(apply_scale(other, "ci"), Error);
}

TEST(Validate, RejectsBadCombinations) {
  auto bad = [](const std::string& text) {
    EXPECT_THROW(validate(parse_run_config(text)), Error) << text;
  };
  bad("[federated]\nclients = 4\nwatermarked_clients = 5\n");
  bad("[federated]\nselection_fraction = 0.0\n");
  bad("[watermark]\nn_w = 1\n");
  bad("[attack]\nperturbed_layers = 11\n");
  bad("[evaluation]\nradii = [3, 1]\n");
  bad("[federated]\ner_edge_probability = 1.5\n");
  EXPECT_NO_THROW(validate(parse_run_config("[attack]\nperturbed_layers = 10\n")));
}

TEST(DataRoot, ExplicitRootWins) {
  auto c = parse_run_config("[dataset]\nroot = \"/x/y\"\n");
  EXPECT_EQ(dataset_directory(c), std::filesystem::path("/x/y/MUTAG"));
}

}  // namespace
}  // namespace certmark::cli
