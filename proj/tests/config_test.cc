#include "config.hpp"

#include <gtest/gtest.h>

namespace eb_cli {
namespace {

constexpr char kExample[] = R"(# problem file
[system]
n = 2
A = [0.5, 1.0,   # first row
     0.0, 0.5]
label = "two # states"
stationary = true

[task]
horizon = 3
gamma = 2.5
)";

TEST(ConfigTest, ParsesValuesOfEveryKind) {
  const Config cfg = Config::Parse(kExample, "example.toml");
  EXPECT_TRUE(cfg.has_section("system"));
  EXPECT_FALSE(cfg.has_section("bridge"));
  EXPECT_EQ(cfg.integer("system", "n"), 2);
  EXPECT_EQ(cfg.list("system", "A", 4),
            (std::vector<double>{0.5, 1.0, 0.0, 0.5}));
  EXPECT_EQ(cfg.string_or("system", "label", ""), "two # states");
  EXPECT_TRUE(cfg.boolean_or("system", "stationary", false));
  EXPECT_DOUBLE_EQ(cfg.number("task", "gamma"), 2.5);
  EXPECT_EQ(cfg.list("task", "gamma"), std::vector<double>{2.5});
  EXPECT_EQ(cfg.where("task", "horizon"), "example.toml:10");
  EXPECT_EQ(cfg.where("task", "missing"), "example.toml");
}

TEST(ConfigTest, Fallbacks) {
  const Config cfg = Config::Parse(kExample, "example.toml");
  EXPECT_EQ(cfg.integer_or("task", "samples", 7), 7);
  EXPECT_DOUBLE_EQ(cfg.number_or("other", "x", 1.5), 1.5);
  EXPECT_EQ(cfg.string_or("task", "strategy", "optimal"), "optimal");
  EXPECT_FALSE(cfg.boolean_or("task", "flag", false));
}

TEST(ConfigTest, TypeAndShapeErrors) {
  const Config cfg = Config::Parse(kExample, "example.toml");
  EXPECT_THROW(cfg.integer("task", "gamma"), ConfigError);
  EXPECT_THROW(cfg.list("system", "A", 3), ConfigError);
  EXPECT_THROW(cfg.number("system", "label"), ConfigError);
  EXPECT_THROW(cfg.number("system", "missing"), ConfigError);
  EXPECT_THROW(cfg.number("nosection", "n"), ConfigError);
}

TEST(ConfigTest, SyntaxErrorsCarryTheLine) {
  const struct {
    const char* text;
    const char* needle;
  } cases[] = {
      {"[s]\nx = 1\ny = [1, 2, oops]\n", "t.toml:3"},
      {"x = 1\n", "t.toml:1: key outside"},
      {"[s\n", "t.toml:1: unterminated section"},
      {"[s]\nx = 1\nx = 2\n", "t.toml:3: duplicate"},
      {"[s]\nx = [1, 2\n", "t.toml:2: unterminated list"},
      {"[s]\nx = \"open\n", "t.toml:2: unterminated string"},
      {"[s]\njust words\n", "t.toml:2"},
      {"[s]\nx = 1e999\n", "t.toml:2"},
      {"[s]\nx = [1] 2\n", "t.toml:2"},
  };
  for (const auto& c : cases) {
    try {
      Config::Parse(c.text, "t.toml");
      ADD_FAILURE() << "accepted: " << c.text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(c.needle), std::string::npos)
          << e.what();
    }
  }
}

TEST(ConfigTest, LoadReportsMissingFiles) {
  EXPECT_THROW(Config::Load("/nonexistent/problem.toml"), ConfigError);
}

}  // namespace
}  // namespace eb_cli
