#include <gtest/gtest.h>

#include "overlay/pattern.hpp"
#include "support/expect_errc.hpp"
#include "support/program_gen.hpp"

using namespace overlay;

TEST(Pattern, ParseDotProduct) {
  const auto p = parse_expression("reduce(add, zipmap(mul, A, B))");
  ASSERT_TRUE(p.root);
  EXPECT_EQ(p.root->pattern, Pattern::Reduce);
  EXPECT_EQ(p.root->kernel, "add");
  EXPECT_EQ(p, vmul_reduce_program());
  EXPECT_EQ(depth(p), 2);
  EXPECT_EQ(input_streams(p), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(to_expression(p), "reduce(add, zipmap(mul, A, B))");
}

TEST(Pattern, ParseCondAndConstants) {
  const auto p = parse_expression("cond(cmp_lt, sqrtf, mul, X, 0.5)");
  EXPECT_EQ(p.root->pattern, Pattern::Cond);
  EXPECT_EQ(p.root->then_kernel, "sqrtf");
  EXPECT_EQ(p.root->else_kernel, "mul");
  ASSERT_EQ(p.root->args.size(), 2u);
  EXPECT_EQ(std::get<Constant>(p.root->args[1]).value, 0.5f);
  const auto r = parse_expression("reduce(max, A, -3.25)");
  EXPECT_EQ(r.root->init, -3.25f);
}

TEST(Pattern, ParseErrorsCarryColumn) {
  for (const char* bad : {"", "reduce(add, zipmap(mul, A, B)", "map(sqrtf A)", "frobnicate(add, A)", "map(add, A, 1.2.3)",
                          "reduce(add, A) trailing"}) {
    try {
      (void)parse_expression(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ParseError) << bad;
      EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << e.what();
    }
  }
}

TEST(Pattern, GeneratedProgramsRoundTrip) {
  oftest::ProgramGen gen(3);
  for (int i = 0; i < 500; ++i) {
    const auto p = gen.next();
    EXPECT_LE(depth(p), 3);
    EXPECT_EQ(parse_expression(to_expression(p)), p) << to_expression(p);
    EXPECT_EQ(program_from_json(program_to_json(p)), p) << to_expression(p);
  }
}

TEST(Pattern, JsonShape) {
  const auto p = program_from_json(
      R"({"pattern":"cond","kernel":"cmp_lt","then":"sqrtf","else":"mul","args":[{"stream":"A"},{"const":2.0}]})");
  EXPECT_EQ(p, parse_expression("cond(cmp_lt, sqrtf, mul, A, 2)"));
  EXPECT_ERRC(program_from_json(R"({"stream":"A"})"), Errc::ParseError);
  EXPECT_ERRC(program_from_json(R"({"pattern":"wobble","kernel":"add","args":[{"stream":"A"}]})"), Errc::ParseError);
}
