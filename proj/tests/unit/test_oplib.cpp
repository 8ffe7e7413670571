#include <cmath>

#include <gtest/gtest.h>

#include "overlay/oplib.hpp"
#include "support/expect_errc.hpp"

using namespace overlay;

namespace {

OperatorDescriptor with(ResourceBudget fp) {
  OperatorDescriptor op;
  op.id = "probe";
  op.kernel = Kernel::Mul;
  op.arity = 2;
  op.footprint = fp;
  return op;
}

}  // namespace

TEST(Oplib, DefaultClassFit) {
  const auto lib = default_library();
  EXPECT_NO_THROW(validate_manifest(lib));
  EXPECT_FALSE(fits(*lib.find("sqrtf"), TileClass::Small));
  EXPECT_TRUE(fits(*lib.find("mul"), TileClass::Small));
  for (const char* heavy : {"sqrtf", "sin", "cos", "log"}) EXPECT_FALSE(fits(*lib.find(heavy), TileClass::Small));
  for (const auto& op : lib.operators) {
    EXPECT_TRUE(fits(op, TileClass::Large)) << op.id;
    EXPECT_EQ(op.arity, kernel_arity(op.kernel));
    EXPECT_LE(op.initiation_interval, op.latency_cycles);
  }
}

TEST(Oplib, BoundaryFits) {
  EXPECT_TRUE(fits(with({4, 156, 270}), TileClass::Small));
  EXPECT_FALSE(fits(with({4, 157, 270}), TileClass::Small));
  EXPECT_FALSE(fits(with({4, 156, 271}), TileClass::Small));
  EXPECT_TRUE(fits(with({8, 964, 1228}), TileClass::Large));
  EXPECT_FALSE(fits(with({9, 964, 1228}), TileClass::Large));
}

TEST(Oplib, FirstOverflowOrder) {
  EXPECT_EQ(ResourceBudget({5, 200, 300}).first_overflow(kSmallBudget), ResourceField::Dsp);
  EXPECT_EQ(ResourceBudget({4, 200, 300}).first_overflow(kSmallBudget), ResourceField::Ff);
  EXPECT_EQ(ResourceBudget({4, 156, 300}).first_overflow(kSmallBudget), ResourceField::Lut);
  EXPECT_FALSE(ResourceBudget({4, 156, 270}).first_overflow(kSmallBudget));
}

TEST(Oplib, DuplicateIds) {
  auto lib = default_library();
  lib.operators.push_back(*lib.find("mul"));
  EXPECT_ERRC(validate_manifest(lib), Errc::DuplicateId);
  EXPECT_ERRC(load_manifest(dump_manifest(lib)), Errc::DuplicateId);
}

TEST(Oplib, UnplaceableFootprint) {
  const char* doc = R"({"version":"t","operators":[
    {"id":"big","kernel":"mul","dsp":9,"ff":10,"lut":10,"latency":3,"ii":1}]})";
  EXPECT_ERRC(load_manifest(doc), Errc::UnplaceableOperator);
}

TEST(Oplib, SchemaProblems) {
  EXPECT_ERRC(load_manifest("{"), Errc::SchemaError);
  EXPECT_ERRC(load_manifest(R"({"operators":[{"id":"x"}]})"), Errc::SchemaError);
  EXPECT_ERRC(load_manifest(R"({"operators":[{"id":"x","kernel":"tan","dsp":1,"ff":1,"lut":1,"latency":1,"ii":1}]})"),
              Errc::UnknownKernel);
  EXPECT_ERRC(load_manifest(R"({"operators":[{"id":"x","kernel":"add","dsp":1,"ff":1,"lut":1,"latency":1,"ii":2}]})"),
              Errc::SchemaError);
  EXPECT_ERRC(load_manifest(R"({"operators":[{"id":"x","kernel":"add","arity":1,"dsp":1,"ff":1,"lut":1,"latency":1,"ii":1}]})"),
              Errc::SchemaError);
}

TEST(Oplib, ManifestRoundTrip) {
  const auto lib = default_library();
  EXPECT_EQ(load_manifest(dump_manifest(lib)), lib);
}

TEST(Oplib, ResolveByKernelName) {
  const char* doc = R"({"version":"t","operators":[
    {"id":"fast_mul","kernel":"mul","dsp":3,"ff":140,"lut":250,"latency":3,"ii":1}]})";
  const auto lib = load_manifest(doc);
  ASSERT_NE(lib.resolve("mul"), nullptr);
  EXPECT_EQ(lib.resolve("mul")->id, "fast_mul");
  EXPECT_EQ(lib.find("mul"), nullptr);
  EXPECT_EQ(lib.resolve("add"), nullptr);
}

TEST(Oplib, KernelSemantics) {
  EXPECT_EQ(apply_kernel(Kernel::Add, 1.5f, 2.0f), 3.5f);
  EXPECT_EQ(apply_kernel(Kernel::Sub, 1.5f, 2.0f), -0.5f);
  EXPECT_EQ(apply_kernel(Kernel::Mul, 1.5f, 2.0f), 3.0f);
  EXPECT_EQ(apply_kernel(Kernel::Div, 3.0f, 2.0f), 1.5f);
  EXPECT_EQ(apply_kernel(Kernel::Min, 3.0f, 2.0f), 2.0f);
  EXPECT_EQ(apply_kernel(Kernel::Max, 3.0f, 2.0f), 3.0f);
  EXPECT_EQ(apply_kernel(Kernel::CmpLt, 1.0f, 2.0f), 1.0f);
  EXPECT_EQ(apply_kernel(Kernel::CmpLt, 2.0f, 2.0f), 0.0f);
  EXPECT_EQ(apply_kernel(Kernel::Sqrtf, 9.0f), 3.0f);
  EXPECT_EQ(apply_kernel(Kernel::Sin, 0.5f), static_cast<float>(std::sin(0.5)));
  EXPECT_EQ(apply_kernel(Kernel::Cos, 0.5f), static_cast<float>(std::cos(0.5)));
  EXPECT_EQ(apply_kernel(Kernel::Log, 2.0f), static_cast<float>(std::log(2.0)));
  EXPECT_EQ(apply_kernel(Kernel::Pass, -7.0f, 3.0f), -7.0f);
  EXPECT_TRUE(std::isnan(apply_kernel(Kernel::Sqrtf, -1.0f)));
}

TEST(Oplib, KernelNames) {
  for (auto k : {Kernel::Add, Kernel::Sub, Kernel::Mul, Kernel::Div, Kernel::Min, Kernel::Max, Kernel::CmpLt,
                 Kernel::Sqrtf, Kernel::Sin, Kernel::Cos, Kernel::Log, Kernel::Pass}) {
    EXPECT_EQ(kernel_from_name(kernel_name(k)), k);
  }
  EXPECT_FALSE(kernel_from_name("tan"));
}
