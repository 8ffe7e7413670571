#pragma once

// Random well-typed pattern programs: depth <= max_depth, streams A/B/C.

#include <algorithm>
#include <array>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "overlay/pattern.hpp"

namespace oftest {

inline constexpr std::array<const char*, 7> kBinary{"add", "sub", "mul", "div", "min", "max", "cmp_lt"};
inline constexpr std::array<const char*, 5> kUnary{"sqrtf", "sin", "cos", "log", "pass"};

class ProgramGen {
 public:
  explicit ProgramGen(std::uint64_t seed, int max_depth = 3) : rng_(seed), max_depth_(max_depth) {}

  overlay::PatternProgram next() {
    const int depth = pick(1, max_depth_);
    auto node = std::make_shared<overlay::PatternNode>();
    const int r = pick(0, 9);
    if (r < 3) {
      // reduce over a stream expression
      node->pattern = overlay::Pattern::Reduce;
      node->kernel = binary();
      if (coin(4)) node->init = constant();
      bool var = false;
      node->args.push_back(stream_arg(depth - 1, var));
      return {node};
    }
    bool var = false;
    if (r == 3) {
      auto inner = stream_node(depth, var);
      auto mut = std::const_pointer_cast<overlay::PatternNode>(inner);
      if (mut->pattern == overlay::Pattern::Map || mut->pattern == overlay::Pattern::ZipMap) {
        mut->pattern = overlay::Pattern::ForEach;
      }
      return {inner};
    }
    return {stream_node(depth, var)};
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(int one_in) { return pick(1, one_in) == 1; }
  std::string binary() { return kBinary[static_cast<std::size_t>(pick(0, 6))]; }
  std::string unary() { return kUnary[static_cast<std::size_t>(pick(0, 4))]; }
  std::string any_kernel() { return coin(2) ? binary() : unary(); }

  float constant() {
    static constexpr std::array<float, 6> kPool{0.0f, 1.0f, -1.0f, 0.5f, 2.0f, 0.25f};
    if (coin(2)) return kPool[static_cast<std::size_t>(pick(0, 5))];
    return std::uniform_real_distribution<float>(-2.0f, 2.0f)(rng_);
  }

  overlay::PatternArg leaf() {
    static constexpr std::array<const char*, 3> kNames{"A", "B", "C"};
    return overlay::StreamRef{kNames[static_cast<std::size_t>(pick(0, 2))]};
  }

  // Stream-valued argument of the given remaining depth.
  overlay::PatternArg stream_arg(int depth, bool& var) {
    if (depth <= 0 || coin(3)) {
      var = false;
      return leaf();
    }
    return stream_node(depth, var);
  }

  // Second operand compatible with a (possibly filtered) x.
  overlay::PatternArg second_arg(int depth, bool x_var) {
    if (x_var || coin(3)) return overlay::Constant{constant()};
    bool var = false;
    for (int tries = 0; tries < 4; ++tries) {
      auto a = stream_arg(depth, var);
      if (!var) return a;
    }
    return leaf();
  }

  overlay::PatternPtr stream_node(int depth, bool& var) {
    auto node = std::make_shared<overlay::PatternNode>();
    const int r = pick(0, 9);
    bool x_var = false;
    auto x = stream_arg(depth - 1, x_var);
    if (r < 3) {
      node->pattern = overlay::Pattern::Map;
      node->kernel = any_kernel();
      node->args.push_back(std::move(x));
      if (node->kernel != "pass" && std::find(kBinary.begin(), kBinary.end(), node->kernel) != kBinary.end()) {
        node->args.push_back(second_arg(depth - 1, x_var));
      }
      var = x_var;
    } else if (r < 5 && !x_var) {
      node->pattern = overlay::Pattern::ZipMap;
      node->kernel = binary();
      node->args.push_back(std::move(x));
      bool y_var = false;
      auto y = stream_arg(depth - 1, y_var);
      node->args.push_back(y_var ? leaf() : std::move(y));
      var = false;
    } else if (r < 7) {
      node->pattern = overlay::Pattern::Filter;
      node->kernel = coin(3) ? any_kernel() : "cmp_lt";
      node->args.push_back(std::move(x));
      if (std::find(kBinary.begin(), kBinary.end(), node->kernel) != kBinary.end()) {
        node->args.push_back(second_arg(depth - 1, x_var));
      }
      var = true;
    } else {
      node->pattern = overlay::Pattern::Cond;
      node->kernel = coin(2) ? "cmp_lt" : any_kernel();
      node->then_kernel = any_kernel();
      node->else_kernel = any_kernel();
      node->args.push_back(std::move(x));
      const auto is_bin = [](const std::string& k) {
        return std::find(kBinary.begin(), kBinary.end(), k) != kBinary.end();
      };
      if (is_bin(node->kernel) || is_bin(node->then_kernel) || is_bin(node->else_kernel)) {
        node->args.push_back(second_arg(depth - 1, x_var));
      }
      var = x_var;
    }
    return node;
  }

  std::mt19937_64 rng_;
  int max_depth_;
};

}  // namespace oftest
