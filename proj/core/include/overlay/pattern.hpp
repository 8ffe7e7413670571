#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace overlay {

enum class Pattern { Map, ZipMap, Reduce, Filter, ForEach, Cond };

std::string_view to_string(Pattern p) noexcept;

struct PatternNode;
using PatternPtr = std::shared_ptr<const PatternNode>;

struct StreamRef {
  std::string name;
  friend bool operator==(const StreamRef&, const StreamRef&) = default;
};

struct Constant {
  float value = 0.0f;
  friend bool operator==(const Constant& a, const Constant& b) noexcept;  // bitwise
};

using PatternArg = std::variant<StreamRef, Constant, PatternPtr>;

// Argument conventions (x is the element stream, y an optional second
// operand, stream or constant):
//   map(k, x [, y])        zipmap(k, x, y)       reduce(k, x [, init])
//   filter(p, x [, y])     foreach(k, x [, y])   cond(p, t, e, x [, y])
// Unary kernels take (x), binary kernels (x, y).
struct PatternNode {
  Pattern pattern = Pattern::Map;
  std::string kernel;       // predicate for filter and cond
  std::string then_kernel;  // cond only
  std::string else_kernel;  // cond only
  float init = 0.0f;        // reduce only
  std::vector<PatternArg> args;
};

struct PatternProgram {
  PatternPtr root;
};

bool operator==(const PatternProgram& a, const PatternProgram& b);

// Expression syntax, e.g. "reduce(add, zipmap(mul, A, B))".
// Throws Error{ParseError} with the column of the offending token.
PatternProgram parse_expression(std::string_view text);
std::string to_expression(const PatternProgram& program);

// JSON node tree:
//   {"stream": "A"} | {"const": 2.0} |
//   {"pattern": "reduce", "kernel": "add", "init": 0.0, "args": [...]} |
//   {"pattern": "cond", "kernel": "cmp_lt", "then": "sqrtf", "else": "mul", "args": [...]}
PatternProgram program_from_json(std::string_view json_text);
std::string program_to_json(const PatternProgram& program);

// Distinct stream names referenced by the program, sorted.
std::vector<std::string> input_streams(const PatternProgram& program);

// Depth of the pattern tree (a single pattern node has depth 1).
int depth(const PatternProgram& program);

// Dot product reduce(add, zipmap(mul, A, B)), the static-vs-dynamic workload.
PatternProgram vmul_reduce_program();

}  // namespace overlay
