#include "overlay/pattern.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "overlay/error.hpp"

namespace overlay {

std::string_view to_string(Pattern p) noexcept {
  switch (p) {
    case Pattern::Map: return "map";
    case Pattern::ZipMap: return "zipmap";
    case Pattern::Reduce: return "reduce";
    case Pattern::Filter: return "filter";
    case Pattern::ForEach: return "foreach";
    case Pattern::Cond: return "cond";
  }
  return "?";
}

namespace {

std::optional<Pattern> pattern_from_string(std::string_view s) {
  for (Pattern p : {Pattern::Map, Pattern::ZipMap, Pattern::Reduce, Pattern::Filter, Pattern::ForEach,
                    Pattern::Cond}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

// Leading kernel-name arguments of each pattern.
std::size_t kernel_args(Pattern p) { return p == Pattern::Cond ? 3 : 1; }

bool nodes_equal(const PatternNode& a, const PatternNode& b);

bool args_equal(const PatternArg& a, const PatternArg& b) {
  if (a.index() != b.index()) return false;
  if (const auto* pa = std::get_if<PatternPtr>(&a)) {
    const auto& pb = std::get<PatternPtr>(b);
    if (!*pa || !pb) return *pa == pb;
    return nodes_equal(**pa, *pb);
  }
  return a == b;
}

bool nodes_equal(const PatternNode& a, const PatternNode& b) {
  if (a.pattern != b.pattern || a.kernel != b.kernel || a.then_kernel != b.then_kernel ||
      a.else_kernel != b.else_kernel || std::bit_cast<std::uint32_t>(a.init) != std::bit_cast<std::uint32_t>(b.init) ||
      a.args.size() != b.args.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!args_equal(a.args[i], b.args[i])) return false;
  }
  return true;
}

std::string format_float(float v) { return fmt::format("{:.9g}", v); }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  PatternProgram parse() {
    skip_ws();
    auto arg = parse_arg();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    auto* node = std::get_if<PatternPtr>(&arg);
    if (!node) fail("program must be a pattern call");
    return PatternProgram{*node};
  }

 private:
  [[noreturn]] void fail(std::string_view what) const {
    throw Error(Errc::ParseError, fmt::format("column {}: {}", pos_ + 1, what));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!at(c)) fail(fmt::format("expected '{}'", c));
    ++pos_;
  }

  std::string identifier() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_ || std::isdigit(static_cast<unsigned char>(text_[start]))) {
      pos_ = start;
      fail("expected identifier");
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  float number() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '.' || text_[pos_] == '-' || text_[pos_] == '+')) {
      ++pos_;
    }
    const std::string token(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const float v = std::strtof(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size()) {
      pos_ = start;
      fail(fmt::format("bad number '{}'", token));
    }
    return v;
  }

  PatternArg parse_arg() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      return Constant{number()};
    }
    const auto name_pos = pos_;
    auto name = identifier();
    if (!at('(')) return StreamRef{std::move(name)};
    const auto pattern = pattern_from_string(name);
    if (!pattern) {
      pos_ = name_pos;
      fail(fmt::format("unknown pattern '{}'", name));
    }
    expect('(');
    auto node = std::make_shared<PatternNode>();
    node->pattern = *pattern;
    std::vector<std::string> kernels;
    for (std::size_t i = 0; i < kernel_args(*pattern); ++i) {
      kernels.push_back(identifier());
      expect(',');
    }
    node->kernel = kernels[0];
    if (*pattern == Pattern::Cond) {
      node->then_kernel = kernels[1];
      node->else_kernel = kernels[2];
    }
    node->args.push_back(parse_arg());
    while (at(',')) {
      ++pos_;
      node->args.push_back(parse_arg());
    }
    expect(')');

    const auto n = node->args.size();
    switch (*pattern) {
      case Pattern::ZipMap:
        if (n != 2) fail("zipmap takes (kernel, x, y)");
        break;
      case Pattern::Reduce:
        if (n > 2) fail("reduce takes (kernel, x [, init])");
        if (n == 2) {
          const auto* init = std::get_if<Constant>(&node->args[1]);
          if (!init) fail("reduce init must be a number");
          node->init = init->value;
          node->args.pop_back();
        }
        break;
      default:
        if (n > 2) fail(fmt::format("{} takes at most two operands", to_string(*pattern)));
        break;
    }
    return PatternPtr(std::move(node));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print_arg(const PatternArg& arg, std::string& out);

void print_node(const PatternNode& node, std::string& out) {
  out += to_string(node.pattern);
  out += '(';
  out += node.kernel;
  if (node.pattern == Pattern::Cond) {
    out += ", " + node.then_kernel + ", " + node.else_kernel;
  }
  for (const auto& arg : node.args) {
    out += ", ";
    print_arg(arg, out);
  }
  if (node.pattern == Pattern::Reduce && std::bit_cast<std::uint32_t>(node.init) != 0u) {
    out += ", " + format_float(node.init);
  }
  out += ')';
}

void print_arg(const PatternArg& arg, std::string& out) {
  if (const auto* s = std::get_if<StreamRef>(&arg)) {
    out += s->name;
  } else if (const auto* c = std::get_if<Constant>(&arg)) {
    out += format_float(c->value);
  } else {
    print_node(*std::get<PatternPtr>(arg), out);
  }
}

nlohmann::json arg_to_json(const PatternArg& arg);

nlohmann::json node_to_json(const PatternNode& node) {
  nlohmann::json j = {{"pattern", to_string(node.pattern)}, {"kernel", node.kernel}};
  if (node.pattern == Pattern::Cond) {
    j["then"] = node.then_kernel;
    j["else"] = node.else_kernel;
  }
  if (node.pattern == Pattern::Reduce) j["init"] = node.init;
  nlohmann::json args = nlohmann::json::array();
  for (const auto& a : node.args) args.push_back(arg_to_json(a));
  j["args"] = std::move(args);
  return j;
}

nlohmann::json arg_to_json(const PatternArg& arg) {
  if (const auto* s = std::get_if<StreamRef>(&arg)) return {{"stream", s->name}};
  if (const auto* c = std::get_if<Constant>(&arg)) return {{"const", c->value}};
  return node_to_json(*std::get<PatternPtr>(arg));
}

PatternArg arg_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "pattern argument must be an object");
  if (j.contains("stream")) return StreamRef{j.at("stream").get<std::string>()};
  if (j.contains("const")) return Constant{j.at("const").get<float>()};
  const auto name = j.at("pattern").get<std::string>();
  const auto pattern = pattern_from_string(name);
  if (!pattern) throw Error(Errc::ParseError, fmt::format("unknown pattern '{}'", name));
  auto node = std::make_shared<PatternNode>();
  node->pattern = *pattern;
  node->kernel = j.at("kernel").get<std::string>();
  if (*pattern == Pattern::Cond) {
    node->then_kernel = j.at("then").get<std::string>();
    node->else_kernel = j.at("else").get<std::string>();
  }
  if (*pattern == Pattern::Reduce) node->init = j.value("init", 0.0f);
  for (const auto& a : j.at("args")) node->args.push_back(arg_from_json(a));
  if (node->args.empty()) throw Error(Errc::ParseError, fmt::format("{} without arguments", name));
  return PatternPtr(std::move(node));
}

void collect_streams(const PatternNode& node, std::set<std::string>& out) {
  for (const auto& arg : node.args) {
    if (const auto* s = std::get_if<StreamRef>(&arg)) {
      out.insert(s->name);
    } else if (const auto* p = std::get_if<PatternPtr>(&arg)) {
      collect_streams(**p, out);
    }
  }
}

int node_depth(const PatternNode& node) {
  int child = 0;
  for (const auto& arg : node.args) {
    if (const auto* p = std::get_if<PatternPtr>(&arg)) child = std::max(child, node_depth(**p));
  }
  return child + 1;
}

}  // namespace

bool operator==(const Constant& a, const Constant& b) noexcept {
  return std::bit_cast<std::uint32_t>(a.value) == std::bit_cast<std::uint32_t>(b.value);
}

bool operator==(const PatternProgram& a, const PatternProgram& b) {
  if (!a.root || !b.root) return a.root == b.root;
  return nodes_equal(*a.root, *b.root);
}

PatternProgram parse_expression(std::string_view text) { return Parser(text).parse(); }

std::string to_expression(const PatternProgram& program) {
  std::string out;
  if (program.root) print_node(*program.root, out);
  return out;
}

PatternProgram program_from_json(std::string_view json_text) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    auto arg = arg_from_json(doc);
    auto* node = std::get_if<PatternPtr>(&arg);
    if (!node) throw Error(Errc::ParseError, "program root must be a pattern");
    return PatternProgram{*node};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

std::string program_to_json(const PatternProgram& program) {
  return node_to_json(*program.root).dump(2);
}

std::vector<std::string> input_streams(const PatternProgram& program) {
  std::set<std::string> names;
  if (program.root) collect_streams(*program.root, names);
  return {names.begin(), names.end()};
}

int depth(const PatternProgram& program) { return program.root ? node_depth(*program.root) : 0; }

PatternProgram vmul_reduce_program() {
  auto zip = std::make_shared<PatternNode>();
  zip->pattern = Pattern::ZipMap;
  zip->kernel = "mul";
  zip->args = {StreamRef{"A"}, StreamRef{"B"}};
  auto red = std::make_shared<PatternNode>();
  red->pattern = Pattern::Reduce;
  red->kernel = "add";
  red->args = {PatternPtr(zip)};
  return PatternProgram{red};
}

}  // namespace overlay
