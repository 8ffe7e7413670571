#include <algorithm>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "overlay/error.hpp"
#include "overlay/jit.hpp"

namespace overlay {

std::string_view to_string(NodeRole role) noexcept {
  switch (role) {
    case NodeRole::Elementwise: return "elementwise";
    case NodeRole::Reduce: return "reduce";
    case NodeRole::Select: return "select";
  }
  return "?";
}

std::string_view to_string(OutputKind kind) noexcept {
  switch (kind) {
    case OutputKind::Stream: return "stream";
    case OutputKind::Scalar: return "scalar";
    case OutputKind::None: return "none";
  }
  return "?";
}

std::vector<GraphEdge> OperatorGraph::edges() const {
  std::vector<GraphEdge> out;
  for (const auto& node : nodes) {
    for (const auto& in : node.inputs) {
      if (in.kind != GraphInput::Kind::Node) continue;
      const GraphEdge e{in.node, node.id};
      if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
    }
  }
  return out;
}

std::vector<std::size_t> OperatorGraph::predecessors(std::size_t id) const {
  std::vector<std::size_t> out;
  for (const auto& in : nodes.at(id).inputs) {
    if (in.kind == GraphInput::Kind::Node && std::find(out.begin(), out.end(), in.node) == out.end()) {
      out.push_back(in.node);
    }
  }
  return out;
}

std::vector<std::size_t> OperatorGraph::successors(std::size_t id) const {
  std::vector<std::size_t> out;
  for (const auto& node : nodes) {
    for (const auto& in : node.inputs) {
      if (in.kind == GraphInput::Kind::Node && in.node == id) {
        out.push_back(node.id);
        break;
      }
    }
  }
  return out;
}

std::vector<std::size_t> OperatorGraph::topological_order() const {
  std::vector<std::size_t> indegree(nodes.size(), 0);
  for (const auto& e : edges()) {
    if (e.producer >= nodes.size()) throw Error(Errc::TypeMismatch, "edge from a missing node");
    ++indegree[e.consumer];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto s : successors(v)) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
  if (order.size() != nodes.size()) throw Error(Errc::TypeMismatch, "operator graph has a cycle");
  return order;
}

void validate_graph(const OperatorGraph& graph) {
  if (graph.nodes.empty()) throw Error(Errc::TypeMismatch, "empty operator graph");
  if (graph.root >= graph.nodes.size()) throw Error(Errc::TypeMismatch, "root out of range");
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& node = graph.nodes[i];
    if (node.id != i) throw Error(Errc::TypeMismatch, fmt::format("node {} stored at slot {}", node.id, i));
    for (const auto& in : node.inputs) {
      if (in.kind == GraphInput::Kind::Node && (in.node >= graph.nodes.size() || in.node == i)) {
        throw Error(Errc::TypeMismatch, fmt::format("node {} has a bad input reference", i));
      }
    }
    std::size_t expected = 0;
    switch (node.role) {
      case NodeRole::Elementwise: expected = static_cast<std::size_t>(node.op.arity); break;
      case NodeRole::Reduce: expected = 1; break;
      case NodeRole::Select: expected = node.inputs.size() == 3 ? 3 : 2; break;
    }
    if (node.inputs.size() != expected) {
      throw Error(Errc::ArityMismatch, fmt::format("node {} ({} {}) has {} inputs, expects {}", i,
                                                   to_string(node.role), node.op.id, node.inputs.size(),
                                                   expected));
    }
    if (node.role == NodeRole::Reduce && node.op.arity != 2) {
      throw Error(Errc::ArityMismatch, fmt::format("reduce with unary operator {}", node.op.id));
    }
  }
  (void)graph.topological_order();
}

namespace {

struct Value {
  GraphInput input;
  bool variable_length = false;  // downstream of a filter
};

class Lowering {
 public:
  explicit Lowering(const LibraryManifest& lib) : lib_(lib) {}

  OperatorGraph run(const PatternProgram& program) {
    if (!program.root) throw Error(Errc::TypeMismatch, "empty program");
    const auto& root = *program.root;
    const Value v = lower_node(root, true);
    graph_.root = v.input.node;
    if (root.pattern == Pattern::Reduce) {
      graph_.output = OutputKind::Scalar;
    } else if (root.pattern == Pattern::ForEach) {
      graph_.output = OutputKind::None;
    } else {
      graph_.output = OutputKind::Stream;
    }
    graph_.streams.assign(streams_.begin(), streams_.end());
    validate_graph(graph_);
    return std::move(graph_);
  }

 private:
  const OperatorDescriptor& resolve(const std::string& name) {
    const auto* op = lib_.resolve(name);
    if (!op) throw Error(Errc::UnknownKernel, name);
    return *op;
  }

  std::size_t add_node(NodeRole role, const OperatorDescriptor& op, std::vector<GraphInput> inputs,
                       float init = 0.0f) {
    const auto id = graph_.nodes.size();
    graph_.nodes.push_back(GraphNode{id, role, op, std::move(inputs), init});
    return id;
  }

  Value lower_arg(const PatternArg& arg) {
    if (const auto* s = std::get_if<StreamRef>(&arg)) {
      streams_.insert(s->name);
      return {GraphInput::from_stream(s->name), false};
    }
    if (const auto* c = std::get_if<Constant>(&arg)) return {GraphInput::from_constant(c->value), false};
    return lower_node(*std::get<PatternPtr>(arg), false);
  }

  // Element stream x, and optional second operand y.
  std::pair<Value, std::optional<Value>> operands(const PatternNode& node) {
    if (node.args.empty() || node.args.size() > 2) {
      throw Error(Errc::ArityMismatch, fmt::format("{} takes one or two operands", to_string(node.pattern)));
    }
    Value x = lower_arg(node.args[0]);
    if (x.input.kind == GraphInput::Kind::Constant) {
      throw Error(Errc::TypeMismatch, fmt::format("{}: element operand must be a stream", to_string(node.pattern)));
    }
    std::optional<Value> y;
    if (node.args.size() == 2) {
      y = lower_arg(node.args[1]);
      const bool y_stream = y->input.kind != GraphInput::Kind::Constant;
      if (y_stream && (x.variable_length || y->variable_length)) {
        throw Error(Errc::TypeMismatch,
                    fmt::format("{}: filtered stream combined elementwise with another stream",
                                to_string(node.pattern)));
      }
    }
    return {x, y};
  }

  std::vector<GraphInput> elementwise_inputs(const OperatorDescriptor& op, const Value& x,
                                             const std::optional<Value>& y, std::string_view where) {
    if (op.arity == 2 && !y) {
      throw Error(Errc::ArityMismatch, fmt::format("{}: binary {} needs a second operand", where, op.id));
    }
    std::vector<GraphInput> inputs{x.input};
    if (op.arity == 2) inputs.push_back(y->input);
    return inputs;
  }

  Value lower_node(const PatternNode& node, bool is_root) {
    switch (node.pattern) {
      case Pattern::Map:
      case Pattern::ZipMap:
      case Pattern::ForEach: {
        if (node.pattern == Pattern::ForEach && !is_root) {
          throw Error(Errc::TypeMismatch, "foreach discards its result and must be the outermost pattern");
        }
        const auto& op = resolve(node.kernel);
        auto [x, y] = operands(node);
        if (node.pattern == Pattern::ZipMap &&
            (!y || y->input.kind == GraphInput::Kind::Constant || op.arity != 2)) {
          throw Error(Errc::ArityMismatch, "zipmap needs a binary kernel and two streams");
        }
        if (op.arity == 1 && y) {
          throw Error(Errc::ArityMismatch, fmt::format("unary {} given a second operand", op.id));
        }
        const auto inputs = elementwise_inputs(op, x, y, to_string(node.pattern));
        const auto id = add_node(NodeRole::Elementwise, op, inputs);
        return {GraphInput::from_node(id), x.variable_length};
      }
      case Pattern::Reduce: {
        if (!is_root) throw Error(Errc::TypeMismatch, "reduce yields a scalar and must be the outermost pattern");
        const auto& op = resolve(node.kernel);
        if (op.arity != 2) throw Error(Errc::ArityMismatch, fmt::format("reduce needs a binary kernel, {} is unary", op.id));
        if (node.args.size() != 1) throw Error(Errc::ArityMismatch, "reduce takes one stream");
        const Value x = lower_arg(node.args[0]);
        if (x.input.kind == GraphInput::Kind::Constant) throw Error(Errc::TypeMismatch, "reduce over a constant");
        const auto id = add_node(NodeRole::Reduce, op, {x.input}, node.init);
        return {GraphInput::from_node(id), false};
      }
      case Pattern::Filter: {
        const auto& pred_op = resolve(node.kernel);
        const auto& select_op = resolve("pass");
        auto [x, y] = operands(node);
        if (pred_op.arity == 1 && y) {
          throw Error(Errc::ArityMismatch, fmt::format("unary predicate {} given a second operand", pred_op.id));
        }
        const auto pred = add_node(NodeRole::Elementwise, pred_op, elementwise_inputs(pred_op, x, y, "filter"));
        const auto sel = add_node(NodeRole::Select, select_op, {GraphInput::from_node(pred), x.input});
        return {GraphInput::from_node(sel), true};
      }
      case Pattern::Cond: {
        const auto& pred_op = resolve(node.kernel);
        const auto& then_op = resolve(node.then_kernel);
        const auto& else_op = resolve(node.else_kernel);
        const auto& select_op = resolve("pass");
        auto [x, y] = operands(node);
        if (y && pred_op.arity == 1 && then_op.arity == 1 && else_op.arity == 1) {
          throw Error(Errc::ArityMismatch, "cond: second operand unused by every kernel");
        }
        const auto pred = add_node(NodeRole::Elementwise, pred_op, elementwise_inputs(pred_op, x, y, "cond"));
        const auto then_id = add_node(NodeRole::Elementwise, then_op, elementwise_inputs(then_op, x, y, "cond"));
        const auto else_id = add_node(NodeRole::Elementwise, else_op, elementwise_inputs(else_op, x, y, "cond"));
        const auto sel = add_node(NodeRole::Select, select_op,
                                  {GraphInput::from_node(pred), GraphInput::from_node(then_id),
                                   GraphInput::from_node(else_id)});
        return {GraphInput::from_node(sel), x.variable_length};
      }
    }
    throw Error(Errc::TypeMismatch, "unknown pattern");
  }

  const LibraryManifest& lib_;
  OperatorGraph graph_;
  std::set<std::string> streams_;
};

}  // namespace

OperatorGraph lower(const PatternProgram& program, const LibraryManifest& lib) {
  return Lowering(lib).run(program);
}

OperatorGraph make_chain(std::span<const OperatorDescriptor> ops) {
  OperatorGraph g;
  std::set<std::string> streams;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    std::vector<GraphInput> inputs;
    if (i == 0) {
      inputs.push_back(GraphInput::from_stream("A"));
      streams.insert("A");
      if (ops[i].arity == 2) {
        inputs.push_back(GraphInput::from_stream("B"));
        streams.insert("B");
      }
    } else {
      inputs.push_back(GraphInput::from_node(i - 1));
      if (ops[i].arity == 2) inputs.push_back(GraphInput::from_constant(1.0f));
    }
    g.nodes.push_back(GraphNode{i, NodeRole::Elementwise, ops[i], std::move(inputs), 0.0f});
  }
  g.root = ops.empty() ? 0 : ops.size() - 1;
  g.output = OutputKind::Stream;
  g.streams.assign(streams.begin(), streams.end());
  return g;
}

}  // namespace overlay
