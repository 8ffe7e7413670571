#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include <fmt/format.h>

#include "overlay/error.hpp"
#include "overlay/jit.hpp"

namespace overlay {

std::size_t placement_pass_throughs(const OperatorGraph& graph, const Placement& placement) {
  std::size_t total = 0;
  for (const auto& e : graph.edges()) {
    const int d = manhattan(placement.coords.at(e.producer), placement.coords.at(e.consumer));
    if (d > 1) total += static_cast<std::size_t>(d - 1);
  }
  return total;
}

void check_placement(const OperatorGraph& graph, const Placement& placement, const OverlayFabric& fabric) {
  if (placement.coords.size() != graph.nodes.size()) {
    throw Error(Errc::InsufficientTiles,
                fmt::format("{} coordinates for {} nodes", placement.coords.size(), graph.nodes.size()));
  }
  std::set<Coord> used;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const Coord c = placement.coords[i];
    const Tile& t = fabric.tile(c);
    if (!fits(graph.nodes[i].op, t.cls)) {
      throw Error(Errc::ResourceOverflow, fmt::format("node {} ({}) on {} tile {}", i, graph.nodes[i].op.id,
                                                      to_string(t.cls), to_string(c)));
    }
    if (!used.insert(c).second) {
      throw Error(Errc::PortConflict, fmt::format("two nodes share tile {}", to_string(c)));
    }
  }
}

namespace {

class DynamicSearch {
 public:
  DynamicSearch(const OperatorGraph& graph, const OverlayFabric& fabric, std::size_t budget)
      : graph_(graph), fabric_(fabric), expansions_left_(budget) {
    order_ = graph.topological_order();
    edges_ = graph.edges();
    preds_.resize(graph.nodes.size());
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) preds_[i] = graph.predecessors(i);
    for (const Tile& t : fabric.tiles()) {
      if (!t.loaded) free_.push_back(t.coord);
    }
    large_needed_after_.assign(order_.size() + 1, 0);
    for (std::size_t k = order_.size(); k-- > 0;) {
      const auto& op = graph.nodes[order_[k]].op;
      large_needed_after_[k] = large_needed_after_[k + 1] + (fits(op, TileClass::Small) ? 0 : 1);
    }
    for (Coord c : free_) {
      if (fabric.tile(c).cls == TileClass::Large) ++free_large_;
    }
    coords_.assign(graph.nodes.size(), Coord{});
    placed_.assign(graph.nodes.size(), false);
  }

  const std::vector<Coord>& free_tiles() const { return free_; }
  std::size_t free_large() const { return free_large_; }
  std::size_t large_needed() const { return large_needed_after_[0]; }

  // First placement, in greedy candidate order, whose pass-through total is
  // at most `limit`.
  std::optional<std::vector<Coord>> solve(std::size_t limit) {
    limit_ = limit;
    used_.clear();
    std::fill(placed_.begin(), placed_.end(), false);
    large_used_ = 0;
    if (dfs(0, 0)) return coords_;
    return std::nullopt;
  }

  bool exhausted() const { return expansions_left_ == 0; }
  std::size_t routing_rejections() const { return rejections_; }
  const std::string& last_conflict() const { return last_conflict_; }

 private:
  struct Candidate {
    int distance;
    int class_rank;
    Coord coord;
    auto key() const { return std::tuple(distance, class_rank, coord); }
  };

  std::vector<Candidate> candidates(std::size_t node) const {
    const auto& op = graph_.nodes[node].op;
    const bool small_ok = fits(op, TileClass::Small);
    std::vector<Candidate> out;
    for (Coord c : free_) {
      if (used_.count(c)) continue;
      const TileClass cls = fabric_.tile(c).cls;
      if (!fits(op, cls)) continue;
      int dist = 0;
      if (!preds_[node].empty()) {
        for (auto p : preds_[node]) dist += manhattan(c, coords_[p]);
      } else {
        for (std::size_t j = 0; j < placed_.size(); ++j) {
          if (placed_[j]) dist += manhattan(c, coords_[j]);
        }
      }
      // Smallest region that fits: a Small-capable operator leaves Large
      // regions for operators that need them.
      const int rank = small_ok && cls == TileClass::Large ? 1 : 0;
      out.push_back({dist, rank, c});
    }
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.key() < b.key(); });
    return out;
  }

  std::size_t edge_cost(std::size_t node, Coord c) const {
    std::size_t cost = 0;
    for (auto p : preds_[node]) {
      const int d = manhattan(c, coords_[p]);
      if (d > 1) cost += static_cast<std::size_t>(d - 1);
    }
    return cost;
  }

  // A complete assignment counts only if dimension-ordered routing can
  // realise it: a pass-through may not cross a tile that hosts a node.
  bool routable(std::size_t cost) {
    if (cost == 0) return true;  // every edge is a single hop
    if (expansions_left_ > 0) --expansions_left_;
    try {
      (void)route(graph_, Placement{PlacementMode::Dynamic, 0, coords_}, fabric_);
      return true;
    } catch (const Error& e) {
      if (e.code() != Errc::PortConflict) throw;
      last_conflict_ = e.what();
      ++rejections_;
      return false;
    }
  }

  // Interior tiles of the row-first (or column-first) path are all unused.
  bool interior_clear(Coord a, Coord b, bool row_first) const {
    Coord c = a;
    auto walk_cols = [&] {
      while (c.col != b.col) {
        c.col += b.col > c.col ? 1 : -1;
        if (c != b && used_.count(c)) return false;
      }
      return true;
    };
    auto walk_rows = [&] {
      while (c.row != b.row) {
        c.row += b.row > c.row ? 1 : -1;
        if (c != b && used_.count(c)) return false;
      }
      return true;
    };
    return row_first ? walk_cols() && walk_rows() : walk_rows() && walk_cols();
  }

  // Placed nodes only ever add obstacles, so an edge with both
  // dimension-ordered paths blocked cannot be routed in any completion.
  bool paths_open() const {
    for (const auto& e : edges_) {
      if (!placed_[e.producer] || !placed_[e.consumer]) continue;
      const Coord a = coords_[e.producer];
      const Coord b = coords_[e.consumer];
      if (manhattan(a, b) < 2) continue;
      if (!interior_clear(a, b, true) && !interior_clear(a, b, false)) return false;
    }
    return true;
  }

  bool dfs(std::size_t k, std::size_t cost) {
    if (k == order_.size()) return routable(cost);
    if (expansions_left_ == 0) return false;
    --expansions_left_;
    const auto node = order_[k];
    for (const auto& cand : candidates(node)) {
      const auto next_cost = cost + edge_cost(node, cand.coord);
      if (next_cost > limit_) continue;
      const bool large = fabric_.tile(cand.coord).cls == TileClass::Large;
      const std::size_t large_left = free_large_ - large_used_ - (large ? 1 : 0);
      if (large_needed_after_[k + 1] > large_left) continue;
      coords_[node] = cand.coord;
      placed_[node] = true;
      used_.insert(cand.coord);
      if (!paths_open()) {
        if (last_conflict_.empty()) last_conflict_ = "every route would cross an operator tile";
        ++rejections_;
        used_.erase(cand.coord);
        placed_[node] = false;
        continue;
      }
      large_used_ += large ? 1 : 0;
      if (dfs(k + 1, next_cost)) return true;
      large_used_ -= large ? 1 : 0;
      used_.erase(cand.coord);
      placed_[node] = false;
      if (expansions_left_ == 0) return false;
    }
    return false;
  }

  const OperatorGraph& graph_;
  const OverlayFabric& fabric_;
  std::size_t expansions_left_;
  std::vector<std::size_t> order_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<Coord> free_;
  std::size_t free_large_ = 0;
  std::vector<std::size_t> large_needed_after_;

  std::size_t limit_ = 0;
  std::vector<Coord> coords_;
  std::vector<bool> placed_;
  std::set<Coord> used_;
  std::size_t large_used_ = 0;
  std::size_t rejections_ = 0;
  std::string last_conflict_;
};

}  // namespace

Placement place_dynamic(const OperatorGraph& graph, const OverlayFabric& fabric, const PlacementOptions& options) {
  validate_graph(graph);
  DynamicSearch search(graph, fabric, std::max<std::size_t>(options.search_budget, 1));
  if (graph.nodes.size() > search.free_tiles().size()) {
    throw Error(Errc::InsufficientTiles, fmt::format("{} operators, {} free tiles", graph.nodes.size(),
                                                     search.free_tiles().size()));
  }
  for (const auto& node : graph.nodes) {
    if (!fits(node.op, TileClass::Large)) {
      throw Error(Errc::NoFeasibleTile, fmt::format("{} fits no region class", node.op.id));
    }
  }
  if (search.large_needed() > search.free_large()) {
    throw Error(Errc::NoFeasibleTile, fmt::format("{} operators need a Large region, {} free",
                                                  search.large_needed(), search.free_large()));
  }

  // Every neighbour in the graph needs its own port on the node's tile.
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto degree = graph.predecessors(i).size() + graph.successors(i).size();
    if (degree > kDirections.size()) {
      throw Error(Errc::PortConflict, fmt::format("node {} ({}) has {} neighbours, a tile has {} ports", i,
                                                  graph.nodes[i].op.id, degree, kDirections.size()));
    }
  }

  auto best = search.solve(std::numeric_limits<std::size_t>::max());
  if (!best && search.routing_rejections() > 0) {
    throw Error(Errc::PortConflict, fmt::format("no routable placement found: {}", search.last_conflict()));
  }
  if (!best) {
    throw Error(Errc::NoFeasibleTile,
                search.exhausted() ? "placement search budget exhausted" : "no assignment fits the free regions");
  }
  Placement result{PlacementMode::Dynamic, 0, *best};
  const auto found = placement_pass_throughs(graph, result);
  for (std::size_t limit = 0; limit < found && !search.exhausted(); ++limit) {
    if (auto better = search.solve(limit)) {
      result.coords = *better;
      break;
    }
  }
  return result;
}

ResidentMap residents_of(const OverlayFabric& fabric) {
  ResidentMap out;
  for (const Tile& t : fabric.tiles()) {
    if (t.loaded) out.emplace(t.coord, t.loaded->id);
  }
  return out;
}

ResidentMap static_overlay_residents() {
  return {{{1, 0}, "mul"}, {{1, 1}, "add"}, {{1, 2}, "add"}, {{2, 2}, "add"}};
}

OverlayFabric make_static_overlay(const OverlayFabric& base, const LibraryManifest& lib, const ResidentMap& residents) {
  OverlayFabric fabric = base;
  fabric.clear_all();
  for (const auto& [coord, name] : residents) {
    const auto* op = lib.resolve(name);
    if (!op) throw Error(Errc::UnknownKernel, name);
    fabric.load_operator(coord, *op);
  }
  return fabric;
}

Placement place_static(const OperatorGraph& graph, const ResidentMap& residents, int scenario) {
  if (scenario < 0 || scenario > 2) throw Error(Errc::BadScenario, fmt::format("scenario {}", scenario));
  validate_graph(graph);
  Placement result{PlacementMode::Static, scenario, std::vector<Coord>(graph.nodes.size())};
  std::set<Coord> used;
  for (auto node : graph.topological_order()) {
    const auto& op = graph.nodes[node].op;
    const auto preds = graph.predecessors(node);
    std::vector<std::pair<int, Coord>> cands;
    bool any = false;
    for (const auto& [coord, id] : residents) {
      if (id != op.id) continue;
      any = true;
      if (used.count(coord)) continue;
      int dist = 0;
      for (auto p : preds) dist += manhattan(coord, result.coords[p]);
      cands.emplace_back(dist, coord);
    }
    if (!any) throw Error(Errc::KernelNotResident, fmt::format("node {} needs {}", node, op.id));
    std::sort(cands.begin(), cands.end());
    const std::size_t pick = preds.empty() ? 0 : static_cast<std::size_t>(scenario);
    if (pick >= cands.size()) {
      throw Error(Errc::BadScenario, fmt::format("scenario {}: node {} has {} free {} residents", scenario, node,
                                                 cands.size(), op.id));
    }
    result.coords[node] = cands[pick].second;
    used.insert(cands[pick].second);
  }
  return result;
}

}  // namespace overlay
