#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "overlay/error.hpp"
#include "overlay/jit.hpp"

namespace overlay {

std::size_t RoutePlan::total_pass_throughs() const noexcept {
  std::size_t total = 0;
  for (const auto& r : routes) total += r.pass_throughs();
  return total;
}

std::vector<Coord> RoutePlan::pass_through_tiles() const {
  std::vector<Coord> out;
  for (const auto& r : routes) {
    for (std::size_t i = 1; i + 1 < r.path.size(); ++i) out.push_back(r.path[i]);
  }
  return out;
}

namespace {

std::vector<Coord> dimension_path(Coord from, Coord to, bool column_first) {
  std::vector<Coord> path{from};
  Coord c = from;
  auto walk_cols = [&] {
    while (c.col != to.col) {
      c.col += c.col < to.col ? 1 : -1;
      path.push_back(c);
    }
  };
  auto walk_rows = [&] {
    while (c.row != to.row) {
      c.row += c.row < to.row ? 1 : -1;
      path.push_back(c);
    }
  };
  if (column_first) {
    walk_cols();
    walk_rows();
  } else {
    walk_rows();
    walk_cols();
  }
  return path;
}

class PortLedger {
 public:
  PortLedger(const std::set<Coord>& hosts) : hosts_(hosts) {}

  // Claims for `path`, or a description of the first conflict.
  std::optional<std::string> try_claim(const std::vector<Coord>& path, std::vector<PortSetting>& out) {
    std::vector<PortSetting> claims;
    std::set<Coord> composed;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const Direction out_dir = *neighbour_direction(path[i], path[i + 1]);
      if (i == 0) {
        claims.push_back({path[i], out_dir, PortMode::emit()});
      }
      const Coord next = path[i + 1];
      const Direction in_dir = opposite(out_dir);
      if (i + 2 == path.size()) {
        claims.push_back({next, in_dir, PortMode::consume()});
      } else {
        const Direction exit = *neighbour_direction(next, path[i + 2]);
        if (!bypass_opcode(in_dir, exit)) {
          if (hosts_.count(next)) {
            return fmt::format("{} hosts an operator and has no {}->{} bypass", to_string(next),
                               direction_letter(in_dir), direction_letter(exit));
          }
          composed.insert(next);
        }
        claims.push_back({next, in_dir, PortMode::bypass(exit)});
        claims.push_back({next, exit, PortMode::idle()});
      }
    }
    for (const auto& c : claims) {
      if (claimed_.count({c.coord, c.dir})) {
        return fmt::format("port {} of {} already in use", direction_letter(c.dir), to_string(c.coord));
      }
      if (exclusive_.count(c.coord)) {
        return fmt::format("{} forwards a composed route", to_string(c.coord));
      }
    }
    // A composed consume/emit pair only identifies its route when it is the
    // only traffic on the tile.
    for (const Coord c : composed) {
      for (Direction d : kDirections) {
        if (!claimed_.count({c, d})) continue;
        return fmt::format("{} already carries traffic", to_string(c));
      }
    }
    for (const auto& c : claims) {
      claimed_.emplace(std::pair{c.coord, c.dir}, c.mode);
      out.push_back(c);
    }
    exclusive_.insert(composed.begin(), composed.end());
    return std::nullopt;
  }

 private:
  const std::set<Coord>& hosts_;
  std::map<std::pair<Coord, Direction>, PortMode> claimed_;
  std::set<Coord> exclusive_;
};

}  // namespace

RoutePlan route(const OperatorGraph& graph, const Placement& placement, const OverlayFabric& fabric) {
  if (placement.coords.size() != graph.nodes.size()) {
    throw Error(Errc::InsufficientTiles, "placement does not cover the graph");
  }
  std::set<Coord> hosts(placement.coords.begin(), placement.coords.end());
  for (Coord c : hosts) (void)fabric.tile(c);
  PortLedger ledger(hosts);
  RoutePlan plan;
  for (const auto& e : graph.edges()) {
    const Coord from = placement.coords[e.producer];
    const Coord to = placement.coords[e.consumer];
    auto path = dimension_path(from, to, true);
    auto conflict = ledger.try_claim(path, plan.ports);
    if (conflict) {
      auto alt = dimension_path(from, to, false);
      if (alt == path || ledger.try_claim(alt, plan.ports)) {
        throw Error(Errc::PortConflict,
                    fmt::format("edge {}->{} from {} to {}: {}", e.producer, e.consumer, to_string(from),
                                to_string(to), *conflict));
      }
      path = std::move(alt);
    }
    plan.routes.push_back(Route{e.producer, e.consumer, std::move(path)});
  }
  return plan;
}

}  // namespace overlay
