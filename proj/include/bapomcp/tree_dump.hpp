#pragma once

#include <cstddef>

#include "json.hpp"

#include "bapomcp/pomcp.hpp"

namespace bapomcp {

namespace detail {

inline nlohmann::json dump_observation_node(const SearchTree& tree, NodeId id, int levels) {
  nlohmann::json out = nlohmann::json::object();
  const auto& n = tree.node(id);
  out["N"] = n.visits;
  nlohmann::json actions = nlohmann::json::array();
  for (std::size_t a = 0; a < n.action_children.size(); ++a) {
    const NodeId child = n.action_children[a];
    if (child == kNoNode) continue;
    const auto& an = tree.node(child);
    nlohmann::json entry = {{"action", a}, {"N", an.visits}, {"mean", an.value.mean}};
    if (levels > 1) {
      nlohmann::json obs = nlohmann::json::array();
      for (const auto& [bin, oid] : an.observation_children) {
        nlohmann::json o = dump_observation_node(tree, oid, levels - 1);
        o["bin"] = bin;
        obs.push_back(std::move(o));
      }
      entry["observations"] = std::move(obs);
    }
    actions.push_back(std::move(entry));
  }
  out["actions"] = std::move(actions);
  return out;
}

}  // namespace detail

/// Nested (action, N, mean) records down to `action_levels` action layers.
inline nlohmann::json tree_to_json(const SearchTree& tree, int action_levels = 2) {
  if (tree.size() == 0) return nlohmann::json::object();
  return detail::dump_observation_node(tree, tree.root(), action_levels);
}

}  // namespace bapomcp
