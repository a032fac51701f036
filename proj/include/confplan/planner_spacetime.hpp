#pragma once

#include <optional>

#include "confplan/grid_planning.hpp"

namespace confplan {

/// (1 - gamma) * w_travel - gamma * log(c_next). Returns nullopt when
/// c_next == 0: such edges are pruned instead of carrying an infinite weight.
std::optional<double> edge_weight(double w_travel, double c_next, double gamma);

/// A* over the explicit (cell, confidence, t) graph, where each (cell, t)
/// carries the ladder level assigned by the field. Minimizes the summed
/// edge_weight; among equal f prefers higher-confidence states, then the
/// lower vertex index. With gamma = 0 and 4-connectivity the cost is the
/// arrival time.
PlanResult plan_spacetime(const PlanQuery& query, const ConfidenceField& field);

}  // namespace confplan
