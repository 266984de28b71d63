#pragma once

#include <span>

namespace porgysim {

/// Joint influence of a set of active neighbours: 1 - prod(1 - p).
double joint_influence(std::span<const double> probabilities);

/// Joint influence after dropping one contributor with probability
/// `p_removed`. Throws Error(expression_error) when p_removed == 1: a
/// certain activator cannot be factored back out.
double remove_influence(double joint, double p_removed);

/// Joint influence after adding a contributor with probability `p_added`.
double add_influence(double joint, double p_added);

/// Swaps one contributor's probability for a new value in a single step.
/// Equal probabilities leave `joint` untouched.
double replace_influence(double joint, double p_old, double p_new);

}  // namespace porgysim
