#include "porgysim/influence.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

namespace {

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double joint_influence(std::span<const double> probabilities) {
  double miss = 1.0;
  for (double p : probabilities) miss *= 1.0 - p;
  return clamp_unit(1.0 - miss);
}

double remove_influence(double joint, double p_removed) {
  if (p_removed >= 1.0) {
    throw Error(ErrorCode::expression_error,
                "cannot remove the influence of a neighbour with probability 1");
  }
  return clamp_unit((joint - p_removed) / (1.0 - p_removed));
}

double add_influence(double joint, double p_added) {
  return clamp_unit(joint + (1.0 - joint) * p_added);
}

double replace_influence(double joint, double p_old, double p_new) {
  if (p_old == p_new) return joint;
  // (S \ {u}) u {u'}: one combined expression.
  if (p_old >= 1.0) {
    throw Error(ErrorCode::expression_error,
                fmt::format("cannot replace an influence of probability 1 (new {})", p_new));
  }
  double without = (joint - p_old) / (1.0 - p_old);
  return clamp_unit(without + (1.0 - without) * p_new);
}

}  // namespace porgysim
