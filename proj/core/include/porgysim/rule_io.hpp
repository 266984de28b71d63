#pragma once

#include <string>
#include <string_view>

#include "porgysim/graph_io.hpp"
#include "porgysim/rule.hpp"

namespace porgysim {

/// Rule document:
///   {"name", "lhs": {nodes, ports, edges}, "rhs": {nodes, ports, edges},
///    "arrow": {"ports": [{id, type}], "edges": [{port, target}]}, "J"?, "K"?}
/// lhs elements carry `predicates: [{attr, cmp, operand?}]` where operand is a
/// tagged value or {"var": name}; rhs elements carry `properties: {attr: expression}`.
/// Elements may have a `name` used by expressions.
ojson rule_to_json(const RewriteRule& rule);
RewriteRule rule_from_json(const ojson& doc);

std::string serialize_rule(const RewriteRule& rule);
RewriteRule deserialize_rule(std::string_view bytes);

}  // namespace porgysim
