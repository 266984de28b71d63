#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "porgysim/portgraph.hpp"

namespace porgysim {

enum class Attachment { preferential, uniform };

struct GeneratorConfig {
  std::size_t node_count = 300;
  Attachment attachment = Attachment::preferential;
  std::size_t edges_per_new_node = 2;
  double triad_closure = 0.3;
  std::uint64_t seed = 0;
};

/// Growth model: an initial clique of edges_per_new_node + 1 nodes, then
/// each new node links to edges_per_new_node distinct earlier nodes. The
/// first target is drawn by attachment rule; each further link closes a
/// triangle with probability triad_closure. Nodes are named n1..nN and own
/// an In and an Out port; each edge joins one node's In to the other's Out.
PortGraph generate(const GeneratorConfig& config);

/// Parses `u v [p_uv p_vu]` lines (blank lines and # comments skipped).
/// Repeated pairs are collapsed; a message per dropped line is appended to
/// `warnings`. For an edge u.In - v.Out: p_i2o = p_uv and p_o2i = p_vu.
PortGraph import_edge_list(std::string_view text, std::vector<std::string>* warnings = nullptr);

}  // namespace porgysim
