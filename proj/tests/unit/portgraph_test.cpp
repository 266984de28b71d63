#include <gtest/gtest.h>

#include <porgysim/error.hpp>
#include <porgysim/graph_io.hpp>
#include <porgysim/netgen.hpp>
#include <porgysim/portgraph.hpp>

#include "oracles.hpp"

using namespace porgysim;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io_error;
}

}  // namespace

TEST(PortGraphCreate, EmptyGraphIsValid) {
  auto g = PortGraph::create({}, {}, {});
  EXPECT_EQ(g.element_count(), 0u);
  EXPECT_NO_THROW(g.validate());
}

TEST(PortGraphCreate, TwoNodesOneEdge) {
  std::vector<NodeSpec> nodes{{{{"name", Value("n1")}}}, {{{"name", Value("n2")}}}};
  std::vector<PortSpec> ports{{0, {{"name", Value("In")}}},
                              {0, {{"name", Value("Out")}}},
                              {1, {{"name", Value("In")}}},
                              {1, {{"name", Value("Out")}}}};
  std::vector<EdgeSpec> edges{{0, 3, {}}};
  auto g = PortGraph::create(nodes, ports, edges);
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.port_count(), 4u);
  EXPECT_EQ(g.edge_count(), 1u);
  g.validate();
}

TEST(PortGraphCreate, DuplicateEdgeRejected) {
  std::vector<NodeSpec> nodes{{}, {}};
  std::vector<PortSpec> ports{{0, {}}, {1, {}}};
  std::vector<EdgeSpec> edges{{0, 1, {}}, {1, 0, {}}};
  try {
    PortGraph::create(nodes, ports, edges);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_graph);
    EXPECT_NE(std::string(e.what()).find("duplicate edge"), std::string::npos);
  }
}

TEST(PortGraphCreate, DanglingPortOwnerRejected) {
  PortGraph g;
  EXPECT_EQ(code_of([&] { g.add_port(ElementId{42}); }), ErrorCode::invalid_graph);
}

TEST(PortGraphProperty, PresentAbsentUnknown) {
  PortGraph g;
  auto n = g.add_node(Record::from_entries({{"active", Value(true)}}));
  ASSERT_TRUE(g.property(n, "active"));
  EXPECT_TRUE(g.property(n, "active")->as_bool());
  EXPECT_FALSE(g.property(n, "theta"));
  EXPECT_EQ(code_of([&] { g.property(ElementId{999}, "active"); }), ErrorCode::unknown_element);
}

TEST(PortGraphProperty, SignatureFixesKindAndIntegersWiden) {
  PortGraph g;
  auto a = g.add_node(Record::from_entries({{"sigma", Value(0.5)}}));
  auto b = g.add_node();
  g.set_property(b, "sigma", Value(2));
  EXPECT_EQ(g.property(b, "sigma")->kind(), ValueKind::real);
  EXPECT_DOUBLE_EQ(g.property(b, "sigma")->as_real(), 2.0);
  EXPECT_EQ(code_of([&] { g.set_property(a, "sigma", Value("high")); }), ErrorCode::kind_mismatch);
}

TEST(PortGraphMutation, RemoveNodeCascades) {
  auto g = oracle::social_graph(3, {{0, 1}, {1, 2}});
  auto n2 = oracle::node_named(g, "n2");
  g.remove_node(n2);
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.port_count(), 4u);
  EXPECT_EQ(g.edge_count(), 0u);
  g.validate();
}

TEST(PortGraphMutation, IdsNeverReused) {
  PortGraph g;
  auto a = g.add_node();
  g.remove_node(a);
  auto b = g.add_node();
  EXPECT_NE(a, b);
}

TEST(PortGraphSharing, CopiesShareUntouchedElements) {
  auto g = oracle::social_graph(3, {{0, 1}, {1, 2}});
  auto copy = g;
  auto n1 = oracle::node_named(g, "n1");
  auto n3 = oracle::node_named(g, "n3");
  copy.set_property(n1, "active", Value(true));
  EXPECT_FALSE(g.property(n1, "active"));
  EXPECT_EQ(g.shared(n3), copy.shared(n3));
  EXPECT_NE(g.shared(n1), copy.shared(n1));
  auto changed = changed_slots(g, copy);
  EXPECT_EQ(changed, std::vector<ElementId>{n1});
}

TEST(LocatedGraph, SetPositionAndBan) {
  auto g = oracle::social_graph(3, {{0, 1}, {1, 2}});
  auto located = LocatedGraph::whole(g);
  EXPECT_EQ(located.position.size(), g.element_count());
  EXPECT_TRUE(located.banned.empty());
  auto all_nodes = set_position(located, g.nodes());
  EXPECT_EQ(all_nodes.position.ids(), g.nodes());
  auto none = set_position(located, {});
  EXPECT_TRUE(none.position.empty());
  auto n3 = oracle::node_named(g, "n3");
  auto banned = set_ban(located, {n3});
  EXPECT_TRUE(banned.banned.contains(n3));
  EXPECT_EQ(code_of([&] { set_ban(located, {ElementId{777}}); }), ErrorCode::unknown_element);
}

TEST(GraphSerialization, EmptyRoundTrips) {
  PortGraph g;
  EXPECT_EQ(deserialize_graph(serialize_graph(g)), g);
}

TEST(GraphSerialization, GeneratedGraphRoundTrips) {
  GeneratorConfig gc;
  gc.seed = 3;
  auto g = generate(gc);
  g.set_property(g.nodes().front(), "active", Value(true));
  auto back = deserialize_graph(serialize_graph(g));
  EXPECT_EQ(back, g);
  EXPECT_EQ(back.edge_count(), g.edge_count());
}

TEST(GraphSerialization, LocatedRoundTrips) {
  auto g = oracle::social_graph(3, {{0, 1}});
  auto located = set_ban(set_position(LocatedGraph::whole(g), g.nodes()), {g.edges().front()});
  EXPECT_EQ(deserialize_located(serialize_located(located)), located);
}

TEST(GraphSerialization, TruncatedInputReportsOffset) {
  auto text = serialize_graph(oracle::social_graph(2, {{0, 1}}));
  auto cut = text.substr(0, text.size() / 2);
  try {
    deserialize_graph(cut);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_LE(e.offset(), cut.size());
    EXPECT_GE(e.line(), 1u);
  }
}

TEST(GraphSerialization, ValuesKeepTheirKind) {
  for (const auto& v : {Value(true), Value(std::int64_t{-4}), Value(0.25), Value("x"), Value(ElementId{7})}) {
    EXPECT_EQ(value_from_json(value_to_json(v)), v);
  }
}
