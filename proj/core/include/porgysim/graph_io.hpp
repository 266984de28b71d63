#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "porgysim/portgraph.hpp"

namespace porgysim {

using ojson = nlohmann::ordered_json;

/// Tagged value: {"kind":"bool|int|real|text|ref","v":...}
ojson value_to_json(const Value& value);
Value value_from_json(const ojson& j);

ojson record_to_json(const Record& record);
Record record_from_json(const ojson& j);

/// Element object: {id, owner?, ends?, properties}
ojson element_to_json(const Element& element);

/// Graph document with `nodes`, `ports`, `edges` arrays.
ojson graph_to_json(const PortGraph& graph);
/// Same document plus `position` and `banned` id arrays.
ojson located_to_json(const LocatedGraph& located);

PortGraph graph_from_json(const ojson& doc);
/// Missing `position` means the whole graph; missing `banned` means empty.
LocatedGraph located_from_json(const ojson& doc);

/// Byte serialization. Output is deterministic; parse errors carry the
/// line, column and byte offset of the failure.
std::string serialize_graph(const PortGraph& graph);
std::string serialize_located(const LocatedGraph& located);
PortGraph deserialize_graph(std::string_view bytes);
LocatedGraph deserialize_located(std::string_view bytes);

/// Parses JSON text, converting syntax errors into ParseError.
ojson parse_json_text(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace porgysim
