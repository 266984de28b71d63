#include "simulation.hpp"

#include <filesystem>

#include <porgysim/error.hpp>

namespace porgysim::app {

RunSummary summarize(const Session& session, const std::vector<StrategyOutcome>& outcomes) {
  RunSummary s;
  for (const auto& o : outcomes) {
    if (!o.log.empty()) ++s.rounds;
    s.applications += o.log.size();
    if (o.status != RunStatus::completed && s.status != RunStatus::aborted) {
      s.status = o.status;
      s.error = o.error;
    }
  }
  s.leaf = session.cursor;
  auto state = session.tree->state(s.leaf);
  for (auto n : state.graph.nodes()) {
    auto a = state.graph.property(n, "active");
    if (a && a->kind() == ValueKind::boolean && a->as_bool()) ++s.final_active;
  }
  return s;
}

void write_run_outputs(const Session& session, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir + ": " + ec.message());
  auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  const auto& tree = *session.tree;
  write_file(path("metrics.csv"), export_trace(tree, session.cursor, ExportFormat::csv_metrics));
  write_file(path("events.jsonl"), export_trace(tree, session.cursor, ExportFormat::jsonl_events));
  write_file(path("tree.dot"), export_trace(tree, session.cursor, ExportFormat::dot_tree));
  save_session(session, path("session.json"));
}

}  // namespace porgysim::app
