#pragma once

#include <string>
#include <vector>

#include "session.hpp"

namespace porgysim::app {

struct RunSummary {
  std::size_t rounds = 0;           // propagation steps with at least one application
  std::size_t applications = 0;
  std::size_t final_active = 0;
  RunStatus status = RunStatus::completed;
  std::string error;
  StateId leaf{};
};

RunSummary summarize(const Session& session, const std::vector<StrategyOutcome>& outcomes);

/// Writes metrics.csv, events.jsonl, tree.dot and session.json into `dir`.
void write_run_outputs(const Session& session, const std::string& dir);

}  // namespace porgysim::app
