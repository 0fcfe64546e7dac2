#pragma once

// The ten acceptance criteria, run against a config and corpus. Shared by
// `phg accept` and the acceptance test binary.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phg/config.hpp"

namespace phg {

struct CriterionInfo {
  int id = 0;
  /// Short key accepted by --criterion.
  std::string key;
  std::string title;
  /// Runtime budget in seconds.
  double budget = 0.0;
};

const std::vector<CriterionInfo>& acceptance_criteria();

/// Matches an id ("3") or a key ("build_extension"); throws ConfigError otherwise.
const CriterionInfo& find_criterion(const std::string& name);

struct CriterionResult {
  CriterionInfo info;
  bool pass = false;
  std::string summary;
  nlohmann::json detail;
  double seconds = 0.0;
};

using CriterionCallback = std::function<void(const CriterionResult&)>;

/// Runs the selected criteria (all when `only` is empty). Errors inside a
/// criterion make it fail with the message in its summary.
std::vector<CriterionResult> run_acceptance(const RunConfig& c, const Corpus& corpus,
                                            const std::vector<std::string>& only = {},
                                            const CriterionCallback& on_done = nullptr);

/// Machine-readable summary. Timings are left out so reruns are bit-identical.
nlohmann::json acceptance_summary(const RunConfig& c, const std::vector<CriterionResult>& results);

std::string format_result_line(const CriterionResult& r);

}  // namespace phg
