#pragma once

#include <filesystem>

#include <json.hpp>

#include "cps/config.hpp"
#include "cps/engine.hpp"

namespace cps {

inline constexpr int kReportSchemaVersion = 1;

/// Summary document: resolved config, seeds, counts, energies, violations.
nlohmann::json report_summary(const ScenarioConfig& config, const MetricsReport& report);

/// Writes report.json plus the CSV files into `dir` (created if missing).
void write_report(const std::filesystem::path& dir, const ScenarioConfig& config,
                  const MetricsReport& report);

}  // namespace cps
