#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "bandtrace/experiments.hpp"

namespace bandtrace::experiments {

struct Report {
  std::string text;
  nlohmann::json json;
};

// Sweep table, fitted vs target coefficients, classification, N(mu) and W(h).
Report render_report(const SweepResult& res, const std::vector<FitReport>& fits,
                     const std::vector<GapCheck>& gap_checks = {});

}  // namespace bandtrace::experiments
