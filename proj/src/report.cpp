#include "bandtrace/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace bandtrace::experiments {

namespace {

std::string fixed(double v, int digits = 6) {
  if (!std::isfinite(v)) return std::isnan(v) ? "n/a" : (v > 0 ? "inf" : "-inf");
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

Report render_report(const SweepResult& res, const std::vector<FitReport>& fits,
                     const std::vector<GapCheck>& gap_checks) {
  Report rep;
  std::ostringstream os;
  os << "mu = " << format_double(res.mu) << "  (" << bands::to_string(res.classification) << ")\n";
  os << "N(mu; H) = " << fixed(res.ids, 9) << '\n';
  if (!res.config_hash.empty()) os << "config hash " << res.config_hash << '\n';
  os << "\nW(h):\n";
  for (const auto& [id, w] : res.widom) os << "  " << pad(id, 12) << "  " << fixed(w, 9) << '\n';

  os << "\n" << pad("alpha", 10) << pad("function", 14) << pad("trace", 18) << pad("count", 8) << '\n';
  for (const auto& r : res.rows) {
    os << pad(fixed(r.alpha, 4), 10) << pad(r.function, 14) << pad(fixed(r.trace, 9), 18)
       << pad(std::to_string(r.eigencount), 8) << '\n';
  }

  if (!fits.empty()) {
    os << "\nfits  trace ~ a alpha + b log(alpha) + c\n";
    os << pad("function", 12) << pad("a", 12) << pad("a*", 12) << pad("b", 12) << pad("b*", 12)
       << pad("dev(b)", 10) << pad("c", 12) << pad("rms", 12) << '\n';
    for (const auto& f : fits) {
      os << pad(f.function, 12) << pad(fixed(f.a), 12) << pad(fixed(f.a_target), 12)
         << pad(fixed(f.b), 12) << pad(fixed(f.b_target), 12)
         << pad(f.b_deviation ? fixed(100.0 * *f.b_deviation, 2) + "%" : "n/a", 10)
         << pad(fixed(f.c), 12) << pad(fixed(f.residual_rms, 8), 12) << '\n';
    }
  }
  if (!gap_checks.empty()) {
    os << "\ngap boundedness\n";
    for (const auto& g : gap_checks) {
      os << "  " << pad(g.function, 12) << "  range " << fixed(g.range, 6) << " <= "
         << fixed(g.bound_window, 6) << "  " << (g.pass ? "PASS" : "FAIL") << '\n';
    }
  }
  rep.text = os.str();

  auto& j = rep.json;
  j["mu"] = res.mu;
  j["classification"] = bands::to_string(res.classification);
  j["ids"] = number_or_null(res.ids);
  j["config_hash"] = res.config_hash;
  j["widom"] = res.widom;
  j["h_at_one"] = res.h_at_one;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : res.rows) {
    j["rows"].push_back({{"alpha", r.alpha},
                         {"function", r.function},
                         {"trace", r.trace},
                         {"eigencount", r.eigencount},
                         {"wall_seconds", r.wall_seconds}});
  }
  j["fits"] = nlohmann::json::array();
  for (const auto& f : fits) {
    nlohmann::json fj{{"function", f.function},     {"alpha_min", f.alpha_min},
                      {"rows_used", f.rows_used},   {"linear_dropped", f.linear_dropped},
                      {"a", f.a},                   {"b", f.b},
                      {"c", f.c},                   {"residual_rms", f.residual_rms},
                      {"a_target", number_or_null(f.a_target)}, {"b_target", f.b_target}};
    fj["a_deviation"] = f.a_deviation ? nlohmann::json(*f.a_deviation) : nlohmann::json(nullptr);
    fj["b_deviation"] = f.b_deviation ? nlohmann::json(*f.b_deviation) : nlohmann::json(nullptr);
    j["fits"].push_back(std::move(fj));
  }
  j["gap_checks"] = nlohmann::json::array();
  for (const auto& g : gap_checks) {
    j["gap_checks"].push_back(
        {{"function", g.function}, {"range", g.range}, {"bound_window", g.bound_window}, {"pass", g.pass}});
  }
  return rep;
}

}  // namespace bandtrace::experiments
