#pragma once

#include "nemvis/io.hpp"
#include "nemvis/svg.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nemvis {

struct SeedOptions {
  std::optional<double> spacing;        // l_s; defaults to 2 l_n
  std::optional<double> vertex_radius;  // defaults to 2.5 l_n
  double ratio = 2.0;
  double cp_threshold = kDefaultCpThreshold;
  double cs_threshold = kDefaultCsThreshold;
};

struct TraceOptions {
  std::optional<double> step;  // defaults to min(dx, dy) / 2
  double stop_cl = 0.05;
};

/// Nematic length from the "ln" metadata entry, falling back to half the
/// requested spacing. Throws std::invalid_argument when neither is known.
double resolve_nematic_length(const FieldFile& file, const std::optional<double>& spacing);

/// Defect detection, template and seeds, as template JSON.
nlohmann::json seed_stage(const FieldFile& file, const SeedOptions& options);

struct TraceResult {
  Scene scene;
  std::vector<std::string> diagnostics;  // one per seed that could not be traced
};

/// Traces every seed of the template (seeding it first when the JSON has no
/// seeds) and prepares the scene for rendering.
TraceResult trace_stage(const FieldFile& file, const TemplateFile& tmpl, const TraceOptions& options);

/// The text written for a template JSON file.
std::string format_template(const nlohmann::json& j);

/// Field summary printed by `info`.
nlohmann::json field_info(const FieldFile& file);

/// Command-line entry point. Returns 0 on success, 1 on usage errors and 2
/// on data errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nemvis
