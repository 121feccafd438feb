#pragma once

#include "nemvis/field.hpp"
#include "nemvis/field_gen.hpp"
#include "nemvis/integrator.hpp"
#include "nemvis/seeding.hpp"
#include "nemvis/topology.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nemvis {

/// Malformed input file. line() is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line);
  int line() const { return line_; }

 private:
  int line_;
};

/// Writes to a sibling temporary and renames over path.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// .qtf text format:
///   QTF 1
///   # key value            (optional metadata, anywhere before the rows)
///   grid nx ny dx dy ox oy
///   mask 0|1
///   nx*ny rows of qxx qxy qxz qyy qyz [mask bit], x fastest
struct FieldFile {
  TensorField field;
  std::map<std::string, std::string> metadata;
};

std::string format_field(const TensorField& field, const std::map<std::string, std::string>& metadata = {});
FieldFile parse_field(const std::string& text);
void write_field(const TensorField& field, const std::filesystem::path& path,
                 const std::map<std::string, std::string>& metadata = {});
FieldFile read_field(const std::filesystem::path& path);

nlohmann::json report_to_json(const RelaxReport& report);

/// Template JSON, optionally carrying the seeds under "seeds".
nlohmann::json template_to_json(const TopologicalTemplate& tmpl, const std::vector<SeedPoint>& seeds = {});
struct TemplateFile {
  TopologicalTemplate tmpl;
  std::vector<SeedPoint> seeds;
};
TemplateFile template_from_json(const nlohmann::json& j);

/// Legacy ASCII polydata of the streamline centerlines. Empty lines are
/// skipped.
std::string format_polydata(const std::vector<Hyperstreamline>& lines);
void write_polydata(const std::vector<Hyperstreamline>& lines, const std::filesystem::path& path);

struct PolyData {
  std::vector<Vec3> points;
  std::vector<std::vector<int>> lines;
  std::map<std::string, std::vector<double>> scalars;
  std::map<std::string, std::vector<Vec3>> vectors;
};
PolyData parse_polydata(const std::string& text);
PolyData read_polydata(const std::filesystem::path& path);

}  // namespace nemvis
