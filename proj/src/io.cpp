#include "nemvis/io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace nemvis {

using nlohmann::json;

ParseError::ParseError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot rename onto '" + path.string() + "'");
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double toDouble(std::string_view tok, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(fmt::format("expected a number, got '{}'", tok), line);
  if (!std::isfinite(v)) throw ParseError(fmt::format("non-finite value '{}'", tok), line);
  return v;
}

long toInt(std::string_view tok, int line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(fmt::format("expected an integer, got '{}'", tok), line);
  return v;
}

// Splits text into lines, remembering 1-based line numbers.
struct LineReader {
  std::string_view text;
  std::size_t pos = 0;
  int number = 0;

  bool next(std::string_view& line) {
    if (pos >= text.size()) return false;
    const std::size_t end = text.find('\n', pos);
    const std::size_t stop = end == std::string_view::npos ? text.size() : end;
    line = text.substr(pos, stop - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = stop + 1;
    ++number;
    return true;
  }
};

}  // namespace

std::string format_field(const TensorField& field, const std::map<std::string, std::string>& metadata) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "QTF 1\n");
  for (const auto& [k, v] : metadata) fmt::format_to(std::back_inserter(buf), "# {} {}\n", k, v);
  fmt::format_to(std::back_inserter(buf), "grid {} {} {:.17g} {:.17g} {:.17g} {:.17g}\n", field.nx(), field.ny(),
                 field.dx(), field.dy(), field.ox(), field.oy());
  const bool withMask = !field.hasFullMask();
  fmt::format_to(std::back_inserter(buf), "mask {}\n", withMask ? 1 : 0);
  for (int j = 0; j < field.ny(); ++j)
    for (int i = 0; i < field.nx(); ++i) {
      const auto& q = field.at(i, j);
      fmt::format_to(std::back_inserter(buf), "{:.17g} {:.17g} {:.17g} {:.17g} {:.17g}", q.qxx, q.qxy, q.qxz, q.qyy,
                     q.qyz);
      if (withMask) fmt::format_to(std::back_inserter(buf), " {}", field.inMask(i, j) ? 1 : 0);
      buf.push_back('\n');
    }
  return fmt::to_string(buf);
}

FieldFile parse_field(const std::string& text) {
  LineReader rd{text};
  std::map<std::string, std::string> meta;
  std::string_view line;

  // Header lines, skipping metadata and blank lines.
  auto header = [&](const char* what) {
    while (rd.next(line)) {
      const auto t = tokens(line);
      if (t.empty()) continue;
      if (t[0] == "#") {
        if (t.size() >= 2) {
          // Value is the rest of the line after the key, trimmed.
          std::string_view rest = line.substr(static_cast<std::size_t>(t[1].data() + t[1].size() - line.data()));
          const auto v = tokens(rest);
          meta[std::string(t[1])] =
              v.empty() ? std::string() : std::string(v.front().data(), v.back().data() + v.back().size());
        }
        continue;
      }
      return t;
    }
    throw ParseError(fmt::format("unexpected end of file, expected {}", what), rd.number + 1);
  };

  auto t = header("'QTF 1' header");
  if (t.size() != 2 || t[0] != "QTF") throw ParseError("missing 'QTF <version>' header", rd.number);
  if (toInt(t[1], rd.number) != 1) throw ParseError(fmt::format("unsupported version '{}'", t[1]), rd.number);

  t = header("grid line");
  if (t.size() != 7 || t[0] != "grid") throw ParseError("expected 'grid nx ny dx dy ox oy'", rd.number);
  const long nx = toInt(t[1], rd.number), ny = toInt(t[2], rd.number);
  const double dx = toDouble(t[3], rd.number), dy = toDouble(t[4], rd.number);
  const double ox = toDouble(t[5], rd.number), oy = toDouble(t[6], rd.number);
  if (nx < 2 || ny < 2 || nx > 1 << 15 || ny > 1 << 15)
    throw ParseError("grid size must satisfy 2 <= nx, ny <= 32768", rd.number);
  if (!(dx > 0.0) || !(dy > 0.0)) throw ParseError("grid spacing dx and dy must be > 0", rd.number);

  t = header("mask line");
  if (t.size() != 2 || t[0] != "mask" || (t[1] != "0" && t[1] != "1"))
    throw ParseError("expected 'mask 0' or 'mask 1'", rd.number);
  const bool withMask = t[1] == "1";
  const std::size_t columns = withMask ? 6 : 5;

  FieldFile out{TensorField(static_cast<int>(nx), static_cast<int>(ny), dx, dy, ox, oy), std::move(meta)};
  const std::size_t total = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  std::size_t row = 0;
  while (row < total) {
    if (!rd.next(line))
      throw ParseError(fmt::format("truncated file: missing row {} of {}", row + 1, total), rd.number + 1);
    const auto v = tokens(line);
    if (v.empty()) continue;
    if (v.size() != columns)
      throw ParseError(fmt::format("row {} has {} values, expected {}", row + 1, v.size(), columns), rd.number);
    AlignmentTensor q;
    q.qxx = toDouble(v[0], rd.number);
    q.qxy = toDouble(v[1], rd.number);
    q.qxz = toDouble(v[2], rd.number);
    q.qyy = toDouble(v[3], rd.number);
    q.qyz = toDouble(v[4], rd.number);
    const int i = static_cast<int>(row % nx), j = static_cast<int>(row / nx);
    out.field.at(i, j) = q;
    if (withMask) {
      if (v[5] != "0" && v[5] != "1") throw ParseError("mask bit must be 0 or 1", rd.number);
      out.field.setMask(i, j, v[5] == "1");
    }
    ++row;
  }
  while (rd.next(line))
    if (!tokens(line).empty()) throw ParseError(fmt::format("extra data after {} rows", total), rd.number);
  return out;
}

void write_field(const TensorField& field, const std::filesystem::path& path,
                 const std::map<std::string, std::string>& metadata) {
  write_atomic(path, format_field(field, metadata));
}

FieldFile read_field(const std::filesystem::path& path) { return parse_field(read_text(path)); }

json report_to_json(const RelaxReport& report) {
  return json{{"steps", report.steps}, {"dt", report.dt}, {"energies", report.energies},
              {"prng_seed", report.prng_seed}};
}

namespace {

json point(const Vec2& p) { return json::array({p.x(), p.y()}); }

Vec2 readPoint(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("template: point must be [x, y]", 0);
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

json template_to_json(const TopologicalTemplate& tmpl, const std::vector<SeedPoint>& seeds) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : tmpl.graph.vertices)
    j["vertices"].push_back({{"x", v.position.x()}, {"y", v.position.y()}, {"peak_cp", v.peak_cp},
                             {"cells", v.cluster_cells}});
  j["edges"] = json::array();
  for (const auto& [a, b] : tmpl.graph.edges) j["edges"].push_back({a, b});
  j["curves"] = json::array();
  for (const auto& c : tmpl.curves) {
    json cj{{"kind", to_string(c.kind)}, {"closed", c.closed}, {"points", json::array()}};
    for (const auto& p : c.points) cj["points"].push_back(point(p));
    if (c.owner_vertex) cj["owner"] = *c.owner_vertex;
    j["curves"].push_back(std::move(cj));
  }
  j["params"] = {{"vertex_radius", tmpl.params.vertex_radius}, {"spacing", tmpl.params.spacing},
                 {"ratio", tmpl.params.ratio}, {"cp_threshold", tmpl.params.cp_threshold},
                 {"cs_threshold", tmpl.params.cs_threshold}};
  if (!tmpl.graph.warnings.empty()) j["warnings"] = tmpl.graph.warnings;
  j["seeds"] = json::array();
  for (const auto& s : seeds) {
    json sj{{"x", s.position.x()}, {"y", s.position.y()}, {"curve", s.curve}, {"s", s.s},
            {"constraint", to_string(s.constraint)}};
    if (s.center) sj["center"] = point(*s.center);
    j["seeds"].push_back(std::move(sj));
  }
  return j;
}

TemplateFile template_from_json(const json& j) {
  TemplateFile out;
  try {
    for (const auto& v : j.at("vertices")) {
      DefectSite d;
      d.position = {v.at("x").get<double>(), v.at("y").get<double>()};
      d.peak_cp = v.at("peak_cp").get<double>();
      d.cluster_cells = v.value("cells", 0);
      out.tmpl.graph.vertices.push_back(d);
    }
    const int nv = static_cast<int>(out.tmpl.graph.vertices.size());
    for (const auto& e : j.at("edges")) {
      const int a = e.at(0).get<int>(), b = e.at(1).get<int>();
      if (a < 0 || b < 0 || a >= nv || b >= nv) throw ParseError("template: edge index out of range", 0);
      out.tmpl.graph.edges.emplace_back(a, b);
    }
    for (const auto& c : j.at("curves")) {
      TemplateCurve tc;
      tc.kind = parse_curve_kind(c.at("kind").get<std::string>());
      tc.closed = c.at("closed").get<bool>();
      for (const auto& p : c.at("points")) tc.points.push_back(readPoint(p));
      if (c.contains("owner")) {
        tc.owner_vertex = c.at("owner").get<int>();
        if (*tc.owner_vertex < 0 || *tc.owner_vertex >= nv)
          throw ParseError("template: curve owner out of range", 0);
      }
      out.tmpl.curves.push_back(std::move(tc));
    }
    const auto& p = j.at("params");
    out.tmpl.params.vertex_radius = p.at("vertex_radius").get<double>();
    out.tmpl.params.spacing = p.at("spacing").get<double>();
    out.tmpl.params.ratio = p.at("ratio").get<double>();
    out.tmpl.params.cp_threshold = p.at("cp_threshold").get<double>();
    out.tmpl.params.cs_threshold = p.at("cs_threshold").get<double>();
    if (j.contains("warnings")) out.tmpl.graph.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("seeds"))
      for (const auto& s : j.at("seeds")) {
        SeedPoint sp;
        sp.position = {s.at("x").get<double>(), s.at("y").get<double>()};
        sp.curve = s.at("curve").get<int>();
        sp.s = s.at("s").get<double>();
        sp.constraint = parse_constraint(s.at("constraint").get<std::string>());
        if (s.contains("center")) sp.center = readPoint(s.at("center"));
        out.seeds.push_back(sp);
      }
  } catch (const json::exception& e) {
    throw ParseError(std::string("template: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("template: ") + e.what(), 0);
  }
  return out;
}

std::string format_polydata(const std::vector<Hyperstreamline>& lines) {
  std::size_t points = 0, nlines = 0;
  for (const auto& l : lines)
    if (!l.empty()) {
      points += l.samples.size();
      ++nlines;
    }
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "# vtk DataFile Version 3.0\nnemvis hyperstreamlines\nASCII\nDATASET POLYDATA\n");
  fmt::format_to(out, "POINTS {} double\n", points);
  for (const auto& l : lines)
    for (const auto& s : l.samples) fmt::format_to(out, "{:.17g} {:.17g} 0\n", s.position.x(), s.position.y());
  fmt::format_to(out, "LINES {} {}\n", nlines, nlines + points);
  std::size_t base = 0;
  for (const auto& l : lines) {
    if (l.empty()) continue;
    fmt::format_to(out, "{}", l.samples.size());
    for (std::size_t k = 0; k < l.samples.size(); ++k) fmt::format_to(out, " {}", base + k);
    buf.push_back('\n');
    base += l.samples.size();
  }
  fmt::format_to(out, "POINT_DATA {}\n", points);
  auto scalars = [&](const char* name, auto get) {
    fmt::format_to(out, "SCALARS {} double 1\nLOOKUP_TABLE default\n", name);
    for (const auto& l : lines)
      for (const auto& s : l.samples) fmt::format_to(out, "{:.17g}\n", get(s));
  };
  scalars("lambda_n", [](const StreamSample& s) { return s.lam_n; });
  scalars("lambda_m", [](const StreamSample& s) { return s.lam_m; });
  scalars("lambda_l", [](const StreamSample& s) { return s.lam_l; });
  scalars("half_width", [](const StreamSample& s) { return s.half_width; });
  fmt::format_to(out, "VECTORS cross_axis double\n");
  for (const auto& l : lines)
    for (const auto& s : l.samples) fmt::format_to(out, "{:.17g} {:.17g} 0\n", s.cross_axis.x(), s.cross_axis.y());
  return fmt::to_string(buf);
}

void write_polydata(const std::vector<Hyperstreamline>& lines, const std::filesystem::path& path) {
  write_atomic(path, format_polydata(lines));
}

PolyData parse_polydata(const std::string& text) {
  LineReader rd{text};
  std::string_view line;
  PolyData pd;
  auto need = [&](const char* what) {
    while (rd.next(line)) {
      auto t = tokens(line);
      if (!t.empty()) return t;
    }
    throw ParseError(fmt::format("unexpected end of file, expected {}", what), rd.number + 1);
  };
  if (!rd.next(line) || line.rfind("# vtk DataFile Version", 0) != 0)
    throw ParseError("missing polydata header", 1);
  rd.next(line);  // title
  auto t = need("ASCII");
  if (t[0] != "ASCII") throw ParseError("only ASCII polydata is supported", rd.number);
  t = need("DATASET");
  if (t.size() != 2 || t[0] != "DATASET" || t[1] != "POLYDATA") throw ParseError("expected DATASET POLYDATA", rd.number);

  std::size_t npoints = 0;
  while (rd.next(line)) {
    t = tokens(line);
    if (t.empty()) continue;
    const int at = rd.number;
    if (t[0] == "POINTS") {
      if (t.size() < 2) throw ParseError("bad POINTS line", at);
      npoints = static_cast<std::size_t>(toInt(t[1], at));
      for (std::size_t k = 0; k < npoints; ++k) {
        const auto v = need("point");
        if (v.size() != 3) throw ParseError("point must have 3 coordinates", rd.number);
        pd.points.emplace_back(toDouble(v[0], rd.number), toDouble(v[1], rd.number), toDouble(v[2], rd.number));
      }
    } else if (t[0] == "LINES") {
      if (t.size() < 3) throw ParseError("bad LINES line", at);
      const long n = toInt(t[1], at);
      for (long k = 0; k < n; ++k) {
        const auto v = need("line");
        const long count = toInt(v[0], rd.number);
        if (static_cast<long>(v.size()) != count + 1) throw ParseError("line index count mismatch", rd.number);
        std::vector<int> idx;
        for (long m = 1; m <= count; ++m) {
          const long i = toInt(v[static_cast<std::size_t>(m)], rd.number);
          if (i < 0 || static_cast<std::size_t>(i) >= npoints) throw ParseError("point index out of range", rd.number);
          idx.push_back(static_cast<int>(i));
        }
        pd.lines.push_back(std::move(idx));
      }
    } else if (t[0] == "POINT_DATA") {
      if (t.size() < 2 || static_cast<std::size_t>(toInt(t[1], at)) != npoints)
        throw ParseError("POINT_DATA count does not match POINTS", at);
    } else if (t[0] == "SCALARS") {
      if (t.size() < 3) throw ParseError("bad SCALARS line", at);
      const std::string name(t[1]);
      const auto lut = need("LOOKUP_TABLE");
      if (lut[0] != "LOOKUP_TABLE") throw ParseError("expected LOOKUP_TABLE", rd.number);
      auto& values = pd.scalars[name];
      for (std::size_t k = 0; k < npoints; ++k) values.push_back(toDouble(need("scalar")[0], rd.number));
    } else if (t[0] == "VECTORS") {
      if (t.size() < 3) throw ParseError("bad VECTORS line", at);
      auto& values = pd.vectors[std::string(t[1])];
      for (std::size_t k = 0; k < npoints; ++k) {
        const auto v = need("vector");
        if (v.size() != 3) throw ParseError("vector must have 3 components", rd.number);
        values.emplace_back(toDouble(v[0], rd.number), toDouble(v[1], rd.number), toDouble(v[2], rd.number));
      }
    } else {
      throw ParseError(fmt::format("unsupported section '{}'", t[0]), at);
    }
  }
  return pd;
}

PolyData read_polydata(const std::filesystem::path& path) { return parse_polydata(read_text(path)); }

}  // namespace nemvis
