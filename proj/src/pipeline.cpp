#include "nemvis/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace nemvis {

using nlohmann::json;

double resolve_nematic_length(const FieldFile& file, const std::optional<double>& spacing) {
  if (auto it = file.metadata.find("ln"); it != file.metadata.end()) {
    double v = 0.0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size() && v > 0.0 && std::isfinite(v)) return v;
    throw std::invalid_argument("field metadata 'ln' is not a positive number: '" + s + "'");
  }
  if (spacing) return 0.5 * *spacing;
  throw std::invalid_argument("field has no 'ln' metadata; pass --ls");
}

json seed_stage(const FieldFile& file, const SeedOptions& options) {
  const double ln = resolve_nematic_length(file, options.spacing);
  SeedingParams sp;
  sp.spacing = options.spacing.value_or(2.0 * ln);
  sp.vertex_radius = options.vertex_radius.value_or(2.5 * ln);
  sp.ratio = options.ratio;
  sp.validate();

  const auto defects = detect_defects(file.field, options.cp_threshold, options.cs_threshold);
  TopologicalTemplate tmpl = build_template(file.field, build_graph(defects), sp.vertex_radius);
  tmpl.params.spacing = sp.spacing;
  tmpl.params.ratio = sp.ratio;
  tmpl.params.cp_threshold = options.cp_threshold;
  tmpl.params.cs_threshold = options.cs_threshold;
  const auto seeds = seed_template(tmpl, file.field, sp);
  return template_to_json(tmpl, seeds);
}

TraceResult trace_stage(const FieldFile& file, const TemplateFile& tf, const TraceOptions& options) {
  TraceResult result;
  Scene& scene = result.scene;
  scene.tmpl = tf.tmpl;
  scene.seeds = tf.seeds;
  if (scene.seeds.empty() && !scene.tmpl.curves.empty())
    scene.seeds = seed_template(scene.tmpl, file.field,
                                {scene.tmpl.params.spacing, scene.tmpl.params.vertex_radius, scene.tmpl.params.ratio});

  TraceParams tp = TraceParams::defaults(file.field);
  if (options.step) {
    tp.step = *options.step;
    tp.loop_eps = 0.5 * tp.step;
  }
  tp.stop_cl = options.stop_cl;
  tp.vertex_circles = vertex_circles(scene.tmpl);

  scene.streamlines = trace_all(file.field, scene.seeds, tp);
  annotate_cross_sections(file.field, scene.streamlines, scene.tmpl.params.spacing);
  for (std::size_t i = 0; i < scene.streamlines.size(); ++i)
    if (!scene.streamlines[i].diagnostic.empty())
      result.diagnostics.push_back(fmt::format("seed={} msg=\"{}\"", i, scene.streamlines[i].diagnostic));
  scene.lower = file.field.lower();
  scene.upper = file.field.upper();
  return result;
}

std::string format_template(const json& j) { return j.dump(2) + "\n"; }

json field_info(const FieldFile& file) {
  const TensorField& f = file.field;
  constexpr int bins = 10;
  std::vector<int> hl(bins, 0), hp(bins, 0), hs(bins, 0);
  auto bin = [](double v) { return std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1); };
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i) {
      if (!f.inMask(i, j)) continue;
      const auto w = westin(eigendecompose(to_modified(f.at(i, j))));
      ++hl[bin(w.c_l)];
      ++hp[bin(w.c_p)];
      ++hs[bin(w.c_s)];
    }
  json edges = json::array();
  for (int k = 0; k <= bins; ++k) edges.push_back(static_cast<double>(k) / bins);

  json defects = json::array();
  for (const auto& d : detect_defects(f))
    defects.push_back({{"x", d.position.x()}, {"y", d.position.y()}, {"peak_cp", d.peak_cp},
                       {"cells", d.cluster_cells}});
  return json{
      {"grid",
       {{"nx", f.nx()}, {"ny", f.ny()}, {"dx", f.dx()}, {"dy", f.dy()}, {"ox", f.ox()}, {"oy", f.oy()},
        {"masked_nodes", f.maskCount()}}},
      {"metadata", file.metadata},
      {"westin", {{"bin_edges", edges}, {"c_l", hl}, {"c_p", hp}, {"c_s", hs}}},
      {"defects", defects},
  };
}

namespace {

std::string quoted(std::string s) {
  std::replace(s.begin(), s.end(), '"', '\'');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return "\"" + s + "\"";
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void writeTraceOutputs(const TraceResult& r, const std::string& svg, const std::string& polydata,
                       std::ostream& err, const char* stage) {
  for (const auto& d : r.diagnostics) err << "level=warn stage=" << stage << ' ' << d << '\n';
  write_svg(r.scene, svg);
  if (!polydata.empty()) write_polydata(r.scene.streamlines, polydata);
  std::size_t traced = 0;
  for (const auto& l : r.scene.streamlines) traced += !l.empty();
  err << "level=info stage=" << stage << " seeds=" << r.scene.seeds.size() << " traced=" << traced;
  for (const auto& [cause, n] : termination_census(r.scene.streamlines)) err << ' ' << to_string(cause) << '=' << n;
  err << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperstreamline visualization of 2D nematic alignment-tensor fields", "nemvis"};
  app.require_subcommand(1);

  std::string fieldPath, outPath, reportPath, templatePath, svgPath, polyPath, caseName;
  int nx = 0, ny = 0;
  long steps = -1;
  std::uint64_t prngSeed = 1;
  double ln = 0.0, ls = 0.0, vertexRadius = 0.0, step = 0.0;
  SeedOptions seedOpt;
  TraceOptions traceOpt;

  auto* gen = app.add_subcommand("gen", "Generate a relaxed test field");
  gen->add_option("--case", caseName, "Scenario")
      ->required()
      ->check(CLI::IsMember({"uniform-circle", "two-defect-circle", "many-defect-square"}));
  gen->add_option("--nx", nx, "Grid nodes along x")->required()->check(CLI::Range(2, 32768));
  gen->add_option("--ny", ny, "Grid nodes along y")->required()->check(CLI::Range(2, 32768));
  gen->add_option("--ln", ln, "Nematic coherence length")->check(CLI::PositiveNumber);
  gen->add_option("--steps", steps, "Relaxation steps")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed-prng", prngSeed, "Random seed");
  gen->add_option("-o,--output", outPath, "Output .qtf")->required();
  gen->add_option("--report", reportPath, "Relaxation report JSON");

  auto* info = app.add_subcommand("info", "Print field statistics as JSON");
  info->add_option("field", fieldPath, "Input .qtf")->required();

  auto addSeedOptions = [&](CLI::App* sub) {
    sub->add_option("--ls", ls, "Seed spacing l_s (default 2 l_n)")->check(CLI::PositiveNumber);
    sub->add_option("--vertex-radius", vertexRadius, "Defect circle radius (default 2.5 l_n)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--ratio", seedOpt.ratio, "Edge to vertex spacing ratio")->check(CLI::Range(1.0, 1e6));
    sub->add_option("--cp-threshold", seedOpt.cp_threshold, "Planar threshold for defect cores")
        ->check(CLI::Range(0.0, 1.0));
  };
  auto addTraceOptions = [&](CLI::App* sub) {
    sub->add_option("--step", step, "Integration step")->check(CLI::PositiveNumber);
    sub->add_option("--stop-cl", traceOpt.stop_cl, "Linearity below which tracing stops")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    sub->add_option("--svg", svgPath, "Output SVG")->required();
    sub->add_option("--polydata", polyPath, "Output legacy polydata");
  };

  auto* seed = app.add_subcommand("seed", "Build the topological template and seeds");
  seed->add_option("field", fieldPath, "Input .qtf")->required();
  addSeedOptions(seed);
  seed->add_option("-o,--output", outPath, "Output template JSON")->required();

  auto* trace = app.add_subcommand("trace", "Trace hyperstreamlines from a template");
  trace->add_option("field", fieldPath, "Input .qtf")->required();
  trace->add_option("--template", templatePath, "Template JSON from 'seed'")->required();
  addTraceOptions(trace);

  auto* run = app.add_subcommand("run", "Seed and trace in one pass");
  run->add_option("field", fieldPath, "Input .qtf")->required();
  addSeedOptions(run);
  addTraceOptions(run);
  run->add_option("--template", templatePath, "Also write the template JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "level=error stage=usage msg=" << quoted(e.what()) << '\n';
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  if (*seed->get_option("--ls") || *run->get_option("--ls")) seedOpt.spacing = ls;
  if (*seed->get_option("--vertex-radius") || *run->get_option("--vertex-radius")) seedOpt.vertex_radius = vertexRadius;
  if (*trace->get_option("--step") || *run->get_option("--step")) traceOpt.step = step;

  const char* stage = app.get_subcommands().front()->get_name().c_str();
  try {
    if (*gen) {
      ScenarioOptions so;
      so.nx = nx;
      so.ny = ny;
      if (*gen->get_option("--ln")) so.nematic_length = ln;
      so.steps = steps;
      so.prng_seed = prngSeed;
      const auto g = generate_scenario(parse_scenario(caseName), so);
      std::map<std::string, std::string> meta{{"case", caseName},
                                              {"ln", fmt::format("{:.17g}", g.params.nematic_length())},
                                              {"prng_seed", std::to_string(prngSeed)},
                                              {"steps", std::to_string(g.report.steps)}};
      write_field(g.field, outPath, meta);
      if (!reportPath.empty()) write_atomic(reportPath, report_to_json(g.report).dump(2) + "\n");
      err << "level=info stage=gen case=" << caseName << " steps=" << g.report.steps
          << fmt::format(" dt={:.6g} energy={:.9g}", g.report.dt,
                         g.report.energies.empty() ? 0.0 : g.report.energies.back())
          << '\n';
    } else if (*info) {
      out << field_info(read_field(fieldPath)).dump(2) << '\n';
    } else if (*seed) {
      const FieldFile file = read_field(fieldPath);
      if (!seedOpt.spacing && !file.metadata.count("ln")) throw UsageError("field has no 'ln' metadata; pass --ls");
      const json j = seed_stage(file, seedOpt);
      for (const auto& w : j.value("warnings", std::vector<std::string>{}))
        err << "level=warn stage=seed msg=" << quoted(w) << '\n';
      write_atomic(outPath, format_template(j));
      err << "level=info stage=seed vertices=" << j["vertices"].size() << " edges=" << j["edges"].size()
          << " curves=" << j["curves"].size() << " seeds=" << j["seeds"].size() << '\n';
    } else if (*trace) {
      const FieldFile file = read_field(fieldPath);
      json j;
      try {
        j = json::parse(read_text(templatePath));
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("template: ") + e.what(), 0);
      }
      const TraceResult r = trace_stage(file, template_from_json(j), traceOpt);
      writeTraceOutputs(r, svgPath, polyPath, err, stage);
    } else if (*run) {
      const FieldFile file = read_field(fieldPath);
      if (!seedOpt.spacing && !file.metadata.count("ln")) throw UsageError("field has no 'ln' metadata; pass --ls");
      // Round-trip through the template text so that run matches seed + trace.
      const std::string text = format_template(seed_stage(file, seedOpt));
      const TraceResult r = trace_stage(file, template_from_json(json::parse(text)), traceOpt);
      if (!templatePath.empty()) write_atomic(templatePath, text);
      writeTraceOutputs(r, svgPath, polyPath, err, stage);
    }
  } catch (const UsageError& e) {
    err << "level=error stage=" << stage << " msg=" << quoted(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "level=error stage=" << stage << " msg=" << quoted(e.what()) << '\n';
    return 2;
  }
  return 0;
}

}  // namespace nemvis
