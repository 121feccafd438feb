#include "nemvis/integrator.hpp"
#include "nemvis/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nemvis {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::domain_exit: return "domain-exit";
    case Termination::degeneracy: return "degeneracy";
    case Termination::vertex_circle: return "vertex-circle";
    case Termination::max_length: return "max-length";
    case Termination::closed_loop: return "closed-loop";
  }
  return "none";
}

TraceParams TraceParams::defaults(const TensorField& field) {
  TraceParams p;
  p.step = 0.5 * std::min(field.dx(), field.dy());
  p.max_arclength = 2.0 * field.boxPerimeter();
  p.loop_eps = 0.5 * p.step;
  return p;
}

void TraceParams::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("trace: step must be > 0");
  if (!(max_arclength > 0.0)) throw std::invalid_argument("trace: max arclength must be > 0");
  if (!(stop_cl > 0.0 && stop_cl < 1.0)) throw std::invalid_argument("trace: stop_cl must lie in (0, 1)");
  if (!(loop_eps >= 0.0)) throw std::invalid_argument("trace: loop_eps must be >= 0");
}

namespace {

struct Probe {
  bool inside = false;
  bool degenerate = false;
  Vec2 dir{1.0, 0.0};
  EigenFrame frame;
};

Probe probe(const TensorSource& src, const Vec2& p, double stopCl) {
  Probe r;
  const auto q = src(p);
  if (!q) return r;
  r.inside = true;
  r.frame = eigendecompose(to_modified(*q));
  const auto d = in_plane_director(r.frame);
  if (westin(r.frame).c_l < stopCl || !d) {
    r.degenerate = true;
    return r;
  }
  r.dir = *d;
  return r;
}

Vec2 aligned(const Vec2& d, const Vec2& ref) { return d.dot(ref) < 0.0 ? Vec2(-d) : d; }

StreamSample makeSample(const Vec2& p, const EigenFrame& f, const Vec2& dir) {
  StreamSample s;
  s.position = p;
  s.lam_n = f.lam_n;
  s.lam_m = f.lam_m;
  s.lam_l = f.lam_l;
  s.cross_axis = Vec2(-dir.y(), dir.x());
  s.color = f.lam_n;
  return s;
}

bool insideCircle(const Vec2& p, const VertexCircle& c) { return (p - c.center).norm() < c.radius; }

// Smallest t in [0, 1] where p + t (q - p) meets the circle.
double circleEntry(const Vec2& p, const Vec2& q, const VertexCircle& c) {
  const Vec2 d = q - p, f = p - c.center;
  const double a = d.squaredNorm(), b = 2.0 * f.dot(d), cc = f.squaredNorm() - c.radius * c.radius;
  const double disc = std::max(0.0, b * b - 4.0 * a * cc);
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  return std::clamp(t, 0.0, 1.0);
}

double pointSegmentDistance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (a + t * d - x).norm();
}

struct HalfTrace {
  std::vector<StreamSample> samples;  // starts with the seed sample
  Termination cause = Termination::none;
};

HalfTrace integrate(const TensorSource& src, const Vec2& seed, const Probe& seedProbe, const Vec2& startDir,
                    const TraceParams& prm) {
  HalfTrace out;
  out.samples.push_back(makeSample(seed, seedProbe.frame, startDir));
  Vec2 p = seed;
  Vec2 dir = startDir;
  Probe here = seedProbe;
  double s = 0.0;

  auto inside = [&](const Vec2& x) { return src(x).has_value(); };
  // Last inside point on the straight path a -> b (a inside, b outside).
  auto clipToDomain = [&](const Vec2& a, const Vec2& b) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (inside(a + mid * (b - a)) ? lo : hi) = mid;
    }
    return Vec2(a + lo * (b - a));
  };
  auto appendEnd = [&](const Vec2& x, const Vec2& d, const Probe& fallback) {
    const Probe pr = probe(src, x, prm.stop_cl);
    StreamSample smp = makeSample(x, pr.inside ? pr.frame : fallback.frame, d);
    smp.s = s + (x - p).norm();
    out.samples.push_back(smp);
  };

  while (true) {
    const double remaining = prm.max_arclength - s;
    if (remaining <= 1e-12 * prm.max_arclength) {
      out.cause = Termination::max_length;
      break;
    }
    const double h = std::min(prm.step, remaining);
    const Vec2 k1 = aligned(here.dir, dir);
    const Vec2 pm = p + 0.5 * h * k1;
    const Probe mid = probe(src, pm, prm.stop_cl);
    if (!mid.inside) {
      appendEnd(clipToDomain(p, p + h * k1), k1, here);
      out.cause = Termination::domain_exit;
      break;
    }
    if (mid.degenerate) {
      out.cause = Termination::degeneracy;
      break;
    }
    const Vec2 k2 = aligned(mid.dir, k1);
    const Vec2 pn = p + h * k2;

    double entry = 2.0;
    for (const auto& c : prm.vertex_circles)
      if (insideCircle(pn, c)) entry = std::min(entry, circleEntry(p, pn, c));
    if (entry <= 1.0) {
      appendEnd(p + entry * (pn - p), k2, here);
      out.cause = Termination::vertex_circle;
      break;
    }

    const Probe next = probe(src, pn, prm.stop_cl);
    if (!next.inside) {
      appendEnd(clipToDomain(p, pn), k2, here);
      out.cause = Termination::domain_exit;
      break;
    }
    if (next.degenerate) {
      out.cause = Termination::degeneracy;
      break;
    }

    if (s > 4.0 * prm.step && pointSegmentDistance(seed, p, pn) < prm.loop_eps &&
        k2.dot(startDir) > prm.loop_cos) {
      appendEnd(seed, k2, here);
      out.cause = Termination::closed_loop;
      break;
    }

    StreamSample smp = makeSample(pn, next.frame, k2);
    s += h;
    smp.s = s;
    out.samples.push_back(smp);
    p = pn;
    dir = k2;
    here = next;
  }
  return out;
}

}  // namespace

Hyperstreamline trace(const TensorSource& src, const SeedPoint& seed, const TraceParams& prm) {
  prm.validate();
  Hyperstreamline line;
  const Probe start = probe(src, seed.position, prm.stop_cl);
  if (!start.inside) {
    line.diagnostic = "seed outside domain";
    return line;
  }
  if (start.degenerate) {
    line.diagnostic = "seed in degenerate region";
    return line;
  }
  for (const auto& c : prm.vertex_circles)
    if ((seed.position - c.center).norm() < c.radius - 1e-9) {
      line.diagnostic = "seed inside vertex circle";
      return line;
    }

  Vec2 d0 = start.dir;
  if (seed.constraint == DirectionConstraint::outward) {
    const Vec2 away = seed.position - seed.center.value_or(seed.position);
    if (d0.dot(away) < 0.0) d0 = -d0;
    HalfTrace fwd = integrate(src, seed.position, start, d0, prm);
    line.samples = std::move(fwd.samples);
    // Coming back to a seed that sits on its own circle means reaching that
    // circle again, not tracing a free loop.
    line.end_cause = fwd.cause == Termination::closed_loop ? Termination::vertex_circle : fwd.cause;
    return line;
  }

  HalfTrace fwd = integrate(src, seed.position, start, d0, prm);
  line.end_cause = fwd.cause;
  if (fwd.cause == Termination::closed_loop) {
    line.samples = std::move(fwd.samples);
    line.closed = true;
    return line;
  }
  HalfTrace bwd = integrate(src, seed.position, start, -d0, prm);
  line.start_cause = bwd.cause;
  line.samples.reserve(fwd.samples.size() + bwd.samples.size());
  for (auto it = bwd.samples.rbegin(); it != bwd.samples.rend(); ++it) {
    StreamSample smp = *it;
    smp.cross_axis = -smp.cross_axis;
    line.samples.push_back(smp);
  }
  line.samples.pop_back();  // seed appears in both halves
  line.samples.insert(line.samples.end(), fwd.samples.begin(), fwd.samples.end());
  double s = 0.0;
  for (std::size_t k = 0; k < line.samples.size(); ++k) {
    if (k > 0) s += (line.samples[k].position - line.samples[k - 1].position).norm();
    line.samples[k].s = s;
  }
  return line;
}

Hyperstreamline trace(const TensorField& field, const SeedPoint& seed, const TraceParams& params) {
  return trace(TensorSource([&field](const Vec2& p) { return field.sample(p); }), seed, params);
}

std::vector<Hyperstreamline> trace_all(const TensorField& field, const std::vector<SeedPoint>& seeds,
                                       const TraceParams& params) {
  params.validate();
  std::vector<Hyperstreamline> lines(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        lines[i] = trace(field, seeds[i], params);
      } catch (const std::exception& ex) {
        lines[i] = Hyperstreamline{};
        lines[i].diagnostic = ex.what();
      }
    }
  });
  return lines;
}

Hyperstreamline cross_sections(const TensorField&, const Hyperstreamline& line, double width_scale) {
  if (!(width_scale > 0.0)) throw std::invalid_argument("cross_sections: width scale must be > 0");
  Hyperstreamline out = line;
  for (auto& s : out.samples) {
    s.half_width = width_scale * s.lam_m;
    s.color = s.lam_n;
  }
  return out;
}

double scene_width_scale(const std::vector<Hyperstreamline>& lines, double spacing) {
  double maxLam = 0.0;
  for (const auto& l : lines)
    for (const auto& s : l.samples) maxLam = std::max(maxLam, s.lam_m);
  if (!(maxLam > 0.0)) return 1.0;
  return 0.3 * spacing / maxLam;
}

void annotate_cross_sections(const TensorField& field, std::vector<Hyperstreamline>& lines, double spacing) {
  const double scale = scene_width_scale(lines, spacing);
  for (auto& l : lines) l = cross_sections(field, l, scale);
}

std::map<Termination, int> termination_census(const std::vector<Hyperstreamline>& lines) {
  std::map<Termination, int> census;
  for (const auto& l : lines) {
    if (l.empty()) continue;
    if (l.start_cause != Termination::none) ++census[l.start_cause];
    if (l.end_cause != Termination::none) ++census[l.end_cause];
  }
  return census;
}

}  // namespace nemvis
