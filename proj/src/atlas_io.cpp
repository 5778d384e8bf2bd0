#include <fstream>
#include <sstream>

#include "cavity/atlas.hpp"
#include "cavity/error.hpp"
#include "yaml_util.hpp"

namespace cavity {

namespace {

using namespace yamlx;

Interval interval(const std::string& src, const YAML::Node& n, const std::string& key) {
  const auto v = doubles(src, n, key, 2);
  return {v[0], v[1]};
}

}  // namespace

ProfileFunction yamlx::parse_profile(const std::string& src, const YAML::Node& n) {
  const auto kind_name = get<std::string>(src, n, "kind");
  const auto kind = profile_kind_from_string(kind_name);
  if (!kind) parse_fail(src, n["kind"], "unknown profile kind '" + kind_name + "'");
  ProfileFunction g;
  try {
    switch (*kind) {
      case ProfileKind::constant:
        g = ProfileFunction::constant(get<double>(src, n, "c"));
        break;
      case ProfileKind::oscillatory: {
        CosineCell cell;
        if (n["cell"].IsDefined()) {
          cell.offset = get_or(src, n["cell"], "offset", 0.0);
          cell.amplitude = get_or(src, n["cell"], "amplitude", 1.0);
        }
        Cutoff cut;
        if (n["cutoff"].IsDefined()) {
          const YAML::Node c = n["cutoff"];
          const auto ck = get<std::string>(src, c, "kind");
          if (ck == "one") {
            cut.kind = Cutoff::Kind::one;
          } else if (ck == "bump") {
            cut.kind = Cutoff::Kind::bump;
            cut.center = vec2(src, require(src, c, "center"), "center");
            cut.radius = get<double>(src, c, "radius");
          } else {
            parse_fail(src, c["kind"], "cutoff kind must be 'one' or 'bump'");
          }
        }
        g = ProfileFunction::oscillatory(get<double>(src, n, "alpha"), get<double>(src, n, "eps"), cell, cut);
        break;
      }
      case ProfileKind::hoelder_power: {
        Vec2 center = Vec2::Zero();
        if (n["center"].IsDefined()) center = vec2(src, n["center"], "center");
        g = ProfileFunction::hoelder_power(get<double>(src, n, "coefficient"), get<double>(src, n, "power"), center);
        break;
      }
      case ProfileKind::log_counterexample:
        g = ProfileFunction::log_counterexample(get_or(src, n, "cutoff", 0.36787944117144233));
        break;
      case ProfileKind::tabulated: {
        const YAML::Node r = require(src, n, "region");
        if (!r.IsSequence() || r.size() != 2) parse_fail(src, r, "'region' must be [[x0, x1], [y0, y1]]");
        const Rect region{interval(src, r[0], "region"), interval(src, r[1], "region")};
        g = ProfileFunction::tabulated(region, get<int>(src, n, "nx"), get<int>(src, n, "ny"),
                                       doubles(src, require(src, n, "values"), "values"));
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::range_error) range_fail(src, n, e.what());
    throw;
  }
  const double scale = get_or(src, n, "scale", 1.0);
  const double offset = get_or(src, n, "offset", 0.0);
  if (scale != 1.0) g = g.scaled(scale);
  if (offset != 0.0) g = g.shifted(offset);
  return g;
}

void yamlx::emit_profile(YAML::Emitter& out, const ProfileFunction& g) {
  out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << std::string(to_string(g.kind()));
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ProfileFunction::Constant>) {
          out << YAML::Key << "c" << YAML::Value << p.c;
        } else if constexpr (std::is_same_v<P, ProfileFunction::Oscillatory>) {
          out << YAML::Key << "alpha" << YAML::Value << p.alpha;
          out << YAML::Key << "eps" << YAML::Value << p.eps;
          out << YAML::Key << "cell" << YAML::Value << YAML::Flow << YAML::BeginMap;
          out << YAML::Key << "offset" << YAML::Value << p.cell.offset;
          out << YAML::Key << "amplitude" << YAML::Value << p.cell.amplitude << YAML::EndMap;
          out << YAML::Key << "cutoff" << YAML::Value << YAML::Flow << YAML::BeginMap;
          if (p.cutoff.kind == Cutoff::Kind::one) {
            out << YAML::Key << "kind" << YAML::Value << "one";
          } else {
            out << YAML::Key << "kind" << YAML::Value << "bump";
            out << YAML::Key << "center" << YAML::Value;
            emit_seq(out, {p.cutoff.center[0], p.cutoff.center[1]});
            out << YAML::Key << "radius" << YAML::Value << p.cutoff.radius;
          }
          out << YAML::EndMap;
        } else if constexpr (std::is_same_v<P, ProfileFunction::HoelderPower>) {
          out << YAML::Key << "coefficient" << YAML::Value << p.coefficient;
          out << YAML::Key << "power" << YAML::Value << p.power;
          out << YAML::Key << "center" << YAML::Value;
          emit_seq(out, {p.center[0], p.center[1]});
        } else if constexpr (std::is_same_v<P, ProfileFunction::LogCounterexample>) {
          out << YAML::Key << "cutoff" << YAML::Value << p.cutoff;
        } else {
          out << YAML::Key << "region" << YAML::Value << YAML::Flow << YAML::BeginSeq;
          emit_seq(out, {p.region.x.lo, p.region.x.hi});
          emit_seq(out, {p.region.y.lo, p.region.y.hi});
          out << YAML::EndSeq;
          out << YAML::Key << "nx" << YAML::Value << p.nx;
          out << YAML::Key << "ny" << YAML::Value << p.ny;
          out << YAML::Key << "values" << YAML::Value;
          emit_seq(out, p.values);
        }
      },
      g.params());
  if (g.scale() != 1.0) out << YAML::Key << "scale" << YAML::Value << g.scale();
  if (g.offset() != 0.0) out << YAML::Key << "offset" << YAML::Value << g.offset();
  out << YAML::EndMap;
}

AtlasDomain parse_domain(const std::string& text, const std::string& src) {
  const YAML::Node root = load(text, src);
  if (!root.IsMap()) parse_fail(src, root, "domain file must be a mapping");
  AtlasDomain dom;
  const YAML::Node atlas = require(src, root, "atlas");
  dom.atlas.rho = get<double>(src, atlas, "rho");
  const YAML::Node charts = require(src, atlas, "charts");
  if (!charts.IsSequence() || charts.size() == 0) parse_fail(src, charts, "'charts' must be a non-empty list");

  int boundary_charts = 0;
  for (const auto& cn : charts) {
    AtlasChart c;
    const YAML::Node b = require(src, cn, "bounds");
    if (!b.IsSequence() || b.size() != 3) parse_fail(src, b, "'bounds' must list three intervals");
    for (int i = 0; i < 3; ++i) c.bounds[i] = interval(src, b[i], "bounds");
    if (cn["rotation"].IsDefined()) {
      const YAML::Node r = cn["rotation"];
      c.rotation = axis_angle_rotation(vec3(src, require(src, r, "axis"), "axis"), get<double>(src, r, "angle"));
    }
    const YAML::Node prof = cn["profile"];
    c.touches_boundary = prof.IsDefined();
    if (c.touches_boundary) {
      if (boundary_charts != static_cast<int>(dom.atlas.charts.size()))
        parse_fail(src, cn, "boundary charts (those with a profile) must come first");
      dom.profiles.push_back(parse_profile(src, prof));
      ++boundary_charts;
    }
    try {
      c.validate();
    } catch (const Error& e) {
      range_fail(src, cn, e.what());
    }
    dom.atlas.charts.push_back(c);
  }
  dom.atlas.s_prime = boundary_charts;

  if (root["regularity"].IsDefined()) {
    const YAML::Node r = root["regularity"];
    dom.regularity.k = get_or(src, r, "k", 1);
    dom.regularity.gamma = get_or(src, r, "gamma", 1.0);
    dom.regularity.M = get_or(src, r, "M", 0.0);
  }
  try {
    dom.validate();
  } catch (const Error& e) {
    if (e.code() == Errc::range_error) range_fail(src, atlas, e.what());
    throw;
  }
  return dom;
}

AtlasDomain load_domain(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open domain file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_domain(ss.str(), path);
}

std::string emit_domain(const AtlasDomain& dom) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "atlas" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "rho" << YAML::Value << dom.atlas.rho;
  out << YAML::Key << "charts" << YAML::Value << YAML::BeginSeq;
  for (int j = 0; j < dom.atlas.s(); ++j) {
    const AtlasChart& c = dom.atlas.charts[j];
    out << YAML::BeginMap;
    out << YAML::Key << "bounds" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& b : c.bounds) emit_seq(out, {b.lo, b.hi});
    out << YAML::EndSeq;
    const Eigen::AngleAxisd aa(c.rotation);
    out << YAML::Key << "rotation" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "axis" << YAML::Value;
    emit_seq(out, {aa.axis()[0], aa.axis()[1], aa.axis()[2]});
    out << YAML::Key << "angle" << YAML::Value << aa.angle() << YAML::EndMap;
    if (j < dom.atlas.s_prime) {
      out << YAML::Key << "profile" << YAML::Value;
      emit_profile(out, dom.profiles[j]);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "regularity" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "k" << YAML::Value << dom.regularity.k;
  out << YAML::Key << "gamma" << YAML::Value << dom.regularity.gamma;
  out << YAML::Key << "M" << YAML::Value << dom.regularity.M << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace cavity
