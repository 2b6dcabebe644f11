#include "harvest/design_opt.hpp"

#include "harvest/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace harvest {

double ParamRange::at(int i, int resolution) const {
  if (resolution == 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
}

void FingerBounds::validate() const {
  for (const ParamRange* r : {&proximal, &distal, &palm}) {
    if (!(r->lo > 0.0) || !(r->lo <= r->hi) || !std::isfinite(r->hi)) {
      throw ArgumentError("finger bounds need 0 < lo <= hi");
    }
  }
}

bool cages(const FingerLinkDesign& d, double width) {
  const double wrap = d.palm_width + 2.0 * (d.proximal_length + d.distal_length);
  return wrap >= std::numbers::pi * width / 2.0 && d.palm_width <= width;
}

double caging_score(const FingerLinkDesign& design, std::span<const double> widths) {
  if (widths.empty()) throw ArgumentError("caging score needs at least one width");
  std::size_t caged = 0;
  for (double w : widths) caged += cages(design, w);
  return static_cast<double>(caged) / static_cast<double>(widths.size());
}

FingerLinkDesign optimize_finger_links(std::span<const double> widths, const FingerBounds& bounds,
                                       int resolution) {
  if (widths.empty()) throw ArgumentError("finger optimisation needs at least one width sample");
  if (resolution < 1) throw ArgumentError("grid resolution must be at least 1");
  bounds.validate();

  FingerLinkDesign best;
  best.score = -1.0;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      for (int k = 0; k < resolution; ++k) {
        FingerLinkDesign d;
        d.proximal_length = bounds.proximal.at(i, resolution);
        d.distal_length = bounds.distal.at(j, resolution);
        d.palm_width = bounds.palm.at(k, resolution);
        d.score = caging_score(d, widths);
        if (d.score > best.score ||
            (d.score == best.score && d.link_length() < best.link_length())) {
          best = d;
        }
      }
    }
  }
  return best;
}

ReachabilityResult reachability_score(const ArmModel& arm, std::span<const Pose> targets,
                                      const IkOptions& options) {
  if (targets.empty()) throw ArgumentError("reachability needs at least one target");
  ReachabilityResult r;
  r.total = targets.size();
  for (const Pose& t : targets) {
    try {
      solve_ik(arm, t, JointConfig{}, options);
      ++r.reached;
    } catch (const UnreachableError&) {
      r.failed_targets.push_back(t);
    }
  }
  r.reached_fraction = static_cast<double>(r.reached) / static_cast<double>(r.total);
  return r;
}

std::vector<double> parse_width_samples(const std::string& text) {
  std::vector<double> out;
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !(v > 0.0)) {
        throw ParseError("line " + std::to_string(number) + ": bad width '" + token + "'");
      }
      out.push_back(v);
    }
  }
  return out;
}

FingerBounds finger_bounds_from_kv(const KvDocument& doc) {
  auto range = [&](const char* key) {
    const Vec2 v = doc.get_vec2(key);
    return ParamRange{v.x(), v.y()};
  };
  FingerBounds b{range("proximal"), range("distal"), range("palm")};
  b.validate();
  return b;
}

KvDocument finger_design_to_kv(const FingerLinkDesign& d) {
  KvDocument doc;
  doc.set("proximal_length", d.proximal_length);
  doc.set("distal_length", d.distal_length);
  doc.set("palm_width", d.palm_width);
  doc.set("score", d.score);
  return doc;
}

}  // namespace harvest
