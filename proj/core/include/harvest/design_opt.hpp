#pragma once

#include "harvest/arm.hpp"
#include "harvest/geometry.hpp"
#include "harvest/kv_text.hpp"

#include <span>
#include <string>
#include <vector>

namespace harvest {

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;

  /// Value of grid point i out of `resolution` evenly spaced points
  /// (the midpoint when resolution is 1).
  double at(int i, int resolution) const;
};

struct FingerBounds {
  ParamRange proximal;
  ParamRange distal;
  ParamRange palm;

  /// Throws ArgumentError unless 0 < lo <= hi for every range.
  void validate() const;
};

struct FingerLinkDesign {
  double proximal_length = 0.0;
  double distal_length = 0.0;
  double palm_width = 0.0;
  double score = 0.0;

  double link_length() const { return proximal_length + distal_length; }
};

/// Planar caging test for a fruit of width w:
///   palm + 2 (proximal + distal) >= pi w / 2   and   palm <= w.
bool cages(const FingerLinkDesign& design, double width);

/// Fraction of widths caged by the design.
double caging_score(const FingerLinkDesign& design, std::span<const double> widths);

/// Exhaustive search over resolution^3 grid points. Returns the best score;
/// ties go to the smallest proximal + distal, then to the first grid point
/// in (proximal, distal, palm) order. Throws ArgumentError for no samples,
/// invalid bounds or resolution < 1.
FingerLinkDesign optimize_finger_links(std::span<const double> widths, const FingerBounds& bounds,
                                       int resolution);

struct ReachabilityResult {
  double reached_fraction = 0.0;
  std::size_t reached = 0;
  std::size_t total = 0;
  std::vector<Pose> failed_targets;
};

/// Runs IK from the zero (home) configuration for every target. Throws
/// ArgumentError for an empty target list.
ReachabilityResult reachability_score(const ArmModel& arm, std::span<const Pose> targets,
                                      const IkOptions& options = {});

/// Widths file: one number per line (metres); blank lines and `#` comments
/// are ignored.
std::vector<double> parse_width_samples(const std::string& text);
/// Bounds document: `proximal`, `distal`, `palm` each a `lo hi` pair.
FingerBounds finger_bounds_from_kv(const KvDocument& doc);
KvDocument finger_design_to_kv(const FingerLinkDesign& design);

}  // namespace harvest
