#include "harvest/errors.hpp"
#include "harvest/harvest_fsm.hpp"

#include <algorithm>
#include <cmath>

namespace harvest {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
}

struct ContactCheck {
  AttachOutcome outcome;
  bool reached_surface = false;
};

// Shared suction/finger contact model: perturb the planned contact by the
// localization error, slide along the approach axis onto the true fruit
// surface, then check leaf clearance and surface-normal alignment.
ContactCheck contact(const GraspPlan& plan, const SweetPepper& pepper, const Scene& scene,
                     double localization_stddev, double max_normal_angle, RngStream& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 e;
  e.x() = gauss(rng);
  e.y() = gauss(rng);
  e.z() = gauss(rng);
  e *= localization_stddev;

  ContactCheck out;
  out.outcome.localization_error = e;
  const Vec3 approach = plan.grasp_pose.z_axis();
  const Vec3 aim = plan.grasp_pose.position + e;
  const Ray ray{aim - 0.3 * approach, approach};
  const Ellipsoid body = pepper.body();
  const auto t = intersect(ray, body, 0.0);
  if (!t) {
    // The cup slides past the fruit's silhouette: the grazing limit of a
    // steep approach.
    out.outcome.contact_point = aim;
    out.outcome.reason = OutcomeReason::AngleTooSteep;
    return out;
  }
  const Vec3 c = ray.at(*t);
  out.outcome.contact_point = c;
  out.reached_surface = true;

  const Ray final_approach{c - kApproachClearance * approach, approach};
  for (const auto& leaf : scene.leaves) {
    if (auto tl = intersect(final_approach, leaf.disc(), 0.0); tl && *tl <= kApproachClearance) {
      out.outcome.reason = OutcomeReason::LeafBlocked;
      return out;
    }
  }
  const double cos_angle = std::clamp(body.normal_at(c).dot(-approach), -1.0, 1.0);
  if (std::acos(cos_angle) > max_normal_angle) {
    out.outcome.reason = OutcomeReason::AngleTooSteep;
    return out;
  }
  out.outcome.success = true;
  out.outcome.reason = OutcomeReason::Ok;
  return out;
}

}  // namespace

void validate(const AttachStrategy& s) {
  std::visit(overloaded{
                 [](const SuctionCup& c) {
                   require_positive(c.cup_radius, "cup_radius");
                   require_positive(c.max_normal_angle, "max_normal_angle");
                   require_positive(c.localization_stddev, "localization_stddev");
                 },
                 [](const FourFingerGripper& g) {
                   require_positive(g.aperture, "aperture");
                   require_positive(g.entanglement_radius, "entanglement_radius");
                   require_positive(g.pivot_slip_angle, "pivot_slip_angle");
                   require_positive(g.localization_stddev, "localization_stddev");
                   require_positive(g.max_normal_angle, "max_normal_angle");
                 },
             },
             s);
}

void validate(const DetachStrategy& s) {
  std::visit(overloaded{
                 [](const OscillatingBlade& b) {
                   require_positive(b.blade_half_width, "blade_half_width");
                   require_positive(b.lateral_error_stddev, "lateral_error_stddev");
                 },
                 [](const SnapPull& p) {
                   require_positive(p.clean_diameter, "clean_diameter");
                   require_positive(p.max_diameter, "max_diameter");
                   if (!(p.clean_diameter < p.max_diameter)) {
                     throw ConfigError("clean_diameter must be below max_diameter");
                   }
                 },
                 [](const WireLoop& w) {
                   require_positive(w.max_gap_diameter, "max_gap_diameter");
                   require_positive(w.max_toughness, "max_toughness");
                 },
             },
             s);
}

std::string strategy_name(const AttachStrategy& s) {
  return std::holds_alternative<SuctionCup>(s) ? "suction_cup" : "four_finger_gripper";
}

std::string strategy_name(const DetachStrategy& s) {
  return std::visit(overloaded{
                        [](const OscillatingBlade&) { return std::string("oscillating_blade"); },
                        [](const SnapPull&) { return std::string("snap_pull"); },
                        [](const WireLoop&) { return std::string("wire_loop"); },
                    },
                    s);
}

std::string to_string(OutcomeReason r) {
  switch (r) {
    case OutcomeReason::Ok:
      return "Ok";
    case OutcomeReason::AngleTooSteep:
      return "AngleTooSteep";
    case OutcomeReason::LeafBlocked:
      return "LeafBlocked";
    case OutcomeReason::Entanglement:
      return "Entanglement";
    case OutcomeReason::PivotSlip:
      return "PivotSlip";
    case OutcomeReason::PeduncleMissed:
      return "PeduncleMissed";
    case OutcomeReason::PeduncleTore:
      return "PeduncleTore";
    case OutcomeReason::TooTough:
      return "TooTough";
    case OutcomeReason::TooThick:
      return "TooThick";
  }
  return "Unknown";
}

AttachOutcome attempt_attach(const AttachStrategy& strategy, const GraspPlan& plan,
                             const Scene& scene, int pepper_id, RngStream& rng) {
  const SweetPepper& pepper = scene.pepper(pepper_id);
  return std::visit(
      overloaded{
          [&](const SuctionCup& cup) {
            return contact(plan, pepper, scene, cup.localization_stddev, cup.max_normal_angle, rng)
                .outcome;
          },
          [&](const FourFingerGripper& g) {
            ContactCheck check =
                contact(plan, pepper, scene, g.localization_stddev, g.max_normal_angle, rng);
            AttachOutcome& out = check.outcome;
            if (!out.success) return out;
            const Vec3& c = out.contact_point;
            const bool leaf_near = std::any_of(scene.leaves.begin(), scene.leaves.end(), [&](const Leaf& l) {
              return l.disc().distance(c) <= g.entanglement_radius;
            });
            const bool fruit_near =
                std::any_of(scene.peppers.begin(), scene.peppers.end(), [&](const SweetPepper& p) {
                  return p.id != pepper_id && p.body().distance(c) <= g.entanglement_radius;
                });
            if (leaf_near || fruit_near) {
              out.success = false;
              out.reason = OutcomeReason::Entanglement;
              return out;
            }
            const Vec3 radial = c - pepper.centroid;
            const double elevation = std::asin(std::clamp(
                std::abs(radial.dot(kWorldUp)) / std::max(radial.norm(), 1e-12), 0.0, 1.0));
            const double width = 2.0 * std::max(pepper.semi_axes.x(), pepper.semi_axes.y());
            if (elevation > g.pivot_slip_angle || width > g.aperture) {
              out.success = false;
              out.reason = OutcomeReason::PivotSlip;
            }
            return out;
          },
      },
      strategy);
}

DetachOutcome attempt_detach(const DetachStrategy& strategy, const GraspPlan& plan,
                             const Scene& scene, int pepper_id, RngStream& rng,
                             const Vec3& shared_error) {
  const SweetPepper& pepper = scene.pepper(pepper_id);
  const Peduncle& ped = pepper.peduncle;
  return std::visit(
      overloaded{
          [&](const OscillatingBlade& blade) {
            std::normal_distribution<double> gauss(0.0, 1.0);
            const double fresh = blade.lateral_error_stddev * gauss(rng);
            const Vec3 centre = plan.cut_pose.position + shared_error;
            const Vec3 cutting_axis = plan.cut_pose.x_axis();
            const Vec3 on_axis = ped.point_at_height((centre - ped.attach_point).dot(kWorldUp));
            DetachOutcome out;
            out.lateral_offset = (centre - on_axis).dot(cutting_axis) + fresh;
            out.success = std::abs(out.lateral_offset) <= blade.blade_half_width;
            out.reason = out.success ? OutcomeReason::Ok : OutcomeReason::PeduncleMissed;
            return out;
          },
          [&](const SnapPull& pull) {
            DetachOutcome out;
            out.success = ped.diameter <= pull.max_diameter;
            out.clean_break = out.success && ped.diameter <= pull.clean_diameter;
            out.reason = out.success ? OutcomeReason::Ok : OutcomeReason::PeduncleTore;
            return out;
          },
          [&](const WireLoop& wire) {
            DetachOutcome out;
            if (ped.diameter > wire.max_gap_diameter) {
              out.reason = OutcomeReason::TooThick;
            } else if (ped.toughness > wire.max_toughness) {
              out.reason = OutcomeReason::TooTough;
            } else {
              out.success = true;
              out.reason = OutcomeReason::Ok;
            }
            return out;
          },
      },
      strategy);
}

}  // namespace harvest
