//! Robot embodiment: pose, kinematics, proximity detection and the
//! range-and-bearing neighbor census.
//!
//! The queries in this module are straightforward scans over a robot
//! snapshot. The trial executor accelerates the same predicates with a
//! spatial grid; these functions are the reference definitions it is tested
//! against.

use crate::arena::ArenaSpec;
use crate::controller::ControllerState;
use crate::geometry::{wrap_angle, Vec2};
use serde::{Deserialize, Serialize};

/// Index of a robot within a trial.
pub type RobotId = usize;

/// Position and heading of one robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub position: Vec2,
    /// Heading in radians, wrapped to `[-pi, pi)`.
    pub heading: f64,
}

impl RobotPose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        RobotPose {
            position,
            heading: wrap_angle(heading),
        }
    }
}

/// Behavioral kind of a robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    NonInformed,
    InformedBlack,
    InformedWhite,
}

impl RobotKind {
    pub fn is_informed(self) -> bool {
        matches!(self, RobotKind::InformedBlack | RobotKind::InformedWhite)
    }
}

/// Physical footprint and sensing ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BodySpec {
    /// Body radius (m).
    pub body_radius: f64,
    /// Forward reach of the proximity sensors (m).
    pub proximity_range: f64,
    /// Range of the presence-signalling channel (m).
    pub comm_range: f64,
}

impl Default for BodySpec {
    fn default() -> Self {
        BodySpec {
            body_radius: 0.085,
            proximity_range: 0.1,
            comm_range: 0.8,
        }
    }
}

impl BodySpec {
    pub fn validate(&self) -> crate::error::Result<()> {
        for (name, v) in [
            ("body_radius", self.body_radius),
            ("proximity_range", self.proximity_range),
            ("comm_range", self.comm_range),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::error::Error::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Detection radius around the proximity probe point: another robot is
    /// an obstacle when its center is closer than this to the probe.
    pub fn proximity_detection_radius(&self) -> f64 {
        2.0 * self.body_radius + self.proximity_range
    }
}

/// One robot's full per-tick record: what the snapshot carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub kind: RobotKind,
    pub pose: RobotPose,
    pub state: ControllerState,
}

/// Which broadcasting neighbors a census counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CensusFilter {
    /// Only informed robots in Stay (the baseline channel, where only
    /// informed robots emit).
    RestingInformedOnly,
    /// Every robot in Stay, informed or not.
    RestingAny,
}

impl CensusFilter {
    pub fn admits(self, kind: RobotKind) -> bool {
        match self {
            CensusFilter::RestingInformedOnly => kind.is_informed(),
            CensusFilter::RestingAny => true,
        }
    }
}

/// Advances a pose along its heading at `linear_speed` for `dt` seconds.
/// The heading is unchanged; wall and collision handling is the trial
/// executor's job.
pub fn integrate_motion(pose: RobotPose, linear_speed: f64, dt: f64) -> RobotPose {
    debug_assert!(dt > 0.0);
    RobotPose {
        position: pose.position + Vec2::from_angle(pose.heading) * (linear_speed * dt),
        heading: pose.heading,
    }
}

/// Forward-looking obstacle test: true when another robot center lies
/// within the detection radius of a probe point one proximity-range ahead,
/// or when the wall (offset by the body radius) is within proximity range
/// along the heading.
pub fn proximity_blocked(
    me: RobotId,
    records: &[RobotRecord],
    arena: &ArenaSpec,
    body: &BodySpec,
) -> bool {
    let pose = records[me].pose;
    let probe = pose.position + Vec2::from_angle(pose.heading) * body.proximity_range;
    // Inside-to-outside crossing of the effective wall circle is monotone,
    // so testing the probe point is equivalent to testing the whole segment.
    if probe.norm() >= arena.arena_radius() - body.body_radius {
        return true;
    }
    let detect_sq = body.proximity_detection_radius().powi(2);
    records
        .iter()
        .enumerate()
        .any(|(id, other)| id != me && other.pose.position.dist_sq(probe) < detect_sq)
}

/// Counts broadcasting neighbors within communication range that pass the
/// filter and are in line of sight. The querying robot never counts itself.
///
/// The presence signal is infrared-like: a third robot body lying on the
/// straight path between sender and receiver blocks it. Occlusion is what
/// keeps the perceived neighborhood of a robot inside a packed aggregate at
/// ring-of-contact scale instead of growing with the crowd depth; the leave
/// probabilities are calibrated against counts of that scale.
pub fn neighbor_census(
    me: RobotId,
    records: &[RobotRecord],
    filter: CensusFilter,
    comm_range: f64,
    occluder_radius: f64,
) -> u32 {
    let position = records[me].pose.position;
    let range_sq = comm_range * comm_range;
    records
        .iter()
        .enumerate()
        .filter(|(id, other)| {
            *id != me
                && other.state.broadcasts()
                && filter.admits(other.kind)
                && other.pose.position.dist_sq(position) < range_sq
                && line_of_sight(me, *id, other.pose.position, records, occluder_radius)
        })
        .count() as u32
}

/// Whether robots `a` and `b` can exchange presence signals: within
/// communication range of each other and with no third robot body crossing
/// the straight path between them. Symmetric in `a` and `b`.
pub fn can_communicate(
    a: RobotId,
    b: RobotId,
    records: &[RobotRecord],
    comm_range: f64,
    occluder_radius: f64,
) -> bool {
    let from = records[a].pose.position;
    let to = records[b].pose.position;
    from.dist_sq(to) < comm_range * comm_range && line_of_sight(a, b, to, records, occluder_radius)
}

/// Whether the segment between robot `a` (at `from = records[a]`) and
/// position `to` of robot `b` is clear of every other robot body.
fn line_of_sight(
    a: RobotId,
    b: RobotId,
    to: Vec2,
    records: &[RobotRecord],
    occluder_radius: f64,
) -> bool {
    let from = records[a].pose.position;
    records.iter().enumerate().all(|(id, other)| {
        id == a || id == b || !occludes(from, to, other.pose.position, occluder_radius)
    })
}

/// Whether a body of the given radius at `center` intersects the segment
/// `from`..`to`.
pub fn occludes(from: Vec2, to: Vec2, center: Vec2, radius: f64) -> bool {
    let segment = to - from;
    let length_sq = segment.norm_sq();
    let t = if length_sq > 0.0 {
        ((center - from).x * segment.x + (center - from).y * segment.y) / length_sq
    } else {
        0.0
    };
    let closest = from + segment * t.clamp(0.0, 1.0);
    center.dist_sq(closest) < radius * radius
}
