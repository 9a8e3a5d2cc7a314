//! Three-state probabilistic controller shared by every robot.
//!
//! Robots cycle through Random Walk, Stay and Leave. The walk alternates
//! straight legs with wrapped-Cauchy turns; standing on a site may start a
//! Stay (according to the robot kind and the active variant); non-informed
//! robots in Stay leave probabilistically; leaving robots drive forward
//! until the floor turns grey again.
//!
//! State transitions follow the FSM update cadence: both the join check and
//! the probabilistic leave draw are evaluated only on ticks aligned to the
//! update period. The leave draw applies throughout Stay, during the entry
//! drive as well as at rest, so a robot that finds itself essentially alone
//! on a site abandons it within a few updates instead of settling. That
//! early bounce is what keeps sparse colonies from accumulating and lets a
//! single packed aggregate win the site competition.
//!
//! Stepping is pure: given the previous state, the sensor snapshot and the
//! trial's random stream, it returns the next state and a motor command,
//! with no other context.

pub mod variant;
pub mod wrapped_cauchy;

use crate::arena::{GroundColor, Site};
use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::robot::RobotKind;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use variant::ControllerVariant;
pub use wrapped_cauchy::{sample_turn_angle, wrapped_cauchy_pdf};

/// All behavior constants of the controller. Defaults are the canonical
/// experiment values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    /// Steepness of the baseline leave exponent.
    pub leave_gain: f64,
    /// Census change at which the baseline leave becomes certain.
    pub leave_census_span: f64,
    /// Simplified-variant leave probability with no resting neighbors.
    pub leave_prob_alone: f64,
    /// Simplified-variant exponential decay per resting neighbor.
    pub leave_neighbor_decay: f64,
    /// Wrapped-Cauchy concentration of random-walk turn angles.
    pub turn_concentration: f64,
    /// Length of a straight random-walk leg (s).
    pub straight_duration: f64,
    /// Forward motion after entering a site, before resting (s).
    pub entry_forward_duration: f64,
    /// Period of probabilistic state-machine updates (s).
    pub fsm_update_period: f64,
    /// Driving speed (m/s).
    pub linear_speed: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            leave_gain: 2.0,
            leave_census_span: 18.0,
            leave_prob_alone: 0.5,
            leave_neighbor_decay: 2.25,
            turn_concentration: 0.5,
            straight_duration: 5.0,
            entry_forward_duration: 10.0,
            fsm_update_period: 2.0,
            linear_speed: 0.1,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.turn_concentration.is_finite()
            && self.turn_concentration > 0.0
            && self.turn_concentration < 1.0)
        {
            return Err(Error::Config(format!(
                "turn_concentration must be in (0, 1), got {}",
                self.turn_concentration
            )));
        }
        if !(self.leave_prob_alone.is_finite()
            && self.leave_prob_alone > 0.0
            && self.leave_prob_alone <= 1.0)
        {
            return Err(Error::Config(format!(
                "leave_prob_alone must be in (0, 1], got {}",
                self.leave_prob_alone
            )));
        }
        if !(self.leave_neighbor_decay.is_finite() && self.leave_neighbor_decay > 0.0) {
            return Err(Error::Config(format!(
                "leave_neighbor_decay must be positive, got {}",
                self.leave_neighbor_decay
            )));
        }
        if !(self.leave_gain.is_finite() && self.leave_gain > 0.0) {
            return Err(Error::Config(format!(
                "leave_gain must be positive, got {}",
                self.leave_gain
            )));
        }
        if !(self.leave_census_span.is_finite() && self.leave_census_span >= 0.0) {
            return Err(Error::Config(format!(
                "leave_census_span must be non-negative, got {}",
                self.leave_census_span
            )));
        }
        for (name, v) in [
            ("straight_duration", self.straight_duration),
            ("entry_forward_duration", self.entry_forward_duration),
            ("fsm_update_period", self.fsm_update_period),
            ("linear_speed", self.linear_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-robot controller state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ControllerState {
    RandomWalk {
        /// Remaining time of the current straight leg (s).
        straight_time_left: f64,
        /// Set while the last command was an obstacle-avoidance turn.
        avoiding: bool,
    },
    Stay {
        /// Remaining forward motion of the site-entry phase (s); the robot
        /// rests once this reaches zero.
        entry_time_left: f64,
        /// Census recorded at the instant of joining, for variants that
        /// remember it. Set exactly once, at the join, never mutated.
        joined_census: Option<u32>,
    },
    Leave,
}

impl ControllerState {
    /// Fresh random-walk state at the start of a straight leg.
    pub fn initial(params: &ControllerParams) -> Self {
        ControllerState::RandomWalk {
            straight_time_left: params.straight_duration,
            avoiding: false,
        }
    }

    pub fn macro_state(&self) -> MacroState {
        match self {
            ControllerState::RandomWalk { .. } => MacroState::RandomWalk,
            ControllerState::Stay { .. } => MacroState::Stay,
            ControllerState::Leave => MacroState::Leave,
        }
    }

    /// Robots signal their presence during the whole Stay state, including
    /// the entry phase.
    pub fn broadcasts(&self) -> bool {
        matches!(self, ControllerState::Stay { .. })
    }

    /// Whether the robot is resting (Stay with the entry phase finished).
    pub fn is_resting(&self) -> bool {
        matches!(self, ControllerState::Stay { entry_time_left, .. } if *entry_time_left <= 0.0)
    }
}

/// Controller state without timers, for result records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroState {
    RandomWalk,
    Stay,
    Leave,
}

/// What the motors should do this tick. Turns are instantaneous heading
/// changes with no translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotorCommand {
    Forward,
    TurnTo(f64),
    Halt,
}

/// Read-only sensor view for one robot, taken from the pre-tick snapshot.
/// Implementations may compute readings lazily; nothing here consumes the
/// random stream.
pub trait Sensors {
    /// Floor color under the robot center.
    fn ground(&self) -> GroundColor;
    /// Whether the proximity sensors detect an obstacle ahead.
    fn blocked(&self) -> bool;
    /// Broadcasting neighbors within communication range, per the active
    /// variant's filter.
    fn census(&self) -> u32;
}

/// Fixed sensor readings, mainly for tests.
#[derive(Debug, Clone, Copy)]
pub struct FixedSensors {
    pub ground: GroundColor,
    pub blocked: bool,
    pub census: u32,
}

impl Sensors for FixedSensors {
    fn ground(&self) -> GroundColor {
        self.ground
    }
    fn blocked(&self) -> bool {
        self.blocked
    }
    fn census(&self) -> u32 {
        self.census
    }
}

/// Advances one robot's controller by one tick.
///
/// `heading` is the robot's current heading (used to express turn commands
/// as absolute headings). `fsm_update` is true on ticks aligned to
/// [`ControllerParams::fsm_update_period`]; probabilistic leave draws happen
/// only on those ticks.
#[allow(clippy::too_many_arguments)]
pub fn step_controller<R: Rng + ?Sized>(
    state: ControllerState,
    heading: f64,
    kind: RobotKind,
    variant: &dyn ControllerVariant,
    sensors: &dyn Sensors,
    params: &ControllerParams,
    fsm_update: bool,
    dt: f64,
    rng: &mut R,
) -> (ControllerState, MotorCommand) {
    match state {
        ControllerState::RandomWalk {
            straight_time_left, ..
        } => {
            if fsm_update {
                if let Some(site) = site_under(sensors.ground()) {
                    let joins = match kind {
                        RobotKind::NonInformed => variant.non_informed_joins(sensors.census()),
                        RobotKind::InformedBlack => site == Site::Black,
                        RobotKind::InformedWhite => site == Site::White,
                    };
                    if joins {
                        let joined_census = (kind == RobotKind::NonInformed
                            && variant.remembers_join_census())
                        .then(|| sensors.census());
                        // The join tick is the first tick of the entry phase.
                        return (
                            ControllerState::Stay {
                                entry_time_left: params.entry_forward_duration - dt,
                                joined_census,
                            },
                            MotorCommand::Forward,
                        );
                    }
                }
            }
            random_walk_behavior(straight_time_left, heading, sensors, params, dt, rng)
        }

        ControllerState::Stay {
            entry_time_left,
            joined_census,
        } => {
            let entering = entry_time_left > 0.0;
            if entering && sensors.ground() == GroundColor::Grey {
                // The forward entry motion carried the robot off the site;
                // resting must happen strictly on a site.
                return random_walk_behavior(
                    params.straight_duration,
                    heading,
                    sensors,
                    params,
                    dt,
                    rng,
                );
            }
            // Informed robots never reconsider; non-informed ones draw a
            // leave decision at each FSM update, whether still driving in
            // or already at rest. A robot entering an empty patch of site
            // therefore tends to bounce straight back out.
            if kind == RobotKind::NonInformed && fsm_update {
                let p = variant.leave_probability(sensors.census(), joined_census, params);
                let draw: f64 = rng.gen();
                if draw < p {
                    return leave_behavior(heading, sensors, rng);
                }
            }
            if entering {
                // Keep driving inward; the executor stops the motion at
                // physical contact with robots already there.
                (
                    ControllerState::Stay {
                        entry_time_left: entry_time_left - dt,
                        joined_census,
                    },
                    MotorCommand::Forward,
                )
            } else {
                (state, MotorCommand::Halt)
            }
        }

        ControllerState::Leave => {
            if sensors.ground() == GroundColor::Grey {
                // Off the site: resume the random walk.
                return random_walk_behavior(
                    params.straight_duration,
                    heading,
                    sensors,
                    params,
                    dt,
                    rng,
                );
            }
            leave_behavior(heading, sensors, rng)
        }
    }
}

fn site_under(ground: GroundColor) -> Option<Site> {
    match ground {
        GroundColor::Black => Some(Site::Black),
        GroundColor::White => Some(Site::White),
        GroundColor::Grey => None,
    }
}

/// Straight-leg / turn / obstacle-avoidance cycle of the random walk. The
/// straight timer restarts after every turn, including avoidance turns.
fn random_walk_behavior<R: Rng + ?Sized>(
    straight_time_left: f64,
    heading: f64,
    sensors: &dyn Sensors,
    params: &ControllerParams,
    dt: f64,
    rng: &mut R,
) -> (ControllerState, MotorCommand) {
    if sensors.blocked() {
        let new_heading = wrap_angle(heading + rng.gen_range(-PI..PI));
        return (
            ControllerState::RandomWalk {
                straight_time_left: params.straight_duration,
                avoiding: true,
            },
            MotorCommand::TurnTo(new_heading),
        );
    }
    if straight_time_left <= 0.0 {
        let turn = sample_turn_angle(0.0, params.turn_concentration, rng);
        return (
            ControllerState::RandomWalk {
                straight_time_left: params.straight_duration,
                avoiding: false,
            },
            MotorCommand::TurnTo(wrap_angle(heading + turn)),
        );
    }
    (
        ControllerState::RandomWalk {
            straight_time_left: straight_time_left - dt,
            avoiding: false,
        },
        MotorCommand::Forward,
    )
}

/// Forward motion out of a site with the same stop-and-turn obstacle rule
/// as the random walk.
fn leave_behavior<R: Rng + ?Sized>(
    heading: f64,
    sensors: &dyn Sensors,
    rng: &mut R,
) -> (ControllerState, MotorCommand) {
    if sensors.blocked() {
        let new_heading = wrap_angle(heading + rng.gen_range(-PI..PI));
        (ControllerState::Leave, MotorCommand::TurnTo(new_heading))
    } else {
        (ControllerState::Leave, MotorCommand::Forward)
    }
}

#[cfg(test)]
mod tests {
    use super::variant::variant_by_name;
    use super::*;
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DT: f64 = 0.1;

    fn params() -> ControllerParams {
        ControllerParams::default()
    }

    fn rw() -> ControllerState {
        ControllerState::initial(&params())
    }

    fn sensors(ground: GroundColor, blocked: bool, census: u32) -> FixedSensors {
        FixedSensors {
            ground,
            blocked,
            census,
        }
    }

    /// StepRng whose first standard f64 draw is (almost exactly) `u`.
    fn rng_with_first_uniform(u: f64) -> StepRng {
        let mantissa = (u * (1u64 << 53) as f64) as u64;
        StepRng::new(mantissa << 11, 0)
    }

    fn step(
        state: ControllerState,
        kind: RobotKind,
        variant_name: &str,
        s: FixedSensors,
        fsm_update: bool,
        rng: &mut impl Rng,
    ) -> (ControllerState, MotorCommand) {
        step_controller(
            state,
            0.0,
            kind,
            variant_by_name(variant_name).unwrap(),
            &s,
            &params(),
            fsm_update,
            DT,
            rng,
        )
    }

    #[test]
    fn informed_joins_preferred_site_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (state, cmd) = step(
            rw(),
            RobotKind::InformedBlack,
            "baseline",
            sensors(GroundColor::Black, false, 0),
            true,
            &mut rng,
        );
        assert!(matches!(state, ControllerState::Stay { .. }));
        assert_eq!(cmd, MotorCommand::Forward);

        let (state, _) = step(
            rw(),
            RobotKind::InformedBlack,
            "baseline",
            sensors(GroundColor::White, false, 5),
            true,
            &mut rng,
        );
        assert!(matches!(state, ControllerState::RandomWalk { .. }));
    }

    #[test]
    fn joins_happen_only_on_fsm_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (state, _) = step(
            rw(),
            RobotKind::InformedBlack,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            false,
            &mut rng,
        );
        assert!(matches!(state, ControllerState::RandomWalk { .. }));
    }

    #[test]
    fn non_informed_join_rules_differ_by_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Simplified: joins any site unconditionally.
        let (state, _) = step(
            rw(),
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::White, false, 0),
            true,
            &mut rng,
        );
        assert!(matches!(
            state,
            ControllerState::Stay {
                joined_census: None,
                ..
            }
        ));

        // Baseline: needs at least one informed robot in range.
        let (state, _) = step(
            rw(),
            RobotKind::NonInformed,
            "baseline",
            sensors(GroundColor::White, false, 0),
            true,
            &mut rng,
        );
        assert!(matches!(state, ControllerState::RandomWalk { .. }));

        let (state, _) = step(
            rw(),
            RobotKind::NonInformed,
            "baseline",
            sensors(GroundColor::White, false, 2),
            true,
            &mut rng,
        );
        // The join census is captured from the same reading that satisfied
        // the guard.
        assert!(matches!(
            state,
            ControllerState::Stay {
                joined_census: Some(2),
                ..
            }
        ));
    }

    #[test]
    fn entry_phase_moves_forward_and_counts_down() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let state = ControllerState::Stay {
            entry_time_left: 3.0,
            joined_census: None,
        };
        let (next, cmd) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            false,
            &mut rng,
        );
        assert_eq!(cmd, MotorCommand::Forward);
        match next {
            ControllerState::Stay {
                entry_time_left, ..
            } => assert!((entry_time_left - 2.9).abs() < 1e-12),
            other => panic!("unexpected state {other:?}"),
        }
    }

    #[test]
    fn entry_phase_reverts_on_grey_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let state = ControllerState::Stay {
            entry_time_left: 3.0,
            joined_census: None,
        };
        let (next, cmd) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Grey, false, 0),
            false,
            &mut rng,
        );
        assert!(matches!(next, ControllerState::RandomWalk { .. }));
        assert_eq!(cmd, MotorCommand::Forward);
    }

    #[test]
    fn lone_entrant_bounces_at_an_update() {
        // Still in the entry phase, nobody around: p = 0.5, a draw of 0.49
        // abandons the site.
        let state = ControllerState::Stay {
            entry_time_left: 6.0,
            joined_census: None,
        };
        let mut rng = rng_with_first_uniform(0.49);
        let (next, cmd) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            true,
            &mut rng,
        );
        assert_eq!(next, ControllerState::Leave);
        assert_eq!(cmd, MotorCommand::Forward);

        // A crowd nearby makes the same draw survive the update.
        let mut rng = rng_with_first_uniform(0.49);
        let (next, _) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Black, false, 3),
            true,
            &mut rng,
        );
        assert!(matches!(next, ControllerState::Stay { .. }));
    }

    #[test]
    fn resting_robot_halts_between_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let state = ControllerState::Stay {
            entry_time_left: 0.0,
            joined_census: None,
        };
        let (next, cmd) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            false,
            &mut rng,
        );
        assert_eq!(next, state);
        assert_eq!(cmd, MotorCommand::Halt);
    }

    #[test]
    fn leave_draw_below_probability_leaves() {
        // Alone on the site under the simplified rule: p = 0.5.
        let state = ControllerState::Stay {
            entry_time_left: 0.0,
            joined_census: None,
        };
        let mut rng = rng_with_first_uniform(0.49);
        let (next, cmd) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            true,
            &mut rng,
        );
        assert_eq!(next, ControllerState::Leave);
        assert_eq!(cmd, MotorCommand::Forward);

        let mut rng = rng_with_first_uniform(0.51);
        let (next, _) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            true,
            &mut rng,
        );
        assert_eq!(next, state);
    }

    #[test]
    fn baseline_leave_uses_stored_join_census() {
        // n == x makes leaving essentially impossible; a draw of 0.4 stays.
        let state = ControllerState::Stay {
            entry_time_left: 0.0,
            joined_census: Some(3),
        };
        let mut rng = rng_with_first_uniform(0.4);
        let (next, _) = step(
            state,
            RobotKind::NonInformed,
            "baseline",
            sensors(GroundColor::Black, false, 3),
            true,
            &mut rng,
        );
        assert_eq!(next, state);

        // Census dropped to zero: leave is certain.
        let mut rng = rng_with_first_uniform(0.999);
        let (next, _) = step(
            state,
            RobotKind::NonInformed,
            "baseline",
            sensors(GroundColor::Black, false, 0),
            true,
            &mut rng,
        );
        assert_eq!(next, ControllerState::Leave);
    }

    #[test]
    fn informed_robot_never_draws_a_leave() {
        // An empty StepRng draw would panic the test below if consumed; use
        // a zero-increment rng and verify the state is untouched.
        let state = ControllerState::Stay {
            entry_time_left: 0.0,
            joined_census: None,
        };
        let mut rng = rng_with_first_uniform(0.0);
        let (next, cmd) = step(
            state,
            RobotKind::InformedBlack,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            true,
            &mut rng,
        );
        assert_eq!(next, state);
        assert_eq!(cmd, MotorCommand::Halt);
    }

    #[test]
    fn blocked_random_walker_turns_in_place() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let state = ControllerState::RandomWalk {
            straight_time_left: 2.2,
            avoiding: false,
        };
        let (next, cmd) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Grey, true, 0),
            false,
            &mut rng,
        );
        match next {
            ControllerState::RandomWalk {
                straight_time_left,
                avoiding,
            } => {
                assert!(avoiding);
                // Timer restarts after the avoidance manoeuvre.
                assert_eq!(straight_time_left, params().straight_duration);
            }
            other => panic!("unexpected state {other:?}"),
        }
        match cmd {
            MotorCommand::TurnTo(h) => assert!((-PI..PI).contains(&h)),
            other => panic!("expected a turn, got {other:?}"),
        }
    }

    #[test]
    fn straight_leg_expiry_turns_and_restarts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let state = ControllerState::RandomWalk {
            straight_time_left: 0.0,
            avoiding: false,
        };
        let (next, cmd) = step(
            state,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Grey, false, 0),
            false,
            &mut rng,
        );
        assert!(matches!(cmd, MotorCommand::TurnTo(_)));
        assert!(matches!(
            next,
            ControllerState::RandomWalk {
                avoiding: false,
                ..
            }
        ));
    }

    #[test]
    fn leaving_robot_returns_to_walk_on_grey() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (next, cmd) = step(
            ControllerState::Leave,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Grey, false, 0),
            false,
            &mut rng,
        );
        assert!(matches!(next, ControllerState::RandomWalk { .. }));
        assert_eq!(cmd, MotorCommand::Forward);

        // Still on the site: keep driving out.
        let (next, cmd) = step(
            ControllerState::Leave,
            RobotKind::NonInformed,
            "simplified",
            sensors(GroundColor::Black, false, 0),
            false,
            &mut rng,
        );
        assert_eq!(next, ControllerState::Leave);
        assert_eq!(cmd, MotorCommand::Forward);
    }

    #[test]
    fn params_validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.turn_concentration = 1.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.leave_prob_alone = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.fsm_update_period = -2.0;
        assert!(p.validate().is_err());
    }
}
