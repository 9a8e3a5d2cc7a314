//! Fixed-timestep trial executor: placement, per-tick sensing / stepping /
//! motion, collision handling and termination. A trial is a pure function
//! of its configuration, including the seed.
//!
//! Each tick snapshots all poses and controller states first, computes
//! every robot's sensors from that snapshot, steps every controller (in
//! robot-index order, drawing from the single trial stream), and only then
//! applies motor commands. Sensor readings therefore never observe this
//! tick's mutations, and per-tick results do not depend on iteration order.
//!
//! Collisions are handled by move cancellation: a forward step that would
//! bring a robot closer than one body diameter (plus one tick's worth of
//! travel, to cover simultaneous approaches) to another robot's snapshot
//! position, or past the wall, leaves the robot in place for the tick.

use crate::arena::{ArenaSpec, GroundColor, Site};
use crate::controller::variant::{variant_by_name, variant_names, ControllerVariant};
use crate::controller::{
    step_controller, ControllerParams, ControllerState, MacroState, MotorCommand, Sensors,
};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::robot::{
    integrate_motion, occludes, BodySpec, CensusFilter, RobotKind, RobotPose, RobotRecord,
};
use crate::spatial::SpatialGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::f64::consts::PI;

/// Interval between occupancy time-series samples (s).
const TIMESERIES_PERIOD: f64 = 100.0;
/// Placement attempts per robot before giving up on an overcrowded arena.
const PLACEMENT_ATTEMPTS: u32 = 10_000;

/// One seeded experiment definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub swarm_size: u32,
    /// Proportion of informed robots in the swarm.
    pub rho_informed: f64,
    /// Proportion of black-preferring robots among the informed ones.
    pub rho_black: f64,
    /// Controller variant registry name.
    pub variant: String,
    pub arena: ArenaSpec,
    #[serde(default)]
    pub body: BodySpec,
    #[serde(default)]
    pub controller: ControllerParams,
    /// Trial length (s).
    pub duration: f64,
    /// Simulation timestep (s). Must divide the FSM update period, the
    /// straight-leg duration and the entry duration exactly.
    pub tick_dt: f64,
    pub seed: u64,
    #[serde(default)]
    pub record_timeseries: bool,
}

impl TrialConfig {
    /// Canonical configuration for a preset swarm size (50 or 100) with the
    /// default body, controller, duration and timestep.
    pub fn preset(
        swarm_size: u32,
        variant: &str,
        rho_informed: f64,
        rho_black: f64,
        seed: u64,
    ) -> Result<TrialConfig> {
        let config = TrialConfig {
            swarm_size,
            rho_informed,
            rho_black,
            variant: variant.to_string(),
            arena: ArenaSpec::preset(swarm_size)?,
            body: BodySpec::default(),
            controller: ControllerParams::default(),
            duration: 30_000.0,
            tick_dt: 0.1,
            seed,
            record_timeseries: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// Number of robots of each kind: informed-for-black, informed-for-white
    /// and non-informed. Rounds the informed count first, then the black
    /// share of it.
    pub fn kind_counts(&self) -> (u32, u32, u32) {
        let informed = (self.swarm_size as f64 * self.rho_informed).round() as u32;
        let informed = informed.min(self.swarm_size);
        let black = ((informed as f64 * self.rho_black).round() as u32).min(informed);
        (black, informed - black, self.swarm_size - informed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 {
            return Err(Error::Config("swarm_size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rho_informed) || !self.rho_informed.is_finite() {
            return Err(Error::Config(format!(
                "rho_informed out of [0,1]: {}",
                self.rho_informed
            )));
        }
        if !(0.0..=1.0).contains(&self.rho_black) || !self.rho_black.is_finite() {
            return Err(Error::Config(format!(
                "rho_black out of [0,1]: {}",
                self.rho_black
            )));
        }
        if variant_by_name(&self.variant).is_none() {
            return Err(Error::Config(format!(
                "unknown variant {:?} (known: {})",
                self.variant,
                variant_names().join(", ")
            )));
        }
        self.arena.validate()?;
        self.body.validate()?;
        self.controller.validate()?;
        if self.arena.arena_radius() <= self.body.body_radius {
            return Err(Error::Config(
                "arena_diameter too small for body_radius".into(),
            ));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Config(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.tick_dt.is_finite() && self.tick_dt > 0.0) {
            return Err(Error::Config(format!(
                "tick_dt must be positive, got {}",
                self.tick_dt
            )));
        }
        for (name, value) in [
            ("fsm_update_period", self.controller.fsm_update_period),
            ("straight_duration", self.controller.straight_duration),
            (
                "entry_forward_duration",
                self.controller.entry_forward_duration,
            ),
        ] {
            if !divides_exactly(self.tick_dt, value) {
                return Err(Error::Config(format!(
                    "tick_dt {} does not divide {name} {} exactly",
                    self.tick_dt, value
                )));
            }
        }
        Ok(())
    }
}

fn divides_exactly(dt: f64, duration: f64) -> bool {
    let ticks = (duration / dt).round();
    ticks >= 1.0 && (ticks * dt - duration).abs() < 1e-9
}

/// Final site occupancy of one trial, counted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub robots_on_black: u32,
    pub robots_on_white: u32,
    pub robots_elsewhere: u32,
    pub per_robot_final: Vec<RobotFinal>,
    pub occupancy_timeseries: Option<Vec<OccupancySample>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotFinal {
    pub kind: RobotKind,
    pub state: MacroState,
    pub site: Option<Site>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancySample {
    pub time: f64,
    pub on_black: u32,
    pub on_white: u32,
}

/// Live simulation state of one trial.
pub struct Trial {
    arena: ArenaSpec,
    body: BodySpec,
    params: ControllerParams,
    variant: &'static dyn ControllerVariant,
    census_filter: CensusFilter,
    robots: Vec<RobotRecord>,
    snapshot: Vec<RobotRecord>,
    commands: Vec<MotorCommand>,
    grid: SpatialGrid,
    rng: ChaCha8Rng,
    tick_dt: f64,
    tick_index: u64,
    total_ticks: u64,
    fsm_period_ticks: u64,
    sample_period_ticks: u64,
    timeseries: Option<Vec<OccupancySample>>,
}

impl Trial {
    /// Places the swarm and prepares the executor. Robots are placed
    /// uniformly at random inside the wall (accounting for the body radius)
    /// by rejection sampling until all pairwise center distances exceed one
    /// body diameter; headings are uniform; everyone starts in Random Walk.
    pub fn new(config: &TrialConfig) -> Result<Trial> {
        config.validate()?;
        let variant = variant_by_name(&config.variant).expect("validated variant");
        let params = config.controller;
        let body = config.body;
        let arena = config.arena;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        let (n_black, n_white, n_plain) = config.kind_counts();
        let mut kinds = Vec::with_capacity(config.swarm_size as usize);
        kinds.extend(std::iter::repeat_n(RobotKind::InformedBlack, n_black as usize));
        kinds.extend(std::iter::repeat_n(RobotKind::InformedWhite, n_white as usize));
        kinds.extend(std::iter::repeat_n(RobotKind::NonInformed, n_plain as usize));

        let max_center = arena.arena_radius() - body.body_radius;
        let min_gap_sq = (2.0 * body.body_radius).powi(2);
        let mut robots: Vec<RobotRecord> = Vec::with_capacity(kinds.len());
        for kind in kinds {
            let mut attempts = 0;
            let position = loop {
                attempts += 1;
                if attempts > PLACEMENT_ATTEMPTS {
                    return Err(Error::Init(format!(
                        "could not place robot {} after {PLACEMENT_ATTEMPTS} attempts; \
                         the arena is too crowded",
                        robots.len()
                    )));
                }
                let radius = max_center * rng.gen::<f64>().sqrt();
                let angle = rng.gen_range(-PI..PI);
                let candidate = Vec2::new(radius * angle.cos(), radius * angle.sin());
                let clear = robots
                    .iter()
                    .all(|r| r.pose.position.dist_sq(candidate) > min_gap_sq);
                if clear {
                    break candidate;
                }
            };
            let heading = rng.gen_range(-PI..PI);
            robots.push(RobotRecord {
                kind,
                pose: RobotPose::new(position, heading),
                state: ControllerState::initial(&params),
            });
        }

        // One grid serves every query; its cell must cover the largest
        // query radius in use.
        let move_clearance = 2.0 * body.body_radius + params.linear_speed * config.tick_dt;
        let cell = body
            .comm_range
            .max(body.proximity_detection_radius())
            .max(move_clearance);
        let grid = SpatialGrid::new(arena.arena_radius() + body.proximity_range, cell);

        let n = robots.len();
        Ok(Trial {
            arena,
            body,
            params,
            variant,
            census_filter: variant.census_filter(),
            robots,
            snapshot: Vec::with_capacity(n),
            commands: vec![MotorCommand::Halt; n],
            grid,
            rng,
            tick_dt: config.tick_dt,
            tick_index: 0,
            total_ticks: (config.duration / config.tick_dt).round() as u64,
            fsm_period_ticks: (params.fsm_update_period / config.tick_dt).round() as u64,
            sample_period_ticks: (TIMESERIES_PERIOD / config.tick_dt).round().max(1.0) as u64,
            timeseries: config.record_timeseries.then(Vec::new),
        })
    }

    pub fn robots(&self) -> &[RobotRecord] {
        &self.robots
    }

    pub fn time(&self) -> f64 {
        self.tick_index as f64 * self.tick_dt
    }

    pub fn is_done(&self) -> bool {
        self.tick_index >= self.total_ticks
    }

    pub fn total_ticks(&self) -> u64 {
        self.total_ticks
    }

    /// Robots currently in the Stay state (entering or resting).
    pub fn staying_count(&self) -> usize {
        self.robots.iter().filter(|r| r.state.broadcasts()).count()
    }

    /// Occupancy by final position: (on black, on white, elsewhere).
    pub fn occupancy(&self) -> (u32, u32, u32) {
        let mut black = 0;
        let mut white = 0;
        for r in &self.robots {
            match self.arena.site_membership(r.pose.position) {
                Some(Site::Black) => black += 1,
                Some(Site::White) => white += 1,
                None => {}
            }
        }
        (black, white, self.robots.len() as u32 - black - white)
    }

    /// Smallest pairwise center distance; for interpenetration audits.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.robots.len() {
            for j in (i + 1)..self.robots.len() {
                min = min.min(
                    self.robots[i]
                        .pose
                        .position
                        .dist(self.robots[j].pose.position),
                );
            }
        }
        min
    }

    /// Whether every robot body is inside the wall.
    pub fn all_inside_wall(&self) -> bool {
        self.robots
            .iter()
            .all(|r| self.arena.contains_body(r.pose.position, self.body.body_radius))
    }

    /// Advances the simulation by one timestep.
    pub fn tick(&mut self) {
        if let Some(series) = &mut self.timeseries {
            if self.tick_index.is_multiple_of(self.sample_period_ticks) {
                let mut black = 0;
                let mut white = 0;
                for r in &self.robots {
                    match self.arena.site_membership(r.pose.position) {
                        Some(Site::Black) => black += 1,
                        Some(Site::White) => white += 1,
                        None => {}
                    }
                }
                series.push(OccupancySample {
                    time: self.tick_index as f64 * self.tick_dt,
                    on_black: black,
                    on_white: white,
                });
            }
        }

        self.take_snapshot();
        let fsm_update = self.tick_index.is_multiple_of(self.fsm_period_ticks);

        for i in 0..self.robots.len() {
            let record = self.snapshot[i];
            let sensors = LazySensors {
                me: i,
                snapshot: &self.snapshot,
                grid: &self.grid,
                arena: &self.arena,
                body: &self.body,
                filter: self.census_filter,
                ground: self.arena.ground_color(record.pose.position),
                blocked: Cell::new(None),
                census: Cell::new(None),
            };
            let (state, command) = step_controller(
                record.state,
                record.pose.heading,
                record.kind,
                self.variant,
                &sensors,
                &self.params,
                fsm_update,
                self.tick_dt,
                &mut self.rng,
            );
            self.robots[i].state = state;
            self.commands[i] = command;
        }

        for i in 0..self.robots.len() {
            match self.commands[i] {
                MotorCommand::Halt => {}
                MotorCommand::TurnTo(heading) => self.robots[i].pose.heading = heading,
                MotorCommand::Forward => {
                    let candidate = integrate_motion(
                        self.snapshot[i].pose,
                        self.params.linear_speed,
                        self.tick_dt,
                    );
                    if self.move_allowed(i, candidate.position) {
                        self.robots[i].pose = candidate;
                    }
                }
            }
        }

        self.tick_index += 1;
    }

    fn take_snapshot(&mut self) {
        self.snapshot.clear();
        self.snapshot.extend_from_slice(&self.robots);
        self.grid
            .rebuild(self.snapshot.iter().map(|r| r.pose.position));
    }

    /// A forward step is allowed if the destination keeps the body inside
    /// the wall and at least one body diameter plus one tick of travel away
    /// from every other snapshot position. The travel margin guarantees
    /// that two robots moving toward each other in the same tick still end
    /// it separated by a full body diameter.
    fn move_allowed(&self, me: usize, candidate: Vec2) -> bool {
        if !self.arena.contains_body(candidate, self.body.body_radius) {
            return false;
        }
        let clearance = 2.0 * self.body.body_radius + self.params.linear_speed * self.tick_dt;
        let clearance_sq = clearance * clearance;
        let mut clear = true;
        self.grid.candidates(candidate, |j| {
            if clear && j != me && self.snapshot[j].pose.position.dist_sq(candidate) < clearance_sq
            {
                clear = false;
            }
        });
        clear
    }

    /// Runs the remaining ticks and reports the final occupancy.
    pub fn run(mut self) -> TrialResult {
        while !self.is_done() {
            self.tick();
        }
        self.into_result()
    }

    pub fn into_result(self) -> TrialResult {
        let (black, white, elsewhere) = self.occupancy();
        let per_robot_final = self
            .robots
            .iter()
            .map(|r| RobotFinal {
                kind: r.kind,
                state: r.state.macro_state(),
                site: self.arena.site_membership(r.pose.position),
            })
            .collect();
        TrialResult {
            robots_on_black: black,
            robots_on_white: white,
            robots_elsewhere: elsewhere,
            per_robot_final,
            occupancy_timeseries: self.timeseries,
        }
    }
}

/// Sensor view over the pre-tick snapshot. The floor color is precomputed;
/// the obstacle flag and the census are evaluated on first use and cached,
/// since most robots consult neither on most ticks. None of this touches
/// the random stream, so laziness cannot perturb determinism.
struct LazySensors<'a> {
    me: usize,
    snapshot: &'a [RobotRecord],
    grid: &'a SpatialGrid,
    arena: &'a ArenaSpec,
    body: &'a BodySpec,
    filter: CensusFilter,
    ground: GroundColor,
    blocked: Cell<Option<bool>>,
    census: Cell<Option<u32>>,
}

impl Sensors for LazySensors<'_> {
    fn ground(&self) -> GroundColor {
        self.ground
    }

    fn blocked(&self) -> bool {
        if let Some(cached) = self.blocked.get() {
            return cached;
        }
        let pose = self.snapshot[self.me].pose;
        let probe = pose.position + Vec2::from_angle(pose.heading) * self.body.proximity_range;
        let mut blocked = probe.norm() >= self.arena.arena_radius() - self.body.body_radius;
        if !blocked {
            let detect_sq = self.body.proximity_detection_radius().powi(2);
            self.grid.candidates(probe, |j| {
                if !blocked
                    && j != self.me
                    && self.snapshot[j].pose.position.dist_sq(probe) < detect_sq
                {
                    blocked = true;
                }
            });
        }
        self.blocked.set(Some(blocked));
        blocked
    }

    fn census(&self) -> u32 {
        if let Some(cached) = self.census.get() {
            return cached;
        }
        let position = self.snapshot[self.me].pose.position;
        let range_sq = self.body.comm_range * self.body.comm_range;
        let mut count = 0u32;
        self.grid.candidates(position, |j| {
            let other = &self.snapshot[j];
            if j != self.me
                && other.state.broadcasts()
                && self.filter.admits(other.kind)
                && other.pose.position.dist_sq(position) < range_sq
                && self.line_of_sight(j, other.pose.position)
            {
                count += 1;
            }
        });
        self.census.set(Some(count));
        count
    }
}

impl LazySensors<'_> {
    /// Grid-assisted line-of-sight check between this robot and robot `j`.
    /// Potential occluders lie within half the communication range plus one
    /// body radius of the segment midpoint, well inside one grid cell.
    fn line_of_sight(&self, j: usize, to: Vec2) -> bool {
        let from = self.snapshot[self.me].pose.position;
        let midpoint = (from + to) * 0.5;
        let mut clear = true;
        self.grid.candidates(midpoint, |k| {
            if clear
                && k != self.me
                && k != j
                && occludes(
                    from,
                    to,
                    self.snapshot[k].pose.position,
                    self.body.body_radius,
                )
            {
                clear = false;
            }
        });
        clear
    }
}

/// Runs one complete trial from a configuration.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    Ok(Trial::new(config)?.run())
}
