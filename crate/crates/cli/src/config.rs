//! Flat key/value configuration file and its resolution against CLI
//! overrides.
//!
//! Every key is optional; the defaults reproduce the canonical experiment
//! setup, so an empty file (or none at all) is a valid configuration. CLI
//! flags take precedence over file values. The fully resolved settings are
//! echoed into every output directory for provenance.

use aggsim_core::arena::ArenaSpec;
use aggsim_core::controller::ControllerParams;
use aggsim_core::engine::TrialConfig;
use aggsim_core::harness::{SweepContext, SweepSpec};
use aggsim_core::robot::BodySpec;
use aggsim_core::Error;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk configuration: a flat TOML document.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    // Trial parameters.
    pub swarm_size: Option<u32>,
    pub rho_informed: Option<f64>,
    pub rho_black: Option<f64>,
    pub variant: Option<String>,
    pub duration: Option<f64>,
    pub tick_dt: Option<f64>,
    pub seed: Option<u64>,
    pub record_timeseries: Option<bool>,
    // Arena; derived from the swarm-size preset when omitted.
    pub arena_diameter: Option<f64>,
    pub site_diameter: Option<f64>,
    // Body.
    pub body_radius: Option<f64>,
    pub proximity_range: Option<f64>,
    pub comm_range: Option<f64>,
    // Controller.
    pub leave_gain: Option<f64>,
    pub leave_census_span: Option<f64>,
    pub leave_prob_alone: Option<f64>,
    pub leave_neighbor_decay: Option<f64>,
    pub turn_concentration: Option<f64>,
    pub straight_duration: Option<f64>,
    pub entry_forward_duration: Option<f64>,
    pub fsm_update_period: Option<f64>,
    pub linear_speed: Option<f64>,
    // Sweep grid.
    pub sweep_swarm_sizes: Option<Vec<u32>>,
    pub sweep_rho_informed: Option<Vec<f64>>,
    pub sweep_rho_black: Option<Vec<f64>>,
    pub sweep_variants: Option<Vec<String>>,
    pub trials_per_cell: Option<u32>,
    pub base_seed: Option<u64>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved settings: file values overlaid with CLI overrides, blanks
/// filled with the canonical defaults. This is what gets echoed to output
/// directories.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub swarm_size: u32,
    pub rho_informed: f64,
    pub rho_black: f64,
    pub variant: String,
    pub duration: f64,
    pub tick_dt: f64,
    pub seed: u64,
    pub record_timeseries: bool,
    pub arena_diameter: f64,
    pub site_diameter: f64,
    pub body_radius: f64,
    pub proximity_range: f64,
    pub comm_range: f64,
    pub leave_gain: f64,
    pub leave_census_span: f64,
    pub leave_prob_alone: f64,
    pub leave_neighbor_decay: f64,
    pub turn_concentration: f64,
    pub straight_duration: f64,
    pub entry_forward_duration: f64,
    pub fsm_update_period: f64,
    pub linear_speed: f64,
    pub sweep_swarm_sizes: Vec<u32>,
    pub sweep_rho_informed: Vec<f64>,
    pub sweep_rho_black: Vec<f64>,
    pub sweep_variants: Vec<String>,
    pub trials_per_cell: u32,
    pub base_seed: u64,
    pub workers: usize,
}

impl Settings {
    /// Resolves a file config (already overlaid with CLI values by the
    /// caller) into concrete settings.
    pub fn resolve(file: FileConfig) -> Result<Settings, Error> {
        let body = BodySpec::default();
        let controller = ControllerParams::default();
        let swarm_size = file.swarm_size.unwrap_or(50);
        // Explicit diameters win; otherwise the preset for the swarm size.
        let (arena_diameter, site_diameter) = match (file.arena_diameter, file.site_diameter) {
            (Some(a), Some(s)) => (a, s),
            (None, None) => {
                let preset = ArenaSpec::preset(swarm_size)?;
                (preset.arena_diameter, preset.site_diameter)
            }
            _ => {
                return Err(Error::Config(
                    "arena_diameter and site_diameter must be given together".into(),
                ))
            }
        };
        Ok(Settings {
            swarm_size,
            rho_informed: file.rho_informed.unwrap_or(0.3),
            rho_black: file.rho_black.unwrap_or(0.5),
            variant: file.variant.unwrap_or_else(|| "simplified".into()),
            duration: file.duration.unwrap_or(30_000.0),
            tick_dt: file.tick_dt.unwrap_or(0.1),
            seed: file.seed.unwrap_or(1),
            record_timeseries: file.record_timeseries.unwrap_or(false),
            arena_diameter,
            site_diameter,
            body_radius: file.body_radius.unwrap_or(body.body_radius),
            proximity_range: file.proximity_range.unwrap_or(body.proximity_range),
            comm_range: file.comm_range.unwrap_or(body.comm_range),
            leave_gain: file.leave_gain.unwrap_or(controller.leave_gain),
            leave_census_span: file.leave_census_span.unwrap_or(controller.leave_census_span),
            leave_prob_alone: file.leave_prob_alone.unwrap_or(controller.leave_prob_alone),
            leave_neighbor_decay: file
                .leave_neighbor_decay
                .unwrap_or(controller.leave_neighbor_decay),
            turn_concentration: file
                .turn_concentration
                .unwrap_or(controller.turn_concentration),
            straight_duration: file.straight_duration.unwrap_or(controller.straight_duration),
            entry_forward_duration: file
                .entry_forward_duration
                .unwrap_or(controller.entry_forward_duration),
            fsm_update_period: file.fsm_update_period.unwrap_or(controller.fsm_update_period),
            linear_speed: file.linear_speed.unwrap_or(controller.linear_speed),
            sweep_swarm_sizes: file.sweep_swarm_sizes.unwrap_or_else(|| vec![50, 100]),
            sweep_rho_informed: file
                .sweep_rho_informed
                .unwrap_or_else(|| vec![0.1, 0.2, 0.3, 0.4, 0.5]),
            sweep_rho_black: file
                .sweep_rho_black
                .unwrap_or_else(|| vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
            sweep_variants: file
                .sweep_variants
                .unwrap_or_else(|| vec!["simplified".into(), "baseline".into()]),
            trials_per_cell: file.trials_per_cell.unwrap_or(20),
            base_seed: file.base_seed.unwrap_or(42),
            workers: file.workers.unwrap_or(0),
        })
    }

    pub fn body(&self) -> BodySpec {
        BodySpec {
            body_radius: self.body_radius,
            proximity_range: self.proximity_range,
            comm_range: self.comm_range,
        }
    }

    pub fn controller(&self) -> ControllerParams {
        ControllerParams {
            leave_gain: self.leave_gain,
            leave_census_span: self.leave_census_span,
            leave_prob_alone: self.leave_prob_alone,
            leave_neighbor_decay: self.leave_neighbor_decay,
            turn_concentration: self.turn_concentration,
            straight_duration: self.straight_duration,
            entry_forward_duration: self.entry_forward_duration,
            fsm_update_period: self.fsm_update_period,
            linear_speed: self.linear_speed,
        }
    }

    /// Configuration of a single trial, validated.
    pub fn trial_config(&self) -> Result<TrialConfig, Error> {
        let config = TrialConfig {
            swarm_size: self.swarm_size,
            rho_informed: self.rho_informed,
            rho_black: self.rho_black,
            variant: self.variant.clone(),
            arena: ArenaSpec::with_diameters(self.arena_diameter, self.site_diameter)?,
            body: self.body(),
            controller: self.controller(),
            duration: self.duration,
            tick_dt: self.tick_dt,
            seed: self.seed,
            record_timeseries: self.record_timeseries,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, Error> {
        let spec = SweepSpec {
            swarm_sizes: self.sweep_swarm_sizes.clone(),
            rho_informed_values: self.sweep_rho_informed.clone(),
            rho_black_values: self.sweep_rho_black.clone(),
            variants: self.sweep_variants.clone(),
            trials_per_cell: self.trials_per_cell,
            base_seed: self.base_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sweep_context(&self) -> SweepContext {
        SweepContext {
            body: self.body(),
            controller: self.controller(),
            duration: self.duration,
            tick_dt: self.tick_dt,
        }
    }

    /// Writes the resolved settings next to the outputs they produced.
    pub fn echo_to(&self, dir: &Path) -> Result<(), Error> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize effective config: {e}")))?;
        std::fs::write(dir.join("effective-config.toml"), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_canonical_setup() {
        let settings = Settings::resolve(FileConfig::default()).unwrap();
        assert_eq!(settings.swarm_size, 50);
        assert_eq!(settings.arena_diameter, 12.9);
        assert_eq!(settings.site_diameter, 2.8);
        assert_eq!(settings.duration, 30_000.0);
        assert_eq!(settings.leave_prob_alone, 0.5);
        assert_eq!(settings.leave_neighbor_decay, 2.25);
        assert_eq!(settings.sweep_swarm_sizes, vec![50, 100]);
        assert_eq!(settings.trials_per_cell, 20);
        let spec = settings.sweep_spec().unwrap();
        assert_eq!(spec.cells().len(), 120);
    }

    #[test]
    fn explicit_arena_requires_both_diameters() {
        let file = FileConfig {
            arena_diameter: Some(6.0),
            ..FileConfig::default()
        };
        assert!(Settings::resolve(file).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let parsed: Result<FileConfig, _> = toml::from_str("swam_size = 50");
        assert!(parsed.is_err());
    }

    #[test]
    fn non_preset_size_needs_explicit_arena() {
        let file = FileConfig {
            swarm_size: Some(60),
            ..FileConfig::default()
        };
        assert!(Settings::resolve(file).is_err());
        let file = FileConfig {
            swarm_size: Some(60),
            arena_diameter: Some(14.0),
            site_diameter: Some(3.0),
            ..FileConfig::default()
        };
        let settings = Settings::resolve(file).unwrap();
        assert!(settings.trial_config().is_ok());
    }
}
