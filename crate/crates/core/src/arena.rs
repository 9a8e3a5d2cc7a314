//! Static geometry of the circular arena and its two aggregation sites.
//!
//! The arena is a grey disc with two smaller colored discs (one black, one
//! white) painted on the floor. Each site center sits halfway between the
//! arena center and the wall, and the two sites are diametrically opposed on
//! the x-axis: black on the negative side, white on the positive side.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};

/// Floor color under a ground sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroundColor {
    Black,
    Grey,
    White,
}

impl GroundColor {
    /// Scalar reading of the ground sensor: 0 on black, 0.5 on grey,
    /// 1 on white.
    pub fn reading(self) -> f64 {
        match self {
            GroundColor::Black => 0.0,
            GroundColor::Grey => 0.5,
            GroundColor::White => 1.0,
        }
    }
}

/// One of the two aggregation sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Black,
    White,
}

impl Site {
    pub fn ground_color(self) -> GroundColor {
        match self {
            Site::Black => GroundColor::Black,
            Site::White => GroundColor::White,
        }
    }
}

/// Immutable arena geometry. Shared read-only by any number of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArenaSpec {
    /// Diameter of the arena disc (m).
    pub arena_diameter: f64,
    /// Diameter of each aggregation site (m).
    pub site_diameter: f64,
    /// Center of the black site.
    pub site_black_center: Vec2,
    /// Center of the white site.
    pub site_white_center: Vec2,
}

impl ArenaSpec {
    /// Arena with the canonical preset dimensions for the given swarm size.
    ///
    /// Presets exist for swarms of 50 and 100 robots; other sizes must give
    /// explicit diameters via [`ArenaSpec::with_diameters`].
    pub fn preset(swarm_size: u32) -> Result<ArenaSpec> {
        match swarm_size {
            50 => ArenaSpec::with_diameters(12.9, 2.8),
            100 => ArenaSpec::with_diameters(19.2, 4.0),
            n => Err(Error::Config(format!(
                "swarm_size {n} has no arena preset (known: 50, 100); \
                 set arena_diameter and site_diameter explicitly"
            ))),
        }
    }

    /// Arena with explicit dimensions. Site centers are placed on the x-axis
    /// at half the arena radius, black at -r/2 and white at +r/2.
    pub fn with_diameters(arena_diameter: f64, site_diameter: f64) -> Result<ArenaSpec> {
        let half_radius = arena_diameter / 4.0;
        let spec = ArenaSpec {
            arena_diameter,
            site_diameter,
            site_black_center: Vec2::new(-half_radius, 0.0),
            site_white_center: Vec2::new(half_radius, 0.0),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.arena_diameter.is_finite() && self.arena_diameter > 0.0) {
            return Err(Error::Config(format!(
                "arena_diameter must be positive, got {}",
                self.arena_diameter
            )));
        }
        if !(self.site_diameter.is_finite() && self.site_diameter > 0.0) {
            return Err(Error::Config(format!(
                "site_diameter must be positive, got {}",
                self.site_diameter
            )));
        }
        let r = self.arena_radius();
        let sr = self.site_radius();
        for (name, c) in [
            ("black site", self.site_black_center),
            ("white site", self.site_white_center),
        ] {
            if c.norm() + sr > r {
                return Err(Error::Config(format!(
                    "{name} does not lie entirely inside the arena \
                     (center distance {:.3} + radius {:.3} > arena radius {:.3})",
                    c.norm(),
                    sr,
                    r
                )));
            }
        }
        let center_gap = self.site_black_center.dist(self.site_white_center);
        if center_gap <= self.site_diameter {
            return Err(Error::Config(format!(
                "sites overlap: center distance {:.3} <= site diameter {:.3}",
                center_gap, self.site_diameter
            )));
        }
        Ok(())
    }

    pub fn arena_radius(&self) -> f64 {
        self.arena_diameter / 2.0
    }

    pub fn site_radius(&self) -> f64 {
        self.site_diameter / 2.0
    }

    pub fn site_center(&self, site: Site) -> Vec2 {
        match site {
            Site::Black => self.site_black_center,
            Site::White => self.site_white_center,
        }
    }

    /// Whether a robot center at `point` is inside the arena wall, given the
    /// robot body radius.
    pub fn contains_body(&self, point: Vec2, body_radius: f64) -> bool {
        point.norm() <= self.arena_radius() - body_radius
    }

    /// Floor color sampled at a single point (the robot center).
    pub fn ground_color(&self, point: Vec2) -> GroundColor {
        match self.site_membership(point) {
            Some(Site::Black) => GroundColor::Black,
            Some(Site::White) => GroundColor::White,
            None => GroundColor::Grey,
        }
    }

    /// Site whose circle strictly contains `point`, if any. Points exactly
    /// on a site boundary count as outside.
    pub fn site_membership(&self, point: Vec2) -> Option<Site> {
        let r_sq = self.site_radius() * self.site_radius();
        if point.dist_sq(self.site_black_center) < r_sq {
            Some(Site::Black)
        } else if point.dist_sq(self.site_white_center) < r_sq {
            Some(Site::White)
        } else {
            None
        }
    }
}

/// Arena for the canonical swarm sizes (see [`ArenaSpec::preset`]).
pub fn make_arena(swarm_size: u32) -> Result<ArenaSpec> {
    ArenaSpec::preset(swarm_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preset_dimensions() {
        let a50 = make_arena(50).unwrap();
        assert_eq!(a50.arena_diameter, 12.9);
        assert_eq!(a50.site_diameter, 2.8);
        let a100 = make_arena(100).unwrap();
        assert_eq!(a100.arena_diameter, 19.2);
        assert_eq!(a100.site_diameter, 4.0);
    }

    #[test]
    fn preset_site_placement() {
        let a = make_arena(50).unwrap();
        assert_eq!(a.site_black_center, Vec2::new(-3.225, 0.0));
        assert_eq!(a.site_white_center, Vec2::new(3.225, 0.0));
        assert!((a.site_black_center.norm() - 12.9 / 4.0).abs() < 1e-12);
        // Diametrically opposed through the arena center.
        assert_eq!(a.site_black_center.x, -a.site_white_center.x);
        assert_eq!(a.site_black_center.y, -a.site_white_center.y);
    }

    #[test]
    fn unknown_size_needs_explicit_diameters() {
        assert!(matches!(make_arena(60), Err(Error::Config(_))));
        // Arbitrary sizes work through explicit dimensions.
        assert!(ArenaSpec::with_diameters(6.0, 1.4).is_ok());
    }

    #[test]
    fn ground_color_readings() {
        let a = make_arena(50).unwrap();
        let black = a.ground_color(a.site_black_center);
        let grey = a.ground_color(Vec2::ZERO);
        let white = a.ground_color(a.site_white_center);
        assert_eq!(black, GroundColor::Black);
        assert_eq!(grey, GroundColor::Grey);
        assert_eq!(white, GroundColor::White);
        assert_eq!(black.reading(), 0.0);
        assert_eq!(grey.reading(), 0.5);
        assert_eq!(white.reading(), 1.0);
    }

    #[test]
    fn site_membership_strict_interior() {
        let a = make_arena(50).unwrap();
        let half_in = a.site_black_center + Vec2::new(a.site_radius() * 0.5, 0.0);
        assert_eq!(a.site_membership(half_in), Some(Site::Black));
        assert_eq!(a.site_membership(Vec2::ZERO), None);
        // Exactly on the circle boundary counts as outside.
        let boundary = a.site_black_center + Vec2::new(a.site_radius(), 0.0);
        assert_eq!(a.site_membership(boundary), None);
        assert_eq!(a.ground_color(boundary), GroundColor::Grey);
    }

    #[test]
    fn sites_are_separated_in_presets() {
        for n in [50, 100] {
            let a = make_arena(n).unwrap();
            let gap = a.site_black_center.dist(a.site_white_center);
            assert!((gap - a.arena_radius()).abs() < 1e-12);
            assert!(gap > a.site_diameter);
        }
    }

    #[test]
    fn preset_density_roughly_constant() {
        // The presets scale the arena with the swarm; the published
        // dimensions keep the area per robot equal only to ~11%, not
        // exactly (19.2 != 12.9 * sqrt(2)).
        let per_50 = std::f64::consts::PI * 6.45 * 6.45 / 50.0;
        let per_100 = std::f64::consts::PI * 9.6 * 9.6 / 100.0;
        let ratio = per_100 / per_50;
        assert!(ratio > 1.0 && ratio < 1.15, "ratio {ratio}");
    }

    proptest! {
        // Membership and ground color agree everywhere.
        #[test]
        fn membership_matches_ground_color(x in -6.45f64..6.45, y in -6.45f64..6.45) {
            let a = make_arena(50).unwrap();
            let p = Vec2::new(x, y);
            let expected = match a.site_membership(p) {
                Some(Site::Black) => GroundColor::Black,
                Some(Site::White) => GroundColor::White,
                None => GroundColor::Grey,
            };
            prop_assert_eq!(a.ground_color(p), expected);
        }
    }
}
