//! LAR scheme 1 zone geometry: expected zone, request zone and membership.
//!
//! Everything here is a pure function over plain values, so it can be used
//! from the simulator and from test oracles alike.

use std::fmt;

use crate::error::GeometryError;
use crate::NodeId;

/// A point in the simulation plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Linear interpolation between `self` (at `frac == 0`) and `other`.
    pub fn lerp(&self, other: &Position, frac: f64) -> Position {
        Position {
            x: self.x + (other.x - self.x) * frac,
            y: self.y + (other.y - self.y) * frac,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// What a node knows about another node's whereabouts: where it was, when,
/// and how fast it was moving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationRecord {
    pub node_id: NodeId,
    pub position: Position,
    /// Time the position was observed, in seconds.
    pub timestamp: f64,
    /// Average speed in m/s, never negative.
    pub avg_speed: f64,
}

impl LocationRecord {
    pub fn new(node_id: NodeId, position: Position, timestamp: f64, avg_speed: f64) -> Self {
        Self {
            node_id,
            position,
            timestamp,
            avg_speed: avg_speed.max(0.0),
        }
    }
}

/// Disk the destination may have reached since its location was recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedZone {
    pub center: Position,
    pub radius: f64,
}

/// Closed axis-aligned rectangle that route requests may be forwarded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestZone {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RequestZone {
    /// The whole `width` x `height` simulation area; used when nothing is
    /// known about the destination, which degenerates LAR to flooding.
    pub fn whole_area(width: f64, height: f64) -> Self {
        Self {
            x_min: 0.0,
            x_max: width,
            y_min: 0.0,
            y_max: height,
        }
    }

    pub fn contains(&self, p: Position) -> bool {
        contains(self, p)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

impl fmt::Display for RequestZone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:.3},{:.3}]x[{:.3},{:.3}]",
            self.x_min, self.x_max, self.y_min, self.y_max
        )
    }
}

/// Expected zone of `record` as seen at time `now`: a circle around the last
/// known position with radius `avg_speed * (now - timestamp)`.
pub fn expected_zone(record: &LocationRecord, now: f64) -> Result<ExpectedZone, GeometryError> {
    if !(now >= record.timestamp) {
        return Err(GeometryError::QueryBeforeRecord {
            now,
            timestamp: record.timestamp,
        });
    }
    Ok(ExpectedZone {
        center: record.position,
        radius: record.avg_speed * (now - record.timestamp),
    })
}

/// Smallest axis-aligned rectangle holding both the source and the whole
/// expected-zone disk.
pub fn request_zone(source: Position, ez: &ExpectedZone) -> RequestZone {
    RequestZone {
        x_min: source.x.min(ez.center.x - ez.radius),
        x_max: source.x.max(ez.center.x + ez.radius),
        y_min: source.y.min(ez.center.y - ez.radius),
        y_max: source.y.max(ez.center.y + ez.radius),
    }
}

/// Boundary-inclusive membership test.
pub fn contains(zone: &RequestZone, p: Position) -> bool {
    zone.x_min <= p.x && p.x <= zone.x_max && zone.y_min <= p.y && p.y <= zone.y_max
}

pub fn distance(p: Position, q: Position) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(x: f64, y: f64, t0: f64, v: f64) -> LocationRecord {
        LocationRecord::new(7, Position::new(x, y), t0, v)
    }

    #[test]
    fn expected_zone_examples() {
        let ez = expected_zone(&rec(500.0, 500.0, 0.0, 10.0), 0.0).unwrap();
        assert_eq!(ez.center, Position::new(500.0, 500.0));
        assert_eq!(ez.radius, 0.0);

        let ez = expected_zone(&rec(500.0, 500.0, 0.0, 20.0), 5.0).unwrap();
        assert_eq!(ez.radius, 100.0);

        let ez = expected_zone(&rec(300.0, 600.0, 2.0, 0.0), 1000.0).unwrap();
        assert_eq!(ez.radius, 0.0);
    }

    #[test]
    fn expected_zone_rejects_query_in_the_past() {
        let err = expected_zone(&rec(0.0, 0.0, 10.0, 1.0), 9.5).unwrap_err();
        assert!(matches!(err, GeometryError::QueryBeforeRecord { .. }));
    }

    #[test]
    fn request_zone_examples() {
        let ez = ExpectedZone {
            center: Position::new(500.0, 500.0),
            radius: 100.0,
        };
        let z = request_zone(Position::new(0.0, 0.0), &ez);
        assert_eq!((z.x_min, z.x_max, z.y_min, z.y_max), (0.0, 600.0, 0.0, 600.0));

        let ez = ExpectedZone {
            center: Position::new(300.0, 600.0),
            radius: 50.0,
        };
        let z = request_zone(Position::new(700.0, 200.0), &ez);
        assert_eq!((z.x_min, z.x_max, z.y_min, z.y_max), (250.0, 700.0, 200.0, 650.0));

        let ez = ExpectedZone {
            center: Position::new(500.0, 500.0),
            radius: 0.0,
        };
        let z = request_zone(Position::new(500.0, 500.0), &ez);
        assert_eq!((z.x_min, z.x_max, z.y_min, z.y_max), (500.0, 500.0, 500.0, 500.0));
    }

    #[test]
    fn contains_is_boundary_inclusive() {
        let z = RequestZone::whole_area(600.0, 600.0);
        assert!(contains(&z, Position::new(300.0, 300.0)));
        assert!(contains(&z, Position::new(600.0, 600.0)));
        assert!(contains(&z, Position::new(0.0, 450.0)));
        assert!(!contains(&z, Position::new(601.0, 0.0)));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Position::new(7.0, 7.0), Position::new(7.0, 7.0)), 0.0);
        assert_eq!(distance(Position::new(0.0, 0.0), Position::new(250.0, 0.0)), 250.0);
    }

    fn coord() -> impl Strategy<Value = f64> {
        0.0..1000.0f64
    }

    proptest! {
        #[test]
        fn radius_is_monotone_in_time(
            v in 0.0..40.0f64, t0 in 0.0..500.0f64, d1 in 0.0..500.0f64, d2 in 0.0..500.0f64
        ) {
            let r = rec(1.0, 2.0, t0, v);
            let (a, b) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let za = expected_zone(&r, t0 + a).unwrap();
            let zb = expected_zone(&r, t0 + b).unwrap();
            prop_assert!(za.radius >= 0.0);
            prop_assert!(za.radius <= zb.radius);
        }

        #[test]
        fn request_zone_holds_source_and_disk(
            sx in coord(), sy in coord(), cx in coord(), cy in coord(),
            r in 0.0..300.0f64, angle in 0.0..std::f64::consts::TAU, frac in 0.0..=1.0f64
        ) {
            let s = Position::new(sx, sy);
            let ez = ExpectedZone { center: Position::new(cx, cy), radius: r };
            let z = request_zone(s, &ez);
            prop_assert!(z.x_min <= z.x_max && z.y_min <= z.y_max);
            prop_assert!(z.contains(s));
            let q = Position::new(cx + r * frac * angle.cos(), cy + r * frac * angle.sin());
            // cos/sin rounding can push q past the edge by an ulp
            let eps = 1e-9;
            prop_assert!(q.x >= z.x_min - eps && q.x <= z.x_max + eps);
            prop_assert!(q.y >= z.y_min - eps && q.y <= z.y_max + eps);
        }

        #[test]
        fn distance_is_a_metric(
            ax in coord(), ay in coord(), bx in coord(), by in coord()
        ) {
            let a = Position::new(ax, ay);
            let b = Position::new(bx, by);
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert!(distance(a, b) >= 0.0);
            prop_assert_eq!(distance(a, a), 0.0);
        }
    }
}
