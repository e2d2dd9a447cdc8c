//! Manhattan-grid mobility.
//!
//! Vehicles drive on the centerline of a regular lattice of streets. Vertical
//! streets carry north/south traffic and horizontal streets east/west
//! traffic. At every intersection a vehicle keeps its heading with
//! probability `1 - turn_prob` and turns left or right with `turn_prob / 2`
//! each. Streets do not continue past the map edge, so at the boundary the
//! straight-ahead option is removed and the remaining mass is renormalized;
//! at a corner the one legal turn is forced.
//!
//! Vehicles never interact and never pause. Speeds are resampled on a fixed
//! update interval, see [`maybe_update_speed`].

use rand::Rng;

use crate::error::MobilityError;
use crate::geometry::Position;
use crate::rng;

/// Distance under which a vehicle counts as sitting on a street or at an
/// intersection.
pub const SNAP_TOLERANCE: f64 = 1e-6;

/// Street lattice: `blocks_x + 1` vertical and `blocks_y + 1` horizontal
/// streets spread evenly over the area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub area_width: f64,
    pub area_height: f64,
    pub blocks_x: u32,
    pub blocks_y: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            area_width: 1000.0,
            area_height: 1000.0,
            blocks_x: 10,
            blocks_y: 15,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.area_width > 0.0 && self.area_width.is_finite()) {
            return Err(MobilityError::InvalidGrid(format!(
                "area width must be positive, got {}",
                self.area_width
            )));
        }
        if !(self.area_height > 0.0 && self.area_height.is_finite()) {
            return Err(MobilityError::InvalidGrid(format!(
                "area height must be positive, got {}",
                self.area_height
            )));
        }
        if self.blocks_x < 1 || self.blocks_y < 1 {
            return Err(MobilityError::InvalidGrid(format!(
                "need at least one block per axis, got {}x{}",
                self.blocks_x, self.blocks_y
            )));
        }
        Ok(())
    }

    /// x coordinate of vertical street `i`.
    pub fn street_x(&self, i: u32) -> f64 {
        f64::from(i) * self.area_width / f64::from(self.blocks_x)
    }

    /// y coordinate of horizontal street `j`.
    pub fn street_y(&self, j: u32) -> f64 {
        f64::from(j) * self.area_height / f64::from(self.blocks_y)
    }

    /// Index of the vertical street running through `x`, if any.
    pub fn vertical_street_at(&self, x: f64) -> Option<u32> {
        nearest_line(x, self.area_width, self.blocks_x).filter(|&i| (self.street_x(i) - x).abs() <= SNAP_TOLERANCE)
    }

    /// Index of the horizontal street running through `y`, if any.
    pub fn horizontal_street_at(&self, y: f64) -> Option<u32> {
        nearest_line(y, self.area_height, self.blocks_y).filter(|&j| (self.street_y(j) - y).abs() <= SNAP_TOLERANCE)
    }

    /// Total street length; vertical streets first.
    pub fn total_street_length(&self) -> f64 {
        f64::from(self.blocks_x + 1) * self.area_height + f64::from(self.blocks_y + 1) * self.area_width
    }

    pub fn contains(&self, p: Position) -> bool {
        (-SNAP_TOLERANCE..=self.area_width + SNAP_TOLERANCE).contains(&p.x)
            && (-SNAP_TOLERANCE..=self.area_height + SNAP_TOLERANCE).contains(&p.y)
    }

    /// Whether a street continues from intersection `(i, j)` in `heading`.
    pub fn has_road(&self, i: u32, j: u32, heading: Heading) -> bool {
        match heading {
            Heading::North => j < self.blocks_y,
            Heading::South => j > 0,
            Heading::East => i < self.blocks_x,
            Heading::West => i > 0,
        }
    }

    /// True when `state` sits on a street matching its heading (the
    /// on-street invariant) and inside the area.
    pub fn is_on_street(&self, state: &VehicleState) -> bool {
        let on_line = if state.heading.is_vertical() {
            self.vertical_street_at(state.position.x).is_some()
        } else {
            self.horizontal_street_at(state.position.y).is_some()
        };
        on_line && self.contains(state.position)
    }
}

fn nearest_line(v: f64, extent: f64, blocks: u32) -> Option<u32> {
    let idx = (v / extent * f64::from(blocks)).round();
    if idx < 0.0 || idx > f64::from(blocks) {
        None
    } else {
        Some(idx as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heading {
    North,
    South,
    East,
    West,
}

impl Heading {
    pub fn is_vertical(self) -> bool {
        matches!(self, Heading::North | Heading::South)
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn right(self) -> Heading {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    pub fn apply(self, turn: Turn) -> Heading {
        match turn {
            Turn::Straight => self,
            Turn::Left => self.left(),
            Turn::Right => self.right(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Turn {
    Straight,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub mean_speed: f64,
    pub min_speed: f64,
    pub speed_change_prob: f64,
    pub turn_prob: f64,
    /// Seconds between speed-change draws and trajectory samples.
    pub update_interval: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            mean_speed: 10.0,
            min_speed: 10.0,
            speed_change_prob: 0.25,
            turn_prob: 0.25,
            update_interval: 1.0,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<(), MobilityError> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(MobilityError::InvalidParams(format!("{name} must lie in [0,1], got {p}")))
            }
        };
        prob("speed change probability", self.speed_change_prob)?;
        prob("turn probability", self.turn_prob)?;
        if !(self.min_speed >= 0.0 && self.mean_speed >= 0.0) {
            return Err(MobilityError::InvalidParams(format!(
                "speeds must be non-negative, got min {} mean {}",
                self.min_speed, self.mean_speed
            )));
        }
        if !(self.update_interval > 0.0) {
            return Err(MobilityError::InvalidParams(format!(
                "update interval must be positive, got {}",
                self.update_interval
            )));
        }
        Ok(())
    }

    /// Width of the uniform speed distribution: `[min, min + span]` has mean
    /// `mean_speed` whenever `mean_speed >= min_speed`.
    pub fn speed_span(&self) -> f64 {
        (2.0 * (self.mean_speed - self.min_speed)).max(0.0)
    }

    /// Speed every vehicle starts with; never below `min_speed`.
    pub fn initial_speed(&self) -> f64 {
        self.mean_speed.max(self.min_speed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Position,
    pub heading: Heading,
    pub speed: f64,
}

/// Places `n` vehicles uniformly along the total street length.
pub fn init_placement<R: Rng + ?Sized>(
    n: usize,
    grid: &GridSpec,
    params: &MobilityParams,
    rng: &mut R,
) -> Result<Vec<VehicleState>, MobilityError> {
    if n == 0 {
        return Err(MobilityError::NoVehicles);
    }
    grid.validate()?;
    let vertical_total = f64::from(grid.blocks_x + 1) * grid.area_height;
    let total = grid.total_street_length();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.gen::<f64>() * total;
        let forward = rng.gen::<bool>();
        let state = if u < vertical_total {
            let i = ((u / grid.area_height) as u32).min(grid.blocks_x);
            let y = (u - f64::from(i) * grid.area_height).clamp(0.0, grid.area_height);
            let mut heading = if forward { Heading::North } else { Heading::South };
            if heading == Heading::South && y <= SNAP_TOLERANCE {
                heading = Heading::North;
            } else if heading == Heading::North && y >= grid.area_height - SNAP_TOLERANCE {
                heading = Heading::South;
            }
            VehicleState {
                position: Position::new(grid.street_x(i), y),
                heading,
                speed: params.initial_speed(),
            }
        } else {
            let rest = u - vertical_total;
            let j = ((rest / grid.area_width) as u32).min(grid.blocks_y);
            let x = (rest - f64::from(j) * grid.area_width).clamp(0.0, grid.area_width);
            let mut heading = if forward { Heading::East } else { Heading::West };
            if heading == Heading::West && x <= SNAP_TOLERANCE {
                heading = Heading::East;
            } else if heading == Heading::East && x >= grid.area_width - SNAP_TOLERANCE {
                heading = Heading::West;
            }
            VehicleState {
                position: Position::new(x, grid.street_y(j)),
                heading,
                speed: params.initial_speed(),
            }
        };
        out.push(state);
    }
    Ok(out)
}

/// Draws the turn taken at intersection `(i, j)` and returns it together with
/// the resulting heading.
pub fn choose_turn<R: Rng + ?Sized>(
    heading: Heading,
    i: u32,
    j: u32,
    turn_prob: f64,
    grid: &GridSpec,
    rng: &mut R,
) -> (Turn, Heading) {
    let options = [
        (Turn::Straight, 1.0 - turn_prob),
        (Turn::Left, turn_prob / 2.0),
        (Turn::Right, turn_prob / 2.0),
    ];
    let legal = |t: Turn| grid.has_road(i, j, heading.apply(t));
    let mut weights = options.map(|(t, w)| (t, if legal(t) { w } else { 0.0 }));
    let mut sum: f64 = weights.iter().map(|(_, w)| w).sum();
    if sum <= 0.0 {
        // all probability sat on illegal moves; pick uniformly among the legal ones
        weights = options.map(|(t, _)| (t, if legal(t) { 1.0 } else { 0.0 }));
        sum = weights.iter().map(|(_, w)| w).sum();
    }
    let mut u = rng.gen::<f64>() * sum;
    let mut chosen = None;
    for (t, w) in weights {
        if w <= 0.0 {
            continue;
        }
        chosen = Some(t);
        if u < w {
            break;
        }
        u -= w;
    }
    let turn = chosen.expect("every grid intersection has a legal exit");
    (turn, heading.apply(turn))
}

/// Next intersection strictly ahead of the vehicle: distance and lattice
/// indices.
fn next_intersection(state: &VehicleState, grid: &GridSpec) -> Option<(f64, u32, u32)> {
    let p = state.position;
    match state.heading {
        Heading::North | Heading::South => {
            let i = grid.vertical_street_at(p.x)?;
            let j = if state.heading == Heading::North {
                (0..=grid.blocks_y).find(|&j| grid.street_y(j) > p.y + SNAP_TOLERANCE)?
            } else {
                (0..=grid.blocks_y).rev().find(|&j| grid.street_y(j) < p.y - SNAP_TOLERANCE)?
            };
            Some(((grid.street_y(j) - p.y).abs(), i, j))
        }
        Heading::East | Heading::West => {
            let j = grid.horizontal_street_at(p.y)?;
            let i = if state.heading == Heading::East {
                (0..=grid.blocks_x).find(|&i| grid.street_x(i) > p.x + SNAP_TOLERANCE)?
            } else {
                (0..=grid.blocks_x).rev().find(|&i| grid.street_x(i) < p.x - SNAP_TOLERANCE)?
            };
            Some(((grid.street_x(i) - p.x).abs(), i, j))
        }
    }
}

fn step_along(p: Position, heading: Heading, d: f64) -> Position {
    match heading {
        Heading::North => Position::new(p.x, p.y + d),
        Heading::South => Position::new(p.x, p.y - d),
        Heading::East => Position::new(p.x + d, p.y),
        Heading::West => Position::new(p.x - d, p.y),
    }
}

/// Moves a vehicle `speed * dt` meters along the street network, drawing a
/// turn at every intersection it reaches.
pub fn advance<R: Rng + ?Sized>(
    state: &VehicleState,
    dt: f64,
    params: &MobilityParams,
    grid: &GridSpec,
    rng: &mut R,
) -> VehicleState {
    let mut s = *state;
    let mut remaining = s.speed * dt;
    // each pass either finishes the step or consumes one block edge, so this
    // bound is generous
    let max_passes = 4 + (remaining / (grid.area_width / f64::from(grid.blocks_x)).min(grid.area_height / f64::from(grid.blocks_y))) as usize * 2;
    for _ in 0..max_passes {
        match next_intersection(&s, grid) {
            Some((dist, i, j)) => {
                if remaining < dist - SNAP_TOLERANCE {
                    s.position = step_along(s.position, s.heading, remaining);
                    break;
                }
                s.position = Position::new(grid.street_x(i), grid.street_y(j));
                remaining = (remaining - dist).max(0.0);
                s.heading = choose_turn(s.heading, i, j, params.turn_prob, grid, rng).1;
                if remaining <= 0.0 {
                    break;
                }
            }
            None => {
                // facing off the map; only reachable from a hand-built state
                // parked on a boundary intersection
                let i = grid.vertical_street_at(s.position.x);
                let j = grid.horizontal_street_at(s.position.y);
                match (i, j) {
                    (Some(i), Some(j)) => {
                        s.position = Position::new(grid.street_x(i), grid.street_y(j));
                        s.heading = choose_turn(s.heading, i, j, params.turn_prob, grid, rng).1;
                    }
                    _ => break,
                }
            }
        }
    }
    s.position.x = s.position.x.clamp(0.0, grid.area_width);
    s.position.y = s.position.y.clamp(0.0, grid.area_height);
    s
}

/// With probability `speed_change_prob`, resamples the speed uniformly from
/// `[min_speed, min_speed + span]`.
pub fn maybe_update_speed<R: Rng + ?Sized>(
    state: &VehicleState,
    params: &MobilityParams,
    rng: &mut R,
) -> VehicleState {
    let mut s = *state;
    if rng.gen::<f64>() < params.speed_change_prob {
        s.speed = params.min_speed + params.speed_span() * rng.gen::<f64>();
    }
    s.speed = s.speed.max(params.min_speed);
    s
}

/// Rounds to the micrometre, the precision of the trace format, so that a
/// trace written and read back reproduces the table bit for bit.
pub fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Uniformly sampled vehicle positions, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    interval: f64,
    samples: Vec<Vec<Position>>,
}

impl Trajectory {
    /// Builds a table from raw samples. Every node needs the same, non-zero
    /// number of samples taken `interval` seconds apart from t = 0.
    pub fn from_samples(interval: f64, samples: Vec<Vec<Position>>) -> Option<Self> {
        let len = samples.first()?.len();
        if len == 0 || !(interval > 0.0) || samples.iter().any(|s| s.len() != len) {
            return None;
        }
        let samples = samples
            .into_iter()
            .map(|track| track.into_iter().map(|p| Position::new(quantize(p.x), quantize(p.y))).collect())
            .collect();
        Some(Self { interval, samples })
    }

    /// Nodes that never move.
    pub fn stationary(positions: &[Position], duration: f64, interval: f64) -> Self {
        let count = (duration / interval).ceil() as usize + 1;
        let samples = positions.iter().map(|p| vec![*p; count]).collect();
        Self::from_samples(interval, samples).expect("stationary trajectory needs at least one node")
    }

    /// Runs the mobility model for `node_count` vehicles over `duration`
    /// seconds using the substreams of `seed`.
    pub fn generate(
        node_count: usize,
        grid: &GridSpec,
        params: &MobilityParams,
        duration: f64,
        seed: u64,
    ) -> Result<Self, MobilityError> {
        params.validate()?;
        let initial = init_placement(node_count, grid, params, &mut rng::placement_stream(seed))?;
        let steps = (duration / params.update_interval).ceil() as usize;
        let samples = initial
            .iter()
            .enumerate()
            .map(|(node, start)| {
                let mut rng = rng::mobility_stream(seed, node);
                let mut state = *start;
                let mut track = Vec::with_capacity(steps + 1);
                track.push(state.position);
                for _ in 0..steps {
                    state = advance(&state, params.update_interval, params, grid, &mut rng);
                    state = maybe_update_speed(&state, params, &mut rng);
                    track.push(state.position);
                }
                track
            })
            .collect();
        Ok(Self::from_samples(params.update_interval, samples).expect("non-empty samples"))
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn node_count(&self) -> usize {
        self.samples.len()
    }

    pub fn sample_count(&self) -> usize {
        self.samples[0].len()
    }

    /// Time of the last sample.
    pub fn duration(&self) -> f64 {
        (self.sample_count() - 1) as f64 * self.interval
    }

    pub fn track(&self, node: usize) -> &[Position] {
        &self.samples[node]
    }

    fn bracket(&self, t: f64) -> (usize, f64) {
        let last = self.sample_count() - 1;
        if last == 0 || t <= 0.0 {
            return (0, 0.0);
        }
        // t > 0, so truncation is floor
        let k = (t / self.interval) as usize;
        if k >= last {
            return (last - 1, 1.0);
        }
        (k, (t - k as f64 * self.interval) / self.interval)
    }

    /// Position at time `t`, linearly interpolated between samples and held
    /// constant past either end.
    pub fn position_at(&self, node: usize, t: f64) -> Position {
        let track = &self.samples[node];
        if track.len() == 1 {
            return track[0];
        }
        let (k, frac) = self.bracket(t);
        if frac == 0.0 {
            track[k]
        } else if frac == 1.0 {
            track[k + 1]
        } else {
            track[k].lerp(&track[k + 1], frac)
        }
    }

    /// Speed estimate at `t`: straight-line displacement over the enclosing
    /// sample interval.
    pub fn speed_at(&self, node: usize, t: f64) -> f64 {
        let track = &self.samples[node];
        if track.len() == 1 {
            return 0.0;
        }
        let (k, _) = self.bracket(t);
        crate::geometry::distance(track[k], track[k + 1]) / self.interval
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_grid() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn lattice_coordinates() {
        let g = default_grid();
        assert_eq!(g.street_x(0), 0.0);
        assert_eq!(g.street_x(10), 1000.0);
        assert_eq!(g.street_y(15), 1000.0);
        assert_eq!(g.vertical_street_at(300.0), Some(3));
        assert_eq!(g.vertical_street_at(350.0), None);
        assert_eq!(g.horizontal_street_at(1000.0 / 15.0 * 4.0), Some(4));
    }

    #[test]
    fn init_placement_rejects_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = init_placement(0, &default_grid(), &MobilityParams::default(), &mut rng).unwrap_err();
        assert_eq!(err, MobilityError::NoVehicles);
    }

    #[test]
    fn init_placement_puts_everyone_on_streets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = default_grid();
        let states = init_placement(25, &g, &MobilityParams::default(), &mut rng).unwrap();
        assert_eq!(states.len(), 25);
        assert!(states.iter().all(|s| g.is_on_street(s)));
    }

    #[test]
    fn single_block_grid_places_on_the_square() {
        let g = GridSpec {
            area_width: 100.0,
            area_height: 100.0,
            blocks_x: 1,
            blocks_y: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = init_placement(1, &g, &MobilityParams::default(), &mut rng).unwrap()[0];
        let p = s.position;
        let on_edge = p.x == 0.0 || p.x == 100.0 || p.y == 0.0 || p.y == 100.0;
        assert!(on_edge, "{p}");
        assert!(g.is_on_street(&s));
    }

    #[test]
    fn mid_block_step_is_exact() {
        let g = default_grid();
        // horizontal street j=3, x=50 mid-block heading east; next intersection at x=100
        let y = g.street_y(3);
        let s = VehicleState {
            position: Position::new(50.0, y),
            heading: Heading::East,
            speed: 10.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let next = advance(&s, 1.0, &MobilityParams::default(), &g, &mut rng);
        assert_eq!(next.position, Position::new(60.0, y));
        assert_eq!(next.heading, Heading::East);
    }

    #[test]
    fn zero_turn_probability_only_turns_at_the_boundary() {
        let g = default_grid();
        let params = MobilityParams {
            turn_prob: 0.0,
            speed_change_prob: 0.0,
            ..MobilityParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = VehicleState {
            position: Position::new(300.0, 10.0),
            heading: Heading::North,
            speed: 10.0,
        };
        for _ in 0..500 {
            let next = advance(&s, 1.0, &params, &g, &mut rng);
            if next.heading != s.heading {
                // a heading change must happen on the boundary
                let p = next.position;
                assert!(p.x == 0.0 || p.x == 1000.0 || p.y == 0.0 || p.y == 1000.0, "{p}");
            }
            s = next;
        }
    }

    #[test]
    fn corner_forces_the_single_legal_turn() {
        let g = default_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for p in [0.0, 0.25, 0.5, 1.0] {
            // top-left corner heading north: only east is possible
            let (_, h) = choose_turn(Heading::North, 0, 15, p, &g, &mut rng);
            assert_eq!(h, Heading::East);
            // bottom-right corner heading east: only north
            let (_, h) = choose_turn(Heading::East, 10, 0, p, &g, &mut rng);
            assert_eq!(h, Heading::North);
        }
    }

    #[test]
    fn boundary_renormalizes_over_turns() {
        let g = default_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut left = 0;
        let n = 20_000;
        for _ in 0..n {
            // top edge heading north: straight illegal, left (west) and right (east) legal
            let (t, _) = choose_turn(Heading::North, 5, 15, 0.25, &g, &mut rng);
            assert_ne!(t, Turn::Straight);
            if t == Turn::Left {
                left += 1;
            }
        }
        let frac = left as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn speed_change_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = VehicleState {
            position: Position::new(0.0, 0.0),
            heading: Heading::North,
            speed: 12.0,
        };
        let frozen = MobilityParams {
            speed_change_prob: 0.0,
            min_speed: 5.0,
            ..MobilityParams::default()
        };
        for _ in 0..100 {
            assert_eq!(maybe_update_speed(&s, &frozen, &mut rng).speed, 12.0);
        }
        let pinned = MobilityParams {
            speed_change_prob: 1.0,
            min_speed: 20.0,
            mean_speed: 20.0,
            ..MobilityParams::default()
        };
        for _ in 0..100 {
            assert_eq!(maybe_update_speed(&s, &pinned, &mut rng).speed, 20.0);
        }
    }

    #[test]
    fn resampled_speed_keeps_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = MobilityParams {
            speed_change_prob: 1.0,
            min_speed: 5.0,
            mean_speed: 10.0,
            ..MobilityParams::default()
        };
        let s = VehicleState {
            position: Position::new(0.0, 0.0),
            heading: Heading::North,
            speed: 10.0,
        };
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = maybe_update_speed(&s, &params, &mut rng).speed;
            assert!((5.0..=15.0).contains(&v));
            sum += v;
        }
        let mean = sum / n as f64;
        assert!((mean - 10.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn placement_occupancy_follows_street_length() {
        // chi-square of vertical vs horizontal street mass, plus per-street
        // counts against the uniform-by-length expectation
        let g = default_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 10_000;
        let states = init_placement(n, &g, &MobilityParams::default(), &mut rng).unwrap();
        let streets = (g.blocks_x + 1 + g.blocks_y + 1) as usize;
        let mut counts = vec![0usize; streets];
        for s in &states {
            let idx = match (g.vertical_street_at(s.position.x), g.horizontal_street_at(s.position.y)) {
                (Some(i), _) if s.heading.is_vertical() => i as usize,
                (_, Some(j)) => (g.blocks_x + 1 + j) as usize,
                _ => panic!("off street"),
            };
            counts[idx] += 1;
        }
        // every street is 1000 m long here, so each gets n / 27 in expectation
        let expected = n as f64 / streets as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 26 degrees of freedom: mean 26, sd sqrt(52) ~ 7.2; 3 sd bound
        assert!(chi2 < 26.0 + 3.0 * 52f64.sqrt(), "chi2 = {chi2}");
    }

    #[test]
    fn trajectory_is_deterministic_and_on_grid() {
        let g = default_grid();
        let params = MobilityParams {
            speed_change_prob: 0.5,
            min_speed: 5.0,
            mean_speed: 10.0,
            turn_prob: 0.5,
            update_interval: 1.0,
        };
        let a = Trajectory::generate(20, &g, &params, 200.0, 11).unwrap();
        let b = Trajectory::generate(20, &g, &params, 200.0, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sample_count(), 201);
        for node in 0..a.node_count() {
            for p in a.track(node) {
                let on = g.vertical_street_at(p.x).is_some() || g.horizontal_street_at(p.y).is_some();
                assert!(on && g.contains(*p), "{p}");
            }
        }
    }

    #[test]
    fn interpolation_and_speed_estimate() {
        let t = Trajectory::from_samples(
            1.0,
            vec![vec![Position::new(0.0, 0.0), Position::new(10.0, 0.0), Position::new(10.0, 5.0)]],
        )
        .unwrap();
        assert_eq!(t.position_at(0, 0.5), Position::new(5.0, 0.0));
        assert_eq!(t.position_at(0, 2.0), Position::new(10.0, 5.0));
        assert_eq!(t.position_at(0, 99.0), Position::new(10.0, 5.0));
        assert_eq!(t.speed_at(0, 0.3), 10.0);
        assert_eq!(t.speed_at(0, 1.5), 5.0);
    }
}
