//! Plain-text mobility traces.
//!
//! One sample per line, space separated, node-major:
//!
//! ```text
//! <node-id> <time> <x> <y>
//! 0 0.000000 1.000000 2.000000
//! ```
//!
//! Times and coordinates carry six decimals. Every node must have the same
//! uniformly spaced sample times starting at zero.

use std::fmt::Write as _;

use crate::error::TraceError;
use crate::geometry::Position;
use crate::mobility::Trajectory;

pub fn export_trace(trajectory: &Trajectory) -> String {
    let mut out = String::with_capacity(trajectory.node_count() * trajectory.sample_count() * 32);
    let dt = trajectory.interval();
    for node in 0..trajectory.node_count() {
        for (k, p) in trajectory.track(node).iter().enumerate() {
            let _ = writeln!(out, "{node} {:.6} {:.6} {:.6}", k as f64 * dt, p.x, p.y);
        }
    }
    out
}

fn field<T: std::str::FromStr>(parts: &[&str], idx: usize, name: &str, line: usize) -> Result<T, TraceError> {
    parts[idx].parse().map_err(|_| TraceError::Malformed {
        line,
        message: format!("cannot parse {name} `{}`", parts[idx]),
    })
}

pub fn import_trace(text: &str) -> Result<Trajectory, TraceError> {
    let mut samples: Vec<Vec<(f64, Position)>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(TraceError::Malformed {
                line,
                message: format!("expected 4 fields, found {}", parts.len()),
            });
        }
        let node: usize = field(&parts, 0, "node id", line)?;
        let t: f64 = field(&parts, 1, "time", line)?;
        let x: f64 = field(&parts, 2, "x", line)?;
        let y: f64 = field(&parts, 3, "y", line)?;
        if !(t.is_finite() && x.is_finite() && y.is_finite()) {
            return Err(TraceError::Malformed {
                line,
                message: "non-finite value".into(),
            });
        }
        if node >= samples.len() {
            if node != samples.len() {
                return Err(TraceError::Malformed {
                    line,
                    message: format!("node {node} appears before node {}", samples.len()),
                });
            }
            samples.push(Vec::new());
        }
        let track = &mut samples[node];
        if let Some(&(prev, _)) = track.last() {
            if t <= prev {
                return Err(TraceError::Malformed {
                    line,
                    message: format!("time {t} does not increase"),
                });
            }
        }
        track.push((t, Position::new(x, y)));
    }
    let first = samples.first().ok_or(TraceError::Empty)?;
    let len = first.len();
    let interval = if len > 1 { first[1].0 - first[0].0 } else { 1.0 };
    for (node, track) in samples.iter().enumerate() {
        if track.len() != len {
            return Err(TraceError::NonUniform(format!(
                "node {node} has {} samples, node 0 has {len}",
                track.len()
            )));
        }
        for (k, &(t, _)) in track.iter().enumerate() {
            if (t - k as f64 * interval).abs() > 1e-5 {
                return Err(TraceError::NonUniform(format!(
                    "node {node} sample {k} at t={t}, expected {}",
                    k as f64 * interval
                )));
            }
        }
    }
    let positions = samples
        .into_iter()
        .map(|track| track.into_iter().map(|(_, p)| p).collect())
        .collect();
    Trajectory::from_samples(interval, positions).ok_or(TraceError::Empty)
}

/// Imports a trace and checks it covers exactly `expected_nodes` vehicles.
pub fn import_trace_for(text: &str, expected_nodes: usize) -> Result<Trajectory, TraceError> {
    let t = import_trace(text)?;
    if t.node_count() != expected_nodes {
        return Err(TraceError::NodeCountMismatch {
            expected: expected_nodes,
            found: t.node_count(),
        });
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{GridSpec, MobilityParams};

    #[test]
    fn single_sample_line_format() {
        let t = Trajectory::from_samples(1.0, vec![vec![Position::new(1.0, 2.0)]]).unwrap();
        assert_eq!(export_trace(&t), "0 0.000000 1.000000 2.000000\n");
    }

    #[test]
    fn round_trip_is_exact() {
        let params = MobilityParams {
            speed_change_prob: 0.5,
            min_speed: 3.3,
            mean_speed: 10.0,
            turn_prob: 0.5,
            update_interval: 1.0,
        };
        let t = Trajectory::generate(25, &GridSpec::default(), &params, 1000.0, 4).unwrap();
        let text = export_trace(&t);
        assert_eq!(text.lines().count(), 25 * 1001);
        let back = import_trace(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn truncated_line_is_reported() {
        let text = "0 0.000000 1.000000 2.000000\n0 1.000000 1.5\n";
        let err = import_trace(text).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn node_count_must_match() {
        let text = "0 0.000000 1.000000 2.000000\n1 0.000000 3.000000 4.000000\n";
        let err = import_trace_for(text, 3).unwrap_err();
        assert_eq!(err, TraceError::NodeCountMismatch { expected: 3, found: 2 });
    }

    #[test]
    fn ragged_sampling_is_rejected() {
        let text = "0 0.000000 1 2\n0 1.000000 1 3\n1 0.000000 3 4\n";
        assert!(matches!(import_trace(text), Err(TraceError::NonUniform(_))));
        assert_eq!(import_trace(""), Err(TraceError::Empty));
    }
}
