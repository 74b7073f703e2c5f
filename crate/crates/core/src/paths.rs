//! Càdlàg step paths and the Lévy-walk path functional Φ.
//!
//! A [`StepPath`] stores cumulative values. The inverse
//! e(t) = inf{s : d(s) > t}, range membership and the left limits used by Φ
//! are each one binary search over the time component.
//!
//! For a space path `a` and a monotone time path `d` jumping together, Φ
//! evaluated at t locates the first jump whose cumulative time exceeds t and
//! reads off
//!
//! * `g`, `x`: time and position just before that jump (left limits),
//! * `h`, `y`: time and position right after it,
//!
//! and returns `x` when t is in the range of `d`, otherwise the linear
//! interpolation `x + (t − g)·(y − x)/(h − g)`. The velocity form keeps a
//! walk whose space and time jumps coincide exactly on the diagonal to within
//! one ulp.
//!
//! Range membership uses exact float equality. A misclassified query one ulp
//! away from a stored value moves `w` by at most one ulp because the two
//! branches agree at the boundary.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{invalid, Error, Result};

/// Piecewise-constant right-continuous path starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    dim: usize,
    times: Vec<f64>,
    /// Row-major `times.len() × dim` cumulative values.
    values: Vec<f64>,
}

impl StepPath {
    pub fn new(dim: usize, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if values.len() != times.len() * dim {
            return Err(invalid(
                "values",
                format!("expected {} entries, got {}", times.len() * dim, values.len()),
            ));
        }
        if times.first().is_some_and(|&t| !(t >= 0.0)) {
            return Err(invalid("jump_times", "must be nonnegative"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("jump_times", "must be strictly increasing"));
        }
        Ok(Self { dim, times, values })
    }

    /// Monotone scalar path, as used for the time component.
    pub fn monotone(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.first().is_some_and(|&v| !(v > 0.0)) || values.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(invalid("values", "time path must be strictly increasing from 0"));
        }
        Self::new(1, times, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value after jump `i`.
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Value at index `i − 1`, with index −1 the origin.
    fn value_before(&self, i: usize) -> Option<&[f64]> {
        i.checked_sub(1).map(|j| self.value(j))
    }

    /// Path value at time `s`.
    pub fn at(&self, s: f64) -> Vec<f64> {
        let n = self.times.partition_point(|&tj| tj <= s);
        self.value_before(n)
            .map_or_else(|| vec![0.0; self.dim], <[f64]>::to_vec)
    }

    /// Largest represented value of a scalar path; queries must stay below it.
    pub fn horizon(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Index of the first jump with cumulative value > t.
    fn crossing_index(&self, t: f64) -> Result<usize> {
        debug_assert_eq!(self.dim, 1);
        let j = self.values.partition_point(|&v| v <= t);
        if j == self.values.len() {
            return Err(Error::HorizonExceeded {
                t,
                horizon: self.horizon(),
            });
        }
        Ok(j)
    }
}

/// e(t) = inf{s : d(s) > t}.
pub fn inverse_at(d: &StepPath, t: f64) -> Result<f64> {
    check_monotone(d)?;
    let j = d.crossing_index(t)?;
    Ok(d.times[j])
}

/// Whether t belongs to the range {d(s) : s ≥ 0}, which contains 0.
pub fn range_contains(d: &StepPath, t: f64) -> bool {
    t == 0.0 || d.values.binary_search_by(|v| v.total_cmp(&t)).is_ok()
}

fn check_monotone(d: &StepPath) -> Result<()> {
    if d.dim != 1 {
        return Err(invalid("d", "time path must be scalar"));
    }
    Ok(())
}

fn check_pair(a: &StepPath, d: &StepPath) -> Result<()> {
    check_monotone(d)?;
    if a.len() != d.len() {
        return Err(invalid("a", "space and time paths must share jump times"));
    }
    Ok(())
}

/// Every quantity entering Φ(a, d)(t).
#[derive(Debug, Clone, PartialEq)]
pub struct PhiEvaluation {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub g: f64,
    pub h: f64,
    pub in_range: bool,
    pub w: Vec<f64>,
}

pub fn phi_eval(a: &StepPath, d: &StepPath, t: f64) -> Result<PhiEvaluation> {
    check_pair(a, d)?;
    let j = d.crossing_index(t)?;
    let g = d.value_before(j).map_or(0.0, |v| v[0]);
    let h = d.values[j];
    let x = a
        .value_before(j)
        .map_or_else(|| vec![0.0; a.dim], <[f64]>::to_vec);
    let y = a.value(j).to_vec();
    let in_range = t == g;
    let mut w = x.clone();
    if !in_range {
        interpolate(&mut w, &y, g, h, t);
    }
    Ok(PhiEvaluation {
        t,
        x,
        y,
        g,
        h,
        in_range,
        w,
    })
}

/// Writes Φ(a, d)(t) into `out` without allocating.
pub fn phi_eval_into(a: &StepPath, d: &StepPath, t: f64, out: &mut [f64]) -> Result<()> {
    check_pair(a, d)?;
    let j = d.crossing_index(t)?;
    phi_at_index(a, d, j, t, out);
    Ok(())
}

fn phi_at_index(a: &StepPath, d: &StepPath, j: usize, t: f64, out: &mut [f64]) {
    let g = d.value_before(j).map_or(0.0, |v| v[0]);
    match a.value_before(j) {
        Some(x) => out.copy_from_slice(x),
        None => out.fill(0.0),
    }
    if t != g {
        interpolate(out, a.value(j), g, d.values[j], t);
    }
}

/// Overwrites `x` with x + (t − g)v, v = (y − x)/(h − g), evaluated as
/// t·v + (x − g·v) so that a unit-speed diagonal (x = g, v = 1) returns t
/// exactly.
fn interpolate(x: &mut [f64], y: &[f64], g: f64, h: f64, t: f64) {
    let span = h - g;
    for (xi, yi) in x.iter_mut().zip(y) {
        let v = (yi - *xi) / span;
        *xi = t * v + (*xi - g * v);
    }
}

/// Sampled path w over a time grid, row-major `t.len() × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSamples {
    pub dim: usize,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
}

impl PathSamples {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    /// Σ‖w(t_{i+1}) − w(t_i)‖ over the grid.
    pub fn variation(&self) -> f64 {
        (1..self.t.len())
            .map(|i| {
                self.point(i)
                    .iter()
                    .zip(self.point(i - 1))
                    .map(|(p, q)| (p - q).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum()
    }
}

/// Φ(a, d) over a sorted grid, in one merged sweep.
pub fn phi_path(a: &StepPath, d: &StepPath, grid: &[f64]) -> Result<PathSamples> {
    check_pair(a, d)?;
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(invalid("query_grid", "must be sorted"));
    }
    let dim = a.dim;
    let mut w = vec![0.0; grid.len() * dim];
    let mut j = 0;
    for (i, &t) in grid.iter().enumerate() {
        while j < d.len() && d.values[j] <= t {
            j += 1;
        }
        if j == d.len() {
            return Err(Error::HorizonExceeded {
                t,
                horizon: d.horizon(),
            });
        }
        phi_at_index(a, d, j, t, &mut w[i * dim..(i + 1) * dim]);
    }
    Ok(PathSamples {
        dim,
        t: grid.to_vec(),
        w,
    })
}

/// ‖x‖ ≤ t up to the rounding of the norm itself (4 ulp relative).
pub fn within_speed_bound(x: &[f64], t: f64) -> bool {
    let norm = if x.len() == 1 {
        x[0].abs()
    } else {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    norm <= t * (1.0 + 4.0 * f64::EPSILON)
}

/// Number of representable doubles between `a` and `b`.
pub fn ulp_distance(a: f64, b: f64) -> u64 {
    fn key(v: f64) -> i64 {
        let bits = v.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    }
    key(a).abs_diff(key(b))
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV dump of full Φ evaluations:
/// `t, w_1..w_m, x_1..x_m, y_1..y_m, g, h, in_range`.
pub fn write_phi_csv<W: Write>(evals: &[PhiEvaluation], dim: usize, mut out: W) -> Result<()> {
    let mut header = String::from("t");
    for prefix in ["w", "x", "y"] {
        for i in 1..=dim {
            write!(header, ",{prefix}_{i}").unwrap();
        }
    }
    header.push_str(",g,h,in_range\n");
    out.write_all(header.as_bytes())?;
    for e in evals {
        let mut line = fmt_f64(e.t);
        for v in e.w.iter().chain(&e.x).chain(&e.y) {
            line.push(',');
            line.push_str(&fmt_f64(*v));
        }
        write!(line, ",{},{},{}", fmt_f64(e.g), fmt_f64(e.h), e.in_range).unwrap();
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
