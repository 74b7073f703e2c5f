//! The coupled stable limit pair (A, D) and the limit process L = Φ(A, D).
//!
//! (A, D) is built from a shot-noise series on an operational-time window
//! [0, u]: with Γ_1 < Γ_2 < … the arrival times of a unit Poisson process,
//! the k-th largest D-jump is the inverse of the tail of the Lévy measure
//! φ_D(r, ∞) = r^{-β}/Γ(1−β) at level Γ_k/u, it occurs at a uniform time in
//! [0, u], and it is paired with the A-jump r_k·θ_k for an independent
//! direction θ_k ~ λ.

use std::io::Write;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::paths::{fmt_f64, phi_eval_into, phi_path, PathSamples, StepPath};
use crate::stable::{
    sample_one_sided_stable, sample_skewed_stable, sample_symmetric_stable, DirectionLaw,
    StableIndex,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep the K largest jumps.
    MaxJumps(usize),
    /// Keep every jump of size at least ε.
    MinJump(f64),
}

impl Truncation {
    fn validate(self) -> Result<()> {
        match self {
            Self::MaxJumps(0) => Err(invalid("truncation", "max_jumps must be positive")),
            Self::MinJump(e) if !(e.is_finite() && e > 0.0) => {
                Err(invalid("truncation", format!("min_jump {e} is not positive")))
            }
            _ => Ok(()),
        }
    }
}

/// φ_D(r, ∞) = r^{-β}/Γ(1−β).
pub fn levy_tail(beta: f64, r: f64) -> f64 {
    r.powf(-beta) / gamma(1.0 - beta)
}

/// Jump size at tail level v: r = (Γ(1−β)·v)^{-1/β}.
pub fn tail_inverse(beta: f64, v: f64) -> f64 {
    (gamma(1.0 - beta) * v).powf(-1.0 / beta)
}

/// Expected total size of the D-jumps below ε on a window of length u:
/// u·β ε^{1−β} / ((1−β) Γ(1−β)).
pub fn expected_truncated_mass(beta: f64, u: f64, min_jump: f64) -> f64 {
    u * beta * min_jump.powf(1.0 - beta) / ((1.0 - beta) * gamma(1.0 - beta))
}

/// Truncated series representation of (A, D) on [0, u].
#[derive(Debug, Clone)]
pub struct JumpSeries {
    pub beta: f64,
    pub dim: usize,
    pub horizon: f64,
    pub truncation: Truncation,
    /// Entries in decreasing order of size.
    pub arrivals: Vec<f64>,
    pub sizes: Vec<f64>,
    /// Row-major `sizes.len() × dim`.
    pub directions: Vec<f64>,
}

impl JumpSeries {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn direction(&self, k: usize) -> &[f64] {
        &self.directions[k * self.dim..(k + 1) * self.dim]
    }

    /// CSV dump `U, r, theta_1..theta_m`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("U,r");
        for i in 1..=self.dim {
            header.push_str(&format!(",theta_{i}"));
        }
        header.push('\n');
        out.write_all(header.as_bytes())?;
        for k in 0..self.len() {
            let mut line = format!("{},{}", fmt_f64(self.arrivals[k]), fmt_f64(self.sizes[k]));
            for c in self.direction(k) {
                line.push(',');
                line.push_str(&fmt_f64(*c));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

pub fn sample_jump_series<R: Rng + ?Sized>(
    beta: f64,
    law: &DirectionLaw,
    horizon: f64,
    truncation: Truncation,
    rng: &mut R,
) -> Result<JumpSeries> {
    StableIndex::subordinator(beta)?;
    truncation.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("{horizon} is not positive")));
    }
    let dim = law.dim();
    let g = gamma(1.0 - beta);
    let mut series = JumpSeries {
        beta,
        dim,
        horizon,
        truncation,
        arrivals: Vec::new(),
        sizes: Vec::new(),
        directions: Vec::new(),
    };
    let mut level = 0.0;
    let mut theta = vec![0.0; dim];
    loop {
        if let Truncation::MaxJumps(k) = truncation {
            if series.len() == k {
                break;
            }
        }
        level += rng.sample::<f64, _>(Exp1);
        let r = (g * level / horizon).powf(-1.0 / beta);
        if let Truncation::MinJump(eps) = truncation {
            if r < eps {
                break;
            }
        }
        series.sizes.push(r);
        series.arrivals.push(horizon * rng.random::<f64>());
        law.sample_into(rng, &mut theta);
        series.directions.extend_from_slice(&theta);
    }
    Ok(series)
}

/// Step paths A (in R^m) and D (scalar) sharing their jump times.
#[derive(Debug, Clone)]
pub struct LimitPathPair {
    pub space: StepPath,
    pub time: StepPath,
}

pub fn build_limit_pair(series: &JumpSeries) -> Result<LimitPathPair> {
    build_from_chunks(std::slice::from_ref(series))
}

fn build_from_chunks(chunks: &[JumpSeries]) -> Result<LimitPathPair> {
    let dim = chunks
        .first()
        .map(|c| c.dim)
        .ok_or_else(|| invalid("series", "empty"))?;
    let mut order: Vec<(f64, usize, usize)> = Vec::new();
    let mut offset = 0.0;
    for (ci, c) in chunks.iter().enumerate() {
        order.extend(c.arrivals.iter().enumerate().map(|(k, &u)| (offset + u, ci, k)));
        offset += c.horizon;
    }
    if order.is_empty() {
        return Err(invalid("series", "no jumps"));
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut times = Vec::with_capacity(order.len());
    let mut d = Vec::with_capacity(order.len());
    let mut a = Vec::with_capacity(order.len() * dim);
    let mut d_acc = 0.0;
    let mut a_acc = vec![0.0; dim];
    for (u, ci, k) in order {
        let r = chunks[ci].sizes[k];
        // A jump below the resolution of the accumulated D leaves no
        // interval to traverse and is dropped.
        if d_acc + r == d_acc {
            continue;
        }
        d_acc += r;
        for (acc, th) in a_acc.iter_mut().zip(chunks[ci].direction(k)) {
            *acc += r * th;
        }
        times.push(u);
        d.push(d_acc);
        a.extend_from_slice(&a_acc);
    }
    Ok(LimitPathPair {
        space: StepPath::new(dim, times.clone(), a)?,
        time: StepPath::monotone(times, d)?,
    })
}

impl LimitPathPair {
    /// D at the end of the simulated window; L is defined strictly below it.
    pub fn time_horizon(&self) -> f64 {
        self.time.horizon()
    }

    /// (A(u), D(u)) at operational time u.
    pub fn at_operational(&self, u: f64) -> (Vec<f64>, f64) {
        (self.space.at(u), self.time.at(u)[0])
    }

    pub fn limit_process_at(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.space.dim()];
        phi_eval_into(&self.space, &self.time, t, &mut out)?;
        Ok(out)
    }

    pub fn limit_process_on_grid(&self, grid: &[f64]) -> Result<PathSamples> {
        phi_path(&self.space, &self.time, grid)
    }

    /// ∫_0^T e^{-st} e^{i⟨k, L(t)⟩} dt, integrated exactly over the linear
    /// pieces of L. Returns (re, im).
    pub fn laplace_fourier(&self, k: &[f64], s: f64, upto: f64) -> Result<(f64, f64)> {
        if !(upto < self.time_horizon()) {
            return Err(crate::error::Error::HorizonExceeded {
                t: upto,
                horizon: self.time_horizon(),
            });
        }
        let dim = self.space.dim();
        let tv = self.time.values();
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        let mut g = 0.0;
        let mut x = vec![0.0; dim];
        for (j, &h) in tv.iter().enumerate() {
            if g >= upto {
                break;
            }
            let y = self.space.value(j);
            let end = h.min(upto);
            // On [g, h]: L = x + (t − g)·v with v = (y − x)/(h − g), |v| = 1.
            let kx: f64 = k.iter().zip(&x).map(|(a, b)| a * b).sum();
            let kv: f64 = k
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(a, (yy, xx))| a * (yy - xx))
                .sum::<f64>()
                / (h - g);
            let rate = num_complex::Complex64::new(-s, kv);
            let start = num_complex::Complex64::new(-s * g, kx).exp();
            let len = end - g;
            let z = rate * len;
            // (e^{z} − 1)/rate, with a series for small |z|.
            let factor = if z.norm() < 1e-6 {
                len * (1.0 + z / 2.0 + z * z / 6.0)
            } else {
                (z.exp() - 1.0) / rate
            };
            acc += start * factor;
            g = h;
            x.copy_from_slice(y);
        }
        Ok((acc.re, acc.im))
    }
}

/// Draws (A, D) on as many consecutive operational windows of length `chunk`
/// as needed for D to exceed `t_max`, so that L is defined on [0, t_max].
pub fn sample_limit_pair_covering<R: Rng + ?Sized>(
    beta: f64,
    law: &DirectionLaw,
    t_max: f64,
    chunk: f64,
    truncation: Truncation,
    rng: &mut R,
) -> Result<(LimitPathPair, Vec<JumpSeries>)> {
    let mut chunks = Vec::new();
    let mut reach = 0.0;
    while reach <= t_max {
        let s = sample_jump_series(beta, law, chunk, truncation, rng)?;
        reach += s.sizes.iter().sum::<f64>();
        chunks.push(s);
    }
    Ok((build_from_chunks(&chunks)?, chunks))
}

/// Operational window whose typical D-reach is `t`: D(u) ~ u^{1/β} D(1).
pub fn default_chunk(beta: f64, t: f64) -> f64 {
    t.powf(beta)
}

/// Truncation for an experiment at physical scale `t`: keep jumps above
/// ε = 1e-6·t. At β = 1/2 and t = u = 1 the discarded D-mass is about 6e-4
/// (see [`expected_truncated_mass`]).
pub fn default_truncation(t: f64) -> Truncation {
    Truncation::MinJump(1e-6 * t)
}

/// One draw of A(t) for the β ∈ (1, 2) walk limit, normalised so that
/// E[exp(i⟨k, A(t)⟩)] = exp(t·∫(−i⟨k,θ⟩)^β λ(dθ)) (a proper characteristic
/// function in this range of β).
pub fn stable_limit_marginal<R: Rng + ?Sized>(
    beta: f64,
    law: &DirectionLaw,
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(invalid("beta", format!("{beta} is outside (1, 2)")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid("t", format!("{t} is negative")));
    }
    let mean = law.mean();
    if mean.iter().map(|c| c * c).sum::<f64>().sqrt() > 1e-12 {
        return Err(invalid("direction_law", "E[Λ] must vanish"));
    }
    let dim = law.dim();
    let cos = (std::f64::consts::PI * beta / 2.0).cos().abs();
    if law.is_symmetric_1d() {
        let scale = (cos * t).powf(1.0 / beta);
        return Ok(vec![sample_symmetric_stable(beta, scale, rng)]);
    }
    match law.atom_list() {
        // Independent totally skewed components along each atom.
        Some(atoms) => {
            let mut out = vec![0.0; dim];
            for (theta, w) in atoms {
                let z = sample_skewed_stable(beta, (cos * w * t).powf(1.0 / beta), rng);
                out.iter_mut().zip(theta).for_each(|(o, th)| *o += z * th);
            }
            Ok(out)
        }
        // Sub-Gaussian: √V·G with V positive (β/2)-stable, G ~ N(0, 2γ²I).
        None => {
            let gamma_b = cos * t * abs_moment_uniform(dim, beta);
            let gamma_scale = gamma_b.powf(1.0 / beta);
            let v = sample_one_sided_stable(beta / 2.0, rng)?;
            Ok((0..dim)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    v.sqrt() * std::f64::consts::SQRT_2 * gamma_scale * g
                })
                .collect())
        }
    }
}

/// E|θ_1|^p for θ uniform on the unit sphere of R^m.
pub fn abs_moment_uniform(dim: usize, p: f64) -> f64 {
    let m = dim as f64;
    gamma((p + 1.0) / 2.0) * gamma(m / 2.0) / (std::f64::consts::PI.sqrt() * gamma((m + p) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::f64::consts::PI;

    #[test]
    fn tail_inversion_round_trip() {
        let v = 4.0 / PI.sqrt();
        let r = tail_inverse(0.5, v);
        assert!((r - 1.0 / 16.0).abs() < 1e-14);
        assert!((levy_tail(0.5, 1.0 / 16.0) - v).abs() < 1e-12);
    }

    #[test]
    fn doubling_horizon_scales_sizes() {
        let law = DirectionLaw::symmetric_1d();
        let a = sample_jump_series(0.5, &law, 1.0, Truncation::MaxJumps(50), &mut stream(1, 0))
            .unwrap();
        let b = sample_jump_series(0.5, &law, 2.0, Truncation::MaxJumps(50), &mut stream(1, 0))
            .unwrap();
        for (ra, rb) in a.sizes.iter().zip(&b.sizes) {
            assert!((rb / ra - 4.0).abs() < 1e-12);
        }
        assert!(a.sizes.windows(2).all(|w| w[0] > w[1]));
        assert!(a.arrivals.iter().all(|&u| (0.0..=1.0).contains(&u)));
    }

    #[test]
    fn rejects_bad_inputs() {
        let law = DirectionLaw::symmetric_1d();
        let mut rng = stream(1, 0);
        assert!(sample_jump_series(1.0, &law, 1.0, Truncation::MaxJumps(5), &mut rng).is_err());
        assert!(sample_jump_series(0.5, &law, 1.0, Truncation::MaxJumps(0), &mut rng).is_err());
        assert!(sample_jump_series(0.5, &law, 1.0, Truncation::MinJump(0.0), &mut rng).is_err());
        assert!(sample_jump_series(0.5, &law, -1.0, Truncation::MaxJumps(5), &mut rng).is_err());
    }

    #[test]
    fn single_jump_pair() {
        let series = JumpSeries {
            beta: 0.5,
            dim: 1,
            horizon: 1.0,
            truncation: Truncation::MaxJumps(1),
            arrivals: vec![0.5],
            sizes: vec![2.0],
            directions: vec![1.0],
        };
        let pair = build_limit_pair(&series).unwrap();
        assert_eq!(pair.at_operational(1.0), (vec![2.0], 2.0));
        assert_eq!(pair.at_operational(0.4), (vec![0.0], 0.0));
        assert_eq!(pair.limit_process_at(1.5).unwrap(), vec![1.5]);
    }

    #[test]
    fn unresolvable_jumps_are_dropped() {
        let series = JumpSeries {
            beta: 0.5,
            dim: 1,
            horizon: 1.0,
            truncation: Truncation::MaxJumps(3),
            arrivals: vec![0.1, 0.2, 0.3],
            sizes: vec![1e12, 1e-6, 2e-6],
            directions: vec![1.0, -1.0, 1.0],
        };
        let pair = build_limit_pair(&series).unwrap();
        assert_eq!(pair.time.len(), 1);
        assert_eq!(pair.at_operational(0.5), (vec![1e12], 1e12));
    }

    #[test]
    fn truncated_mass_matches_discarded_jumps() {
        // Discarded jumps between ε and ε/1000 carry (1 − 1000^{β−1}) of the
        // expected truncated mass; the rest is below the resolution used here.
        let beta = 0.5;
        let eps = 1e-2;
        let fine = eps / 1000.0;
        let law = DirectionLaw::symmetric_1d();
        let n = 4000;
        let total: f64 = (0..n)
            .map(|i| {
                let s = sample_jump_series(beta, &law, 1.0, Truncation::MinJump(fine), &mut stream(2, i))
                    .unwrap();
                s.sizes.iter().filter(|&&r| r < eps).sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        let expected =
            expected_truncated_mass(beta, 1.0, eps) - expected_truncated_mass(beta, 1.0, fine);
        assert!((total - expected).abs() < 0.1 * expected, "{total} vs {expected}");
    }

    #[test]
    fn point_mass_limit_is_identity() {
        let law = DirectionLaw::point_mass(vec![1.0]).unwrap();
        let (pair, _) =
            sample_limit_pair_covering(0.5, &law, 2.0, 1.0, Truncation::MinJump(1e-6), &mut stream(3, 0))
                .unwrap();
        for i in 0..200 {
            let t = 0.01 * f64::from(i);
            assert_eq!(pair.limit_process_at(t).unwrap(), vec![t]);
        }
    }

    #[test]
    fn support_cone_and_speed_bound() {
        let law = DirectionLaw::uniform_sphere(2).unwrap();
        for i in 0..200 {
            let (pair, _) = sample_limit_pair_covering(
                0.6,
                &law,
                3.0,
                1.0,
                Truncation::MinJump(1e-5),
                &mut stream(4, i),
            )
            .unwrap();
            for u in [0.1, 0.5, 1.0] {
                let (a, d) = pair.at_operational(u);
                assert!(a.iter().map(|c| c * c).sum::<f64>().sqrt() <= d * (1.0 + 1e-12));
            }
            for j in 0..30 {
                let t = 0.1 * f64::from(j);
                let l = pair.limit_process_at(t).unwrap();
                assert!(l[0].hypot(l[1]) <= t * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn exact_laplace_fourier_agrees_with_fine_trapezoid() {
        let law = DirectionLaw::symmetric_1d();
        let (pair, _) =
            sample_limit_pair_covering(0.5, &law, 4.0, 2.0, Truncation::MinJump(1e-4), &mut stream(5, 0))
                .unwrap();
        let (k, s, upto) = (1.3, 0.7, 4.0);
        let (re, im) = pair.laplace_fourier(&[k], s, upto).unwrap();
        let n = 400_000;
        let grid: Vec<f64> = (0..=n).map(|i| upto * f64::from(i) / f64::from(n)).collect();
        let path = pair.limit_process_on_grid(&grid).unwrap();
        let h = upto / f64::from(n);
        let (mut tr, mut ti) = (0.0, 0.0);
        for (i, &t) in grid.iter().enumerate() {
            let wgt = if i == 0 || i == grid.len() - 1 { 0.5 } else { 1.0 };
            let phase = k * path.point(i)[0];
            tr += wgt * h * (-s * t).exp() * phase.cos();
            ti += wgt * h * (-s * t).exp() * phase.sin();
        }
        assert!((re - tr).abs() < 1e-6 && (im - ti).abs() < 1e-6, "{re},{im} vs {tr},{ti}");
    }

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn subordinator_laplace_transform() {
        let law = DirectionLaw::symmetric_1d();
        let beta = 0.5;
        let n = 20_000;
        let ds: Vec<f64> = (0..n)
            .map(|i| {
                let s = sample_jump_series(beta, &law, 1.0, Truncation::MinJump(1e-8), &mut stream(6, i))
                    .unwrap();
                s.sizes.iter().sum()
            })
            .collect();
        for s in [0.5_f64, 1.0, 2.0] {
            let v: Vec<f64> = ds.iter().map(|d| (-s * d).exp()).collect();
            let (m, se) = mean_se(&v);
            let target = (-s.powf(beta)).exp();
            assert!((m - target).abs() < 4.0 * se, "s={s}: {m} vs {target}");
        }
    }

    fn cf_check(law: &DirectionLaw, k: &[f64], target: f64, seed: u64) {
        let beta = 1.5;
        let n = 100_000;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let a = stable_limit_marginal(beta, law, 1.0, &mut stream(seed, i)).unwrap();
                k.iter().zip(&a).map(|(p, q)| p * q).sum::<f64>().cos()
            })
            .collect();
        let (m, se) = mean_se(&vals);
        assert!((m - target).abs() < 4.0 * se, "{m} vs {target} (se {se})");
    }

    #[test]
    fn stable_marginal_characteristic_functions() {
        let beta: f64 = 1.5;
        let c = (PI * beta / 2.0).cos().abs();
        cf_check(&DirectionLaw::symmetric_1d(), &[1.0], (-c).exp(), 7);
        // Three planar atoms at 120°: zero mean, not symmetric.
        let atoms: Vec<(Vec<f64>, f64)> = (0..3)
            .map(|i| {
                let a = 2.0 * PI * f64::from(i) / 3.0;
                (vec![a.cos(), a.sin()], 1.0 / 3.0)
            })
            .collect();
        let law = DirectionLaw::atoms(&atoms).unwrap();
        let k = [0.8, 0.3];
        // Re exp(ψ_A(k)) with ψ_A(k) = Σ w (−i⟨k,θ⟩)^β.
        let psi: num_complex::Complex64 = atoms
            .iter()
            .map(|(th, w)| {
                let kt = k[0] * th[0] + k[1] * th[1];
                *w * num_complex::Complex64::new(0.0, -kt).powf(beta)
            })
            .sum();
        cf_check(&law, &k, psi.exp().re, 8);
        let law = DirectionLaw::uniform_sphere(3).unwrap();
        let target = (-c * abs_moment_uniform(3, beta)).exp();
        cf_check(&law, &[1.0, 0.0, 0.0], target, 9);
    }

    #[test]
    fn stable_marginal_guards() {
        let mut rng = stream(1, 0);
        let law = DirectionLaw::point_mass(vec![1.0]).unwrap();
        assert!(stable_limit_marginal(1.5, &law, 1.0, &mut rng).is_err());
        let law = DirectionLaw::symmetric_1d();
        assert!(stable_limit_marginal(0.5, &law, 1.0, &mut rng).is_err());
        assert_eq!(stable_limit_marginal(1.5, &law, 0.0, &mut rng).unwrap(), vec![0.0]);
    }

    #[test]
    fn uniform_abs_moment() {
        assert!((abs_moment_uniform(1, 1.5) - 1.0).abs() < 1e-12);
        // m = 3: θ_1 is uniform on [−1, 1], E|θ_1|^p = 1/(p + 1).
        assert!((abs_moment_uniform(3, 1.5) - 0.4).abs() < 1e-12);
    }
}
