//! Random inputs of the walk: stable variables, moving times and directions.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};

const UNIT_TOL: f64 = 1e-12;

/// Stability index β ∈ (0, 2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableIndex(f64);

impl StableIndex {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 && beta <= 2.0 {
            Ok(Self(beta))
        } else {
            Err(invalid("beta", format!("{beta} is outside (0, 2]")))
        }
    }

    /// Index usable for subordinator-type operations, β ∈ (0, 1).
    pub fn subordinator(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 && beta < 1.0 {
            Ok(Self(beta))
        } else {
            Err(invalid("beta", format!("{beta} is outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probability law of the step directions on the unit sphere of R^m.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionLaw {
    Atoms {
        dim: usize,
        /// Row-major `weights.len() × dim` unit vectors.
        points: Vec<f64>,
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
    UniformSphere {
        dim: usize,
    },
}

impl DirectionLaw {
    /// Finite-atom law. Weights must be positive and sum to one, every atom
    /// must have unit norm, and the atoms must span R^m.
    pub fn atoms(atoms: &[(Vec<f64>, f64)]) -> Result<Self> {
        let dim = atoms
            .first()
            .map(|(p, _)| p.len())
            .ok_or_else(|| invalid("direction_law", "no atoms"))?;
        if dim == 0 {
            return Err(invalid("direction_law", "dimension must be at least 1"));
        }
        let mut points = Vec::with_capacity(atoms.len() * dim);
        let mut weights = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            if p.len() != dim {
                return Err(invalid("direction_law", "atoms of mixed dimension"));
            }
            let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(invalid("direction_law", format!("atom {p:?} has norm {norm}")));
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(invalid("direction_law", format!("weight {w} is not positive")));
            }
            points.extend_from_slice(p);
            weights.push(*w);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > UNIT_TOL {
            return Err(invalid("direction_law", format!("weights sum to {total}")));
        }
        if rank(&points, dim) < dim {
            return Err(invalid("direction_law", "atoms do not span R^m"));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self::Atoms {
            dim,
            points,
            weights,
            cumulative,
        })
    }

    pub fn uniform_sphere(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("direction_law", "dimension must be at least 1"));
        }
        Ok(Self::UniformSphere { dim })
    }

    /// λ = (δ₊₁ + δ₋₁)/2 on the real line.
    pub fn symmetric_1d() -> Self {
        Self::atoms(&[(vec![1.0], 0.5), (vec![-1.0], 0.5)]).expect("valid law")
    }

    /// λ = δ_θ. Only spans R^m when m = 1.
    pub fn point_mass(direction: Vec<f64>) -> Result<Self> {
        Self::atoms(&[(direction, 1.0)])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Atoms { dim, .. } | Self::UniformSphere { dim } => *dim,
        }
    }

    /// Atom list `(θ, w)`; `None` for continuous laws.
    pub fn atom_list(&self) -> Option<Vec<(&[f64], f64)>> {
        match self {
            Self::Atoms {
                dim,
                points,
                weights,
                ..
            } => Some(points.chunks(*dim).zip(weights.iter().copied()).collect()),
            Self::UniformSphere { .. } => None,
        }
    }

    /// E[Λ].
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Self::Atoms {
                dim,
                points,
                weights,
                ..
            } => {
                let mut m = vec![0.0; *dim];
                for (p, w) in points.chunks(*dim).zip(weights) {
                    for (mi, pi) in m.iter_mut().zip(p) {
                        *mi += w * pi;
                    }
                }
                m
            }
            Self::UniformSphere { dim } => vec![0.0; *dim],
        }
    }

    /// True for λ = (δ₊₁ + δ₋₁)/2.
    pub fn is_symmetric_1d(&self) -> bool {
        match self {
            Self::Atoms {
                dim: 1,
                points,
                weights,
                ..
            } => {
                points.len() == 2
                    && points[0] == -points[1]
                    && (weights[0] - 0.5).abs() <= UNIT_TOL
                    && (weights[1] - 0.5).abs() <= UNIT_TOL
            }
            Self::UniformSphere { dim: 1 } => true,
            _ => false,
        }
    }

    /// Writes one draw of Λ into `out` (length m).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Atoms {
                dim,
                points,
                cumulative,
                ..
            } => {
                let idx = if cumulative.len() == 1 {
                    0
                } else {
                    let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                    cumulative
                        .partition_point(|&c| c <= u)
                        .min(cumulative.len() - 1)
                };
                out.copy_from_slice(&points[idx * dim..(idx + 1) * dim]);
            }
            Self::UniformSphere { .. } => loop {
                for c in out.iter_mut() {
                    *c = rng.sample(StandardNormal);
                }
                let norm = out.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 0.0 {
                    out.iter_mut().for_each(|c| *c /= norm);
                    break;
                }
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.sample_into(rng, &mut v);
        v
    }
}

fn rank(points: &[f64], dim: usize) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in points.chunks(dim) {
        let mut v = p.to_vec();
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= proj * c);
        }
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-9 {
            basis.push(v.into_iter().map(|c| c / n).collect());
        }
        if basis.len() == dim {
            break;
        }
    }
    basis.len()
}

/// Law of the i.i.d. moving times J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MovingTimeLaw {
    /// P(J > x) = (x/x0)^(-β) for x ≥ x0.
    Pareto { beta: f64, x0: f64 },
    /// One-sided stable with E[exp(-sJ)] = exp(-s^β).
    ExactStable { beta: f64 },
    Exponential { rate: f64 },
}

impl MovingTimeLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Pareto { beta, x0 } => {
                if !(beta > 0.0 && beta < 2.0) {
                    return Err(invalid("moving_time.beta", format!("{beta} is outside (0, 2)")));
                }
                if !(x0.is_finite() && x0 > 0.0) {
                    return Err(invalid("moving_time.x0", format!("{x0} is not positive")));
                }
            }
            Self::ExactStable { beta } => {
                StableIndex::subordinator(beta)?;
            }
            Self::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(invalid("moving_time.rate", format!("{rate} is not positive")));
                }
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            Self::Pareto { beta, .. } | Self::ExactStable { beta } => Some(beta),
            Self::Exponential { .. } => None,
        }
    }

    /// E[J], when finite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Self::Pareto { beta, x0 } if beta > 1.0 => Some(beta * x0 / (beta - 1.0)),
            Self::Exponential { rate } => Some(1.0 / rate),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Pareto { beta, x0 } => {
                let u: f64 = rng.sample(Open01);
                x0 * u.powf(-1.0 / beta)
            }
            Self::ExactStable { beta } => kanter(beta, rng),
            Self::Exponential { rate } => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
        }
    }

    /// Scaling b_n with b_n·(T(n) − centering) ⟹ D.
    ///
    /// For Pareto with β < 1 the tail condition n·P(b_n J > s) → s^{-β}/Γ(1−β)
    /// gives b_n = (n Γ(1−β))^{-1/β} / x0; for β ∈ (1, 2) the same condition
    /// with |Γ(1−β)| is used. Real-valued `n` serves the continuous scale b(c).
    pub fn normalizer(&self, n: f64) -> Result<f64> {
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid("n", format!("{n} is not positive")));
        }
        match *self {
            Self::ExactStable { beta } => Ok(n.powf(-1.0 / beta)),
            Self::Pareto { beta, x0 } if beta != 1.0 => {
                Ok((n * gamma(1.0 - beta).abs()).powf(-1.0 / beta) / x0)
            }
            _ => Err(invalid("moving_time", format!("no normalizer configured for {self:?}"))),
        }
    }
}

/// One draw of D with E[exp(-sD)] = exp(-s^β), β ∈ (0, 1).
pub fn sample_one_sided_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<f64> {
    StableIndex::subordinator(beta)?;
    Ok(kanter(beta, rng))
}

// Kanter's representation: D = (a(U)/E)^{(1-β)/β} with U ~ U(0, π), E ~ Exp(1)
// and a(u) = (sin βu / sin u)^{1/(1-β)} · sin((1-β)u) / sin βu.
fn kanter<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    loop {
        let u = PI * rng.sample::<f64, _>(Open01);
        let e: f64 = rng.sample(Exp1);
        let a = ((beta * u).sin() / u.sin()).powf(1.0 / (1.0 - beta)) * ((1.0 - beta) * u).sin()
            / (beta * u).sin();
        let d = (a / e).powf((1.0 - beta) / beta);
        if d > 0.0 && d.is_finite() {
            return d;
        }
    }
}

/// Symmetric stable draw with E[exp(ikX)] = exp(-|σk|^α), α ∈ (0, 2].
pub fn sample_symmetric_stable<R: Rng + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.sample::<f64, _>(Open01) - 0.5);
    let w: f64 = rng.sample(Exp1);
    let x = if (alpha - 1.0).abs() < 1e-12 {
        v.tan()
    } else {
        (alpha * v).sin() / v.cos().powf(1.0 / alpha)
            * ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha)
    };
    scale * x
}

/// Totally right-skewed stable draw, α ∈ (0, 1) ∪ (1, 2), with
/// log E[exp(iuX)] = -σ^α |u|^α (1 - i sign(u) tan(πα/2)).
pub fn sample_skewed_stable<R: Rng + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.sample::<f64, _>(Open01) - 0.5);
    let w: f64 = rng.sample(Exp1);
    let t = (PI * alpha / 2.0).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
    let x = s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
        * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
    scale * x
}
