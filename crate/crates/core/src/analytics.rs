//! Transform-level description of the limit law: the symbol ψ(k, s), the
//! Fourier–Laplace transform of L(t), numerical density recovery in 1D, and
//! the fractional material derivative.

use std::f64::consts::PI;
use std::io::Write;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::paths::fmt_f64;
use crate::stable::DirectionLaw;

/// Default Gauss–Legendre budget per angular coordinate for a uniform λ.
pub const DEFAULT_ANGULAR_NODES: usize = 64;

/// ψ(k, s) = ∫ (s − i⟨k,θ⟩)^β λ(dθ), with λ stored as weighted nodes.
#[derive(Debug, Clone)]
pub struct Symbol {
    beta: f64,
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Symbol {
    pub fn new(beta: f64, law: &DirectionLaw) -> Result<Self> {
        Self::with_angular_nodes(beta, law, DEFAULT_ANGULAR_NODES)
    }

    pub fn with_angular_nodes(beta: f64, law: &DirectionLaw, n: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid("beta", format!("{beta} is outside (0, 1]")));
        }
        let dim = law.dim();
        let (nodes, weights) = match law {
            DirectionLaw::Atoms { .. } => {
                let atoms = law.atom_list().expect("atomic law");
                let nodes = atoms.iter().flat_map(|(p, _)| p.iter().copied()).collect();
                (nodes, atoms.iter().map(|(_, w)| *w).collect())
            }
            DirectionLaw::UniformSphere { dim } => sphere_rule(*dim, n)?,
        };
        Ok(Self {
            beta,
            dim,
            nodes,
            weights,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Largest |⟨k, θ⟩| over the nodes.
    pub fn max_projection(&self, k: &[f64]) -> f64 {
        self.nodes
            .chunks(self.dim)
            .map(|th| dot(k, th).abs())
            .fold(0.0, f64::max)
    }

    fn check(&self, k: &[f64], s: Complex64) -> Result<()> {
        if k.len() != self.dim {
            return Err(invalid(
                "k",
                format!("has dimension {}, expected {}", k.len(), self.dim),
            ));
        }
        if !(s.re > 0.0) {
            return Err(Error::BranchViolation { re: s.re });
        }
        Ok(())
    }

    /// Returns (ψ(k,s), Σ w (s − i⟨k,θ⟩)^{β−1}) in one pass.
    fn parts(&self, k: &[f64], s: Complex64) -> (Complex64, Complex64) {
        let mut psi = Complex64::new(0.0, 0.0);
        let mut num = Complex64::new(0.0, 0.0);
        for (th, w) in self.nodes.chunks(self.dim).zip(&self.weights) {
            let z = s - Complex64::new(0.0, dot(k, th));
            let zb = z.powf(self.beta);
            psi += zb * w;
            num += zb / z * w;
        }
        (psi, num)
    }

    pub fn psi(&self, k: &[f64], s: Complex64) -> Result<Complex64> {
        self.check(k, s)?;
        Ok(self.parts(k, s).0)
    }

    /// Σ w (s − i⟨k,θ⟩)^{β−1}.
    pub fn flt_numerator(&self, k: &[f64], s: Complex64) -> Result<Complex64> {
        self.check(k, s)?;
        Ok(self.parts(k, s).1)
    }

    /// Fourier–Laplace transform ∫ e^{−st} E[e^{i⟨k,L(t)⟩}] dt.
    pub fn flt_law(&self, k: &[f64], s: Complex64) -> Result<Complex64> {
        self.check(k, s)?;
        let (psi, num) = self.parts(k, s);
        Ok(num / psi)
    }

    /// Analytic continuation of flt_law into Re s ≤ 0 away from the cuts
    /// {i⟨k,θ⟩ − r : r ≥ 0}, as needed on a Talbot contour.
    pub(crate) fn flt_law_continued(&self, k: &[f64], s: Complex64) -> Complex64 {
        let (psi, num) = self.parts(k, s);
        num / psi
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sphere_rule(dim: usize, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(invalid("angular_nodes", "must be positive"));
    }
    let rule = GaussLegendre::new(n.try_into().map_err(|_| invalid("angular_nodes", "must be positive"))?);
    let (x, w): (Vec<f64>, Vec<f64>) = rule.iter().copied().unzip();
    match dim {
        1 => Ok((vec![-1.0, 1.0], vec![0.5, 0.5])),
        2 => {
            let mut nodes = Vec::with_capacity(2 * n);
            for xi in &x {
                let phi = PI * (xi + 1.0);
                nodes.extend([phi.cos(), phi.sin()]);
            }
            Ok((nodes, w.iter().map(|wi| wi / 2.0).collect()))
        }
        3 => {
            let mut nodes = Vec::with_capacity(3 * n * n);
            let mut weights = Vec::with_capacity(n * n);
            for (z, wz) in x.iter().zip(&w) {
                let rho = (1.0 - z * z).sqrt();
                for (xi, wp) in x.iter().zip(&w) {
                    let phi = PI * (xi + 1.0);
                    nodes.extend([rho * phi.cos(), rho * phi.sin(), *z]);
                    weights.push(wz * wp / 4.0);
                }
            }
            Ok((nodes, weights))
        }
        _ => Err(invalid(
            "direction_law",
            format!("uniform quadrature is available for m ≤ 3, got m = {dim}"),
        )),
    }
}

/// E[L(t)²] for the symmetric one-dimensional limit with β ∈ (0, 1).
///
/// Expanding the Fourier–Laplace transform at k = 0 gives
/// ∂²_k ρ̄_s(0) = −2(1−β)/s³, hence E[L(t)²] = (1−β) t².
pub fn second_moment_ballistic(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(
            "beta",
            format!("{beta} is not in the ballistic range (0, 1)"),
        ));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("{t} must be nonnegative")));
    }
    Ok((1.0 - beta) * t * t)
}

/// Modified Talbot contour s(θ) = σ + μ(θ cot θ + iνθ), θ ∈ (−π, π).
#[derive(Debug, Clone, Copy)]
pub struct Talbot {
    pub nodes: usize,
    pub sigma: f64,
}

impl Default for Talbot {
    fn default() -> Self {
        Self {
            nodes: 32,
            sigma: 0.0,
        }
    }
}

impl Talbot {
    /// Contour parameters (μ, ν, M) for time `t` and singularities of F
    /// reaching |Im s| = `omega`.
    pub fn contour(&self, t: f64, omega: f64) -> (f64, f64, usize) {
        let n = self.nodes as f64;
        let mu = 2.0 * n / (5.0 * t);
        let nu = (omega / mu).max(1.0);
        (mu, nu, (n * nu).ceil() as usize)
    }

    fn point(&self, mu: f64, nu: f64, th: f64) -> (Complex64, Complex64) {
        if th == 0.0 {
            return (
                Complex64::new(self.sigma + mu, 0.0),
                Complex64::new(0.0, mu * nu),
            );
        }
        let cot = th.cos() / th.sin();
        let sin = th.sin();
        (
            Complex64::new(self.sigma + mu * th * cot, mu * nu * th),
            Complex64::new(mu * (cot - th / (sin * sin)), mu * nu),
        )
    }

    /// f(t) for a complex-valued original.
    pub fn invert<F: Fn(Complex64) -> Result<Complex64>>(
        &self,
        f: F,
        t: f64,
        omega: f64,
    ) -> Result<Complex64> {
        check_time(t)?;
        let (mu, nu, m) = self.contour(t, omega);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in (1 - m as i64)..(m as i64) {
            let (s, ds) = self.point(mu, nu, j as f64 * PI / m as f64);
            acc += (s * t).exp() * f(s)? * ds;
        }
        Ok(acc / Complex64::new(0.0, 2.0 * m as f64))
    }

    /// f(t) for a real original, using F(s̄) = conj F(s) to halve the work.
    pub fn invert_real<F: Fn(Complex64) -> Result<Complex64>>(
        &self,
        f: F,
        t: f64,
        omega: f64,
    ) -> Result<f64> {
        check_time(t)?;
        let (mu, nu, m) = self.contour(t, omega);
        let s0 = self.sigma + mu;
        let mut acc = 0.5 * (s0 * t).exp() * f(Complex64::new(s0, 0.0))?.re * mu * nu;
        for j in 1..m {
            let (s, ds) = self.point(mu, nu, j as f64 * PI / m as f64);
            acc += ((s * t).exp() * f(s)? * ds).im;
        }
        Ok(acc / m as f64)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("{t} must be positive")));
    }
    Ok(())
}

/// Gaver–Stehfest inversion with `n` (even) terms on the real axis.
///
/// The alternating weights grow like 10^{0.4n}, so double precision caps
/// useful accuracy near n = 14–16 and oscillatory originals are not
/// resolved at all.
pub fn gaver_stehfest<F: Fn(f64) -> f64>(f: F, t: f64, n: usize) -> Result<f64> {
    check_time(t)?;
    if n == 0 || n % 2 == 1 || n > 20 {
        return Err(invalid("n", format!("{n} must be even and at most 20")));
    }
    let half = n / 2;
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let ln2t = std::f64::consts::LN_2 / t;
    let mut acc = 0.0;
    for k in 1..=n {
        let mut v = 0.0;
        for j in k.div_ceil(2)..=k.min(half) {
            v += (j as f64).powi(half as i32) * fact(2 * j)
                / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
        }
        if (k + half) % 2 == 1 {
            v = -v;
        }
        acc += v * f(k as f64 * ln2t);
    }
    Ok(acc * ln2t)
}

/// Numerical settings for the 1D density reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InversionOptions {
    /// Fourier period in units of t; the series lives on [−P/2, P/2].
    pub period_factor: f64,
    /// Minimum number of positive Fourier modes.
    pub modes: usize,
    /// Order p of the exponential filter exp(−36 (n/N)^p).
    pub filter_order: u32,
    pub talbot_nodes: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            period_factor: 4.0,
            modes: 4096,
            filter_order: 8,
            talbot_nodes: 32,
        }
    }
}

/// ρ_t sampled on a uniform grid together with inversion diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityGrid {
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// ∫ρ over [x_min, x_max], integrated exactly from the series.
    pub mass: f64,
    pub second_moment: f64,
    pub support: [f64; 2],
    pub min_value: f64,
    pub negative_count: usize,
    /// max |ρ(x)| over grid points with |x| > t.
    pub max_outside_support: f64,
    pub period: f64,
    pub modes: usize,
}

impl DensityGrid {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,rho")?;
        for (x, v) in self.x_grid.iter().zip(&self.values) {
            writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// Uniform grid of `n` points on [lo, hi].
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + h * i as f64).collect()
}

/// Recovers the density of L(t) in one dimension.
///
/// For each k_n = 2πn/P, E[e^{ik_n L(t)}] is obtained by Talbot inversion
/// of flt_law in s; the density is the filtered Fourier series
/// (1/P) Σ σ_n φ(k_n) e^{−ik_n x}. Because L(t) lives in [−t, t] ⊂
/// [−P/2, P/2] the coefficients carry no aliasing; the error is the
/// truncation of the series, which the filter converts into a smooth
/// tail of width ≈ P/N around the two edges.
pub fn invert_flt_1d(
    symbol: &Symbol,
    t: f64,
    x_grid: &[f64],
    opts: &InversionOptions,
) -> Result<DensityGrid> {
    if symbol.dim() != 1 {
        return Err(invalid("symbol", "density inversion is one-dimensional"));
    }
    check_time(t)?;
    if x_grid.len() < 2 {
        return Err(invalid("x_grid", "needs at least two points"));
    }
    let dx = x_grid[1] - x_grid[0];
    let uniform = x_grid
        .windows(2)
        .all(|p| ((p[1] - p[0]) - dx).abs() <= 1e-9 * dx.abs());
    if !(dx > 0.0) || !uniform {
        return Err(invalid("x_grid", "must be increasing and uniform"));
    }
    if !(opts.period_factor > 2.0) {
        return Err(invalid("period_factor", "must exceed 2 so [−t, t] fits"));
    }
    let period = opts.period_factor * t;
    let (lo, hi) = (x_grid[0], x_grid[x_grid.len() - 1]);
    if lo < -period / 2.0 || hi > period / 2.0 {
        return Err(invalid(
            "x_grid",
            format!("must lie within [−{0}, {0}]", period / 2.0),
        ));
    }
    let nyquist = (period / (2.0 * dx)).ceil() as usize;
    let modes = opts.modes.max(nyquist);
    let talbot = Talbot {
        nodes: opts.talbot_nodes,
        sigma: 0.0,
    };
    let real = is_even(symbol);

    let mut coeffs = Vec::with_capacity(modes);
    for n in 1..=modes {
        let k = 2.0 * PI * n as f64 / period;
        let sigma = (-36.0 * (n as f64 / modes as f64).powi(opts.filter_order as i32)).exp();
        let phi = if sigma < 1e-300 {
            Complex64::new(0.0, 0.0)
        } else {
            let kv = [k];
            let omega = symbol.max_projection(&kv);
            let flt = |s: Complex64| Ok(symbol.flt_law_continued(&kv, s));
            if real {
                Complex64::new(talbot.invert_real(flt, t, omega)?, 0.0)
            } else {
                talbot.invert(flt, t, omega)?
            }
        };
        coeffs.push((k, phi * sigma));
    }

    let values: Vec<f64> = x_grid
        .iter()
        .map(|&x| {
            let s: f64 = coeffs
                .iter()
                .map(|(k, c)| (c * Complex64::from_polar(1.0, -k * x)).re)
                .sum();
            (1.0 + 2.0 * s) / period
        })
        .collect();

    let mut mass = (hi - lo) / period;
    let mut m2 = (hi.powi(3) - lo.powi(3)) / (3.0 * period);
    for (k, c) in &coeffs {
        let (e0, e1) = (
            Complex64::from_polar(1.0, -k * lo),
            Complex64::from_polar(1.0, -k * hi),
        );
        let i = Complex64::i();
        mass += 2.0 * (c * (e1 - e0) / (-i * k)).re / period;
        let anti = |x: f64, e: Complex64| e * (i * x * x / k + 2.0 * x / (k * k) - 2.0 * i / k.powi(3));
        m2 += 2.0 * (c * (anti(hi, e1) - anti(lo, e0))).re / period;
    }

    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let negative_count = values.iter().filter(|&&v| v < -1e-6).count();
    let max_outside_support = x_grid
        .iter()
        .zip(&values)
        .filter(|(x, _)| x.abs() > t)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);

    if !((mass - 1.0).abs() <= 1e-2) {
        return Err(Error::InversionDiagnostics(format!(
            "mass {mass} on [{lo}, {hi}] deviates from 1 by more than 1e-2"
        )));
    }
    Ok(DensityGrid {
        t,
        x_grid: x_grid.to_vec(),
        values,
        mass,
        second_moment: m2,
        support: [-t, t],
        min_value,
        negative_count,
        max_outside_support,
        period,
        modes,
    })
}

fn is_even(symbol: &Symbol) -> bool {
    let mut atoms: Vec<(f64, f64)> = symbol
        .nodes
        .iter()
        .copied()
        .zip(symbol.weights.iter().copied())
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = atoms.len();
    (0..n).all(|i| atoms[i].0 == -atoms[n - 1 - i].0 && atoms[i].1 == atoms[n - 1 - i].1)
}

/// (∂_t + ⟨θ,∇_x⟩)^β f(x, t) = (1/Γ(1−β)) ∫_0^∞ (f(x+rθ, t+r) − f(x,t)) r^{−β−1} dr.
///
/// On (0, 1] the substitution r = u^{1/(1−β)} turns the integrand into the
/// bounded difference quotient (f(x+rθ,t+r) − f(x,t))/r/(1−β); below
/// r = 1e-5 the quotient is extended linearly from its values at 1e-5 and
/// 2e-5. On (1, ∞) the substitution r = w^{−1/β} leaves the plain increment / β.
pub fn material_derivative<F>(
    f: F,
    x: &[f64],
    t: f64,
    theta: &[f64],
    beta: f64,
    tol: f64,
) -> Result<f64>
where
    F: Fn(&[f64], f64) -> f64,
{
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("beta", format!("{beta} is outside (0, 1)")));
    }
    if x.len() != theta.len() {
        return Err(invalid("theta", "dimension differs from x"));
    }
    let base = f(x, t);
    let increment = |r: f64| {
        let shifted: Vec<f64> = x.iter().zip(theta).map(|(xi, th)| xi + r * th).collect();
        f(&shifted, t + r) - base
    };
    const R_TAYLOR: f64 = 1e-5;
    let q0 = increment(R_TAYLOR) / R_TAYLOR;
    let slope = (increment(2.0 * R_TAYLOR) / (2.0 * R_TAYLOR) - q0) / R_TAYLOR;
    let near = integrate_unit(
        |u| {
            let r = u.powf(1.0 / (1.0 - beta));
            let q = if r < R_TAYLOR {
                q0 + slope * (r - R_TAYLOR)
            } else {
                increment(r) / r
            };
            q / (1.0 - beta)
        },
        tol,
    )?;
    let far = integrate_unit(
        |w| {
            let v = increment(w.powf(-1.0 / beta));
            if v.is_finite() {
                v / beta
            } else {
                f64::NAN
            }
        },
        tol,
    )
    .map_err(|e| Error::Nonconvergence(format!("tail increment does not decay ({e})")))?;
    Ok((near + far) / gamma(1.0 - beta))
}

/// Double-exponential quadrature on [0, 1] with a non-finite / accuracy guard.
fn integrate_unit<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    let out = quadrature::integrate(f, 0.0, 1.0, tol);
    if !out.integral.is_finite() {
        return Err(Error::Nonconvergence("non-finite integrand".into()));
    }
    if out.error_estimate > 100.0 * tol.max(1e-15 * out.integral.abs()) {
        return Err(Error::Nonconvergence(format!(
            "error estimate {:.1e} above tolerance {tol:.1e}",
            out.error_estimate
        )));
    }
    Ok(out.integral)
}

/// One (k, s) row of the governing-equation check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoverningRow {
    pub k: Vec<f64>,
    pub s: [f64; 2],
    pub psi: [f64; 2],
    pub flt: [f64; 2],
    pub numerator: [f64; 2],
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloComparison>,
}

/// Comparison of flt_law with a Monte Carlo estimate of the same transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloComparison {
    pub estimate: [f64; 2],
    pub standard_error: [f64; 2],
    pub quadrature_budget: f64,
    pub deviation: f64,
    pub allowed: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoverningReport {
    pub beta: f64,
    pub tolerance: f64,
    pub max_residual: f64,
    pub rows: Vec<GoverningRow>,
}

impl GoverningReport {
    pub fn monte_carlo_passed(&self) -> Option<bool> {
        let mc: Vec<bool> = self
            .rows
            .iter()
            .filter_map(|r| r.monte_carlo.as_ref().map(|m| m.within))
            .collect();
        (!mc.is_empty()).then(|| mc.iter().all(|&w| w))
    }
}

/// Relative residual of ψ·flt_law against Σ w (s − i⟨k,θ⟩)^{β−1}.
pub const GOVERNING_TOLERANCE: f64 = 1e-12;

/// Checks ψ(k,s)·ρ̄(k,s) = Σ w (s − i⟨k,θ⟩)^{β−1} on a (k, s) grid, the
/// transform-side form of the governing equation.
pub fn governing_equation_check(
    symbol: &Symbol,
    k_grid: &[Vec<f64>],
    s_grid: &[Complex64],
) -> Result<GoverningReport> {
    let mut rows = Vec::with_capacity(k_grid.len() * s_grid.len());
    let mut worst: (f64, String) = (0.0, String::new());
    for k in k_grid {
        for &s in s_grid {
            let psi = symbol.psi(k, s)?;
            let flt = symbol.flt_law(k, s)?;
            let num = symbol.flt_numerator(k, s)?;
            let residual = (psi * flt - num).norm() / num.norm().max(1.0);
            if residual > worst.0 || rows.is_empty() {
                worst = (residual, format!("k = {k:?}, s = {s}"));
            }
            rows.push(GoverningRow {
                k: k.clone(),
                s: [s.re, s.im],
                psi: [psi.re, psi.im],
                flt: [flt.re, flt.im],
                numerator: [num.re, num.im],
                residual,
                monte_carlo: None,
            });
        }
    }
    if worst.0 > GOVERNING_TOLERANCE {
        return Err(Error::ResidualExceeded {
            residual: worst.0,
            tolerance: GOVERNING_TOLERANCE,
            location: worst.1,
        });
    }
    Ok(GoverningReport {
        beta: symbol.beta(),
        tolerance: GOVERNING_TOLERANCE,
        max_residual: worst.0,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sym1d(beta: f64) -> Symbol {
        Symbol::new(beta, &DirectionLaw::symmetric_1d()).unwrap()
    }

    #[test]
    fn psi_at_zero_wavenumber_is_laplace_exponent() {
        for law in [
            DirectionLaw::symmetric_1d(),
            DirectionLaw::uniform_sphere(2).unwrap(),
            DirectionLaw::uniform_sphere(3).unwrap(),
        ] {
            let sym = Symbol::new(0.4, &law).unwrap();
            let k = vec![0.0; law.dim()];
            for s in [0.1f64, 1.0, 7.5] {
                let want = s.powf(0.4);
                assert!((sym.psi(&k, c(s, 0.0)).unwrap() - want).norm() < 1e-13 * want);
                assert!((sym.flt_law(&k, c(s, 0.0)).unwrap() - 1.0 / s).norm() < 1e-13 / s);
            }
        }
    }

    #[test]
    fn symmetric_closed_form_and_transport_case() {
        let sym = sym1d(0.5);
        let (k, s) = (1.3, c(0.7, 0.2));
        let a = s - c(0.0, k);
        let b = s + c(0.0, k);
        let want = (a.powf(0.5) + b.powf(0.5)) / 2.0;
        assert!((sym.psi(&[k], s).unwrap() - want).norm() < 1e-14);
        let rho = (a.powf(-0.5) + b.powf(-0.5)) / (a.powf(0.5) + b.powf(0.5));
        assert!((sym.flt_law(&[k], s).unwrap() - rho).norm() < 1e-14);

        // β = 1: ψ = s − i⟨k, E θ⟩.
        let law = DirectionLaw::atoms(&[(vec![0.6, 0.8], 0.25), (vec![-0.8, 0.6], 0.75)]).unwrap();
        let one = Symbol::new(1.0, &law).unwrap();
        let k2 = [2.0, -1.0];
        let mean = law.mean();
        let psi = one.psi(&k2, c(1.5, 0.0)).unwrap();
        assert!((psi - c(1.5, -(2.0 * mean[0] - mean[1]))).norm() < 1e-15);
    }

    #[test]
    fn branch_violation_is_reported() {
        let sym = sym1d(0.5);
        for s in [c(0.0, 1.0), c(-1.0, 0.0)] {
            assert!(matches!(sym.psi(&[1.0], s), Err(Error::BranchViolation { .. })));
            assert!(matches!(sym.flt_law(&[1.0], s), Err(Error::BranchViolation { .. })));
        }
        assert!(Symbol::new(1.5, &DirectionLaw::symmetric_1d()).is_err());
        assert!(sym.psi(&[1.0, 0.0], c(1.0, 0.0)).is_err());
    }

    #[test]
    fn uniform_quadrature_matches_planar_closed_form() {
        // For m = 2, β = 1: ψ = s exactly since ⟨k,θ⟩ averages to zero.
        let sym = Symbol::new(1.0, &DirectionLaw::uniform_sphere(2).unwrap()).unwrap();
        let psi = sym.psi(&[3.0, -2.0], c(0.5, 0.0)).unwrap();
        assert!((psi - c(0.5, 0.0)).norm() < 1e-13);
        // For m = 3 and β = 1/2 compare against an independent fine rule.
        let coarse = Symbol::new(0.5, &DirectionLaw::uniform_sphere(3).unwrap()).unwrap();
        let fine =
            Symbol::with_angular_nodes(0.5, &DirectionLaw::uniform_sphere(3).unwrap(), 160).unwrap();
        let (k, s) = ([1.0, 2.0, -0.5], c(0.8, 0.1));
        assert!((coarse.psi(&k, s).unwrap() - fine.psi(&k, s).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn curvature_at_origin() {
        // Central difference with step 1e-4 against −2(1−β)/s³.
        for beta in [0.3, 0.5, 0.8] {
            let sym = sym1d(beta);
            for s in [0.5, 1.0, 2.0] {
                let h = 1e-4;
                let f = |k: f64| sym.flt_law(&[k], c(s, 0.0)).unwrap().re;
                let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
                let want = -2.0 * (1.0 - beta) / s.powi(3);
                assert!(((fd - want) / want).abs() < 1e-5, "β={beta} s={s}: {fd} vs {want}");
            }
        }
    }

    #[test]
    fn ballistic_second_moment() {
        assert_eq!(second_moment_ballistic(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(second_moment_ballistic(0.5, 0.0).unwrap(), 0.0);
        assert!(second_moment_ballistic(1.0 - 1e-12, 1.0).unwrap() < 1e-11);
        assert!(second_moment_ballistic(1.5, 1.0).is_err());
        assert!(second_moment_ballistic(0.5, -1.0).is_err());
    }

    #[test]
    fn talbot_known_pairs() {
        let tal = Talbot::default();
        for t in [0.1, 1.0, 5.0] {
            let one = tal.invert_real(|s| Ok(1.0 / s), t, 0.0).unwrap();
            assert!((one - 1.0).abs() < 1e-10, "{one}");
            let e = tal.invert_real(|s| Ok(1.0 / (s + 1.0)), t, 0.0).unwrap();
            assert!((e - (-t).exp()).abs() < 1e-10);
            let z = tal.invert(|s| Ok(1.0 / (s + 1.0)), t, 0.0).unwrap();
            assert!((z.re - e).abs() < 1e-10 && z.im.abs() < 1e-10);
        }
        for k in [5.0, 50.0, 500.0] {
            let z = tal.invert(|s| Ok(1.0 / (s - c(0.0, k))), 1.0, k).unwrap();
            assert!((z - Complex64::from_polar(1.0, k)).norm() < 1e-9, "k={k}");
            let cos = tal
                .invert_real(|s| Ok(s / (s * s + k * k)), 1.0, k)
                .unwrap();
            assert!((cos - k.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn arcsine_characteristic_function() {
        // β = 1/2 symmetric: L(t)/t is arcsine on [−1, 1] with CF J₀(kt).
        let sym = sym1d(0.5);
        let tal = Talbot::default();
        for (k, j0) in [
            (1.0, 0.765_197_686_557_966_6),
            (10.0, -0.245_935_764_451_348_3),
            (100.0, 0.019_985_850_304_223_122),
        ] {
            let v = tal
                .invert_real(|s| Ok(sym.flt_law_continued(&[k], s)), 1.0, k)
                .unwrap();
            assert!((v - j0).abs() < 1e-9, "k={k}: {v} vs {j0}");
        }
    }

    #[test]
    fn stehfest_cross_check() {
        for t in [0.5, 1.0, 3.0] {
            let one = gaver_stehfest(|s| 1.0 / s, t, 14).unwrap();
            assert!((one - 1.0).abs() < 1e-6);
            let e = gaver_stehfest(|s| 1.0 / (s + 1.0), t, 14).unwrap();
            let tal = Talbot::default()
                .invert_real(|s| Ok(1.0 / (s + 1.0)), t, 0.0)
                .unwrap();
            assert!((e - tal).abs() < 1e-4);
        }
        assert!(gaver_stehfest(|s| 1.0 / s, 1.0, 7).is_err());
    }

    #[test]
    fn arcsine_density_recovery() {
        let sym = sym1d(0.5);
        let grid = uniform_grid(-1.5, 1.5, 301);
        let d = invert_flt_1d(&sym, 1.0, &grid, &InversionOptions::default()).unwrap();
        assert!((d.mass - 1.0).abs() < 1e-3, "{}", d.mass);
        assert!((d.second_moment - 0.5).abs() < 5e-3, "{}", d.second_moment);
        assert!(d.max_outside_support < 1e-3, "{}", d.max_outside_support);
        for (x, v) in d.x_grid.iter().zip(&d.values) {
            if x.abs() < 0.9 {
                let exact = 1.0 / (PI * (1.0 - x * x).sqrt());
                assert!((v - exact).abs() < 1e-3 * exact.max(1.0), "x={x}");
            }
        }
        let mut csv = Vec::new();
        d.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("x,rho\n"));
    }

    #[test]
    fn asymmetric_atoms_shift_the_mean() {
        let law = DirectionLaw::atoms(&[(vec![1.0], 0.7), (vec![-1.0], 0.3)]).unwrap();
        let sym = Symbol::new(0.5, &law).unwrap();
        let grid = uniform_grid(-1.5, 1.5, 301);
        let opts = InversionOptions {
            modes: 1024,
            ..Default::default()
        };
        let d = invert_flt_1d(&sym, 1.0, &grid, &opts).unwrap();
        assert!((d.mass - 1.0).abs() < 1e-2);
        let h = grid[1] - grid[0];
        let inner: f64 = grid
            .iter()
            .zip(&d.values)
            .filter(|(x, _)| x.abs() < 0.5)
            .map(|(x, v)| x * v * h)
            .sum();
        assert!(inner > 0.0);
    }

    #[test]
    fn inversion_guards() {
        let sym = sym1d(0.5);
        let opts = InversionOptions::default();
        assert!(invert_flt_1d(&sym, 1.0, &[0.0], &opts).is_err());
        assert!(invert_flt_1d(&sym, 1.0, &[0.0, 0.1, 0.3], &opts).is_err());
        assert!(invert_flt_1d(&sym, 1.0, &uniform_grid(-3.0, 3.0, 11), &opts).is_err());
        assert!(invert_flt_1d(&sym, 0.0, &uniform_grid(-1.0, 1.0, 11), &opts).is_err());
        let planar = Symbol::new(0.5, &DirectionLaw::uniform_sphere(2).unwrap()).unwrap();
        assert!(invert_flt_1d(&planar, 1.0, &uniform_grid(-1.0, 1.0, 11), &opts).is_err());
        assert!(matches!(
            invert_flt_1d(&sym, 1.0, &uniform_grid(-0.5, 0.5, 101), &opts),
            Err(Error::InversionDiagnostics(_))
        ));
    }

    #[test]
    fn material_derivative_of_exponentials() {
        // For f = exp(−st + ⟨c,x⟩): −f (s − ⟨c,θ⟩)^β / β.
        let th = [0.6, -0.8];
        let cvec = [0.3, 0.4];
        for (beta, s) in [(0.3, 1.0), (0.5, 2.0), (0.7, 0.5)] {
            let f = |x: &[f64], t: f64| (-s * t + cvec[0] * x[0] + cvec[1] * x[1]).exp();
            let (x, t) = ([0.2, -0.1], 0.4);
            let got = material_derivative(f, &x, t, &th, beta, 1e-11).unwrap();
            let a = s - (cvec[0] * th[0] + cvec[1] * th[1]);
            let want = -f(&x, t) * a.powf(beta) / beta;
            assert!(((got - want) / want).abs() < 1e-8, "β={beta}: {got} vs {want}");
        }
    }

    #[test]
    fn material_derivative_guards() {
        let konst = |_: &[f64], _: f64| 2.5;
        assert_eq!(material_derivative(konst, &[0.0], 1.0, &[1.0], 0.5, 1e-10).unwrap(), 0.0);
        assert!(material_derivative(konst, &[0.0], 1.0, &[1.0], 1.0, 1e-10).is_err());
        assert!(material_derivative(konst, &[0.0], 1.0, &[1.0], 0.0, 1e-10).is_err());
        let growing = |x: &[f64], t: f64| (x[0] + t).exp();
        assert!(matches!(
            material_derivative(growing, &[0.0], 0.0, &[1.0], 0.5, 1e-10),
            Err(Error::Nonconvergence(_))
        ));
    }

    #[test]
    fn governing_identity_on_grid() {
        let sym = sym1d(0.5);
        let ks: Vec<Vec<f64>> = [0.0, 0.5, 1.0, 2.0, 50.0].iter().map(|k| vec![*k]).collect();
        let ss = [c(0.5, 0.0), c(1.0, 0.0), c(2.0, 3.0)];
        let rep = governing_equation_check(&sym, &ks, &ss).unwrap();
        assert_eq!(rep.rows.len(), 15);
        assert!(rep.max_residual < 1e-12);
        assert!(rep.monte_carlo_passed().is_none());
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("max_residual"));
        assert!(governing_equation_check(&sym, &ks, &[c(0.0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_branch_sanity(k in 0.0f64..50.0, s in 0.01f64..20.0, beta in 0.05f64..1.0) {
            let sym = sym1d(beta);
            let p = sym.psi(&[k], c(s, 0.0)).unwrap();
            let m = sym.psi(&[-k], c(s, 0.0)).unwrap();
            prop_assert!((p.re - m.re).abs() <= 1e-13 * p.norm());
            prop_assert!(p.im.abs() <= 1e-13 * p.norm());
            prop_assert!((p.im + m.im).abs() <= 1e-13 * p.norm());
        }

        #[test]
        fn odd_imaginary_part_for_asymmetric_atoms(k in -20.0f64..20.0, s in 0.01f64..10.0, w in 0.05f64..0.95) {
            let law = DirectionLaw::atoms(&[(vec![1.0], w), (vec![-1.0], 1.0 - w)]).unwrap();
            let sym = Symbol::new(0.6, &law).unwrap();
            let p = sym.psi(&[k], c(s, 0.0)).unwrap();
            let m = sym.psi(&[-k], c(s, 0.0)).unwrap();
            prop_assert!((p - m.conj()).norm() <= 1e-13 * p.norm());
        }

        #[test]
        fn homogeneity(k1 in -10.0f64..10.0, k2 in -10.0f64..10.0, sr in 0.01f64..5.0,
                       si in -5.0f64..5.0, scale in 0.01f64..100.0, beta in 0.05f64..1.0) {
            let sym = Symbol::new(beta, &DirectionLaw::uniform_sphere(2).unwrap()).unwrap();
            let s = c(sr, si);
            let lhs = sym.psi(&[scale * k1, scale * k2], s * scale).unwrap();
            let rhs = sym.psi(&[k1, k2], s).unwrap() * scale.powf(beta);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
        }

        #[test]
        fn transform_at_origin_is_exact(s in 1e-3f64..1e3, beta in 0.05f64..1.0) {
            let sym = sym1d(beta);
            let v = sym.flt_law(&[0.0], c(s, 0.0)).unwrap();
            prop_assert!((v.re - 1.0 / s).abs() <= 1e-14 / s && v.im == 0.0);
        }
    }
}
