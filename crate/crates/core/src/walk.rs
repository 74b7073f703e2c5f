//! Exact Lévy walk sample paths and their space-time rescalings.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::paths::{phi_eval_into, StepPath};
use crate::stable::{DirectionLaw, MovingTimeLaw};

/// Laws of the moving times and directions.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub moving_time: MovingTimeLaw,
    pub directions: DirectionLaw,
}

impl WalkConfig {
    pub fn new(moving_time: MovingTimeLaw, directions: DirectionLaw) -> Result<Self> {
        moving_time.validate()?;
        Ok(Self {
            moving_time,
            directions,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.dim()
    }
}

/// Renewal skeleton (T(n), S(n)) of one walk, simulated past its horizon.
///
/// The final flight straddles the horizon and is kept whole, so the walk is
/// defined on all of `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct WalkSkeleton {
    dim: usize,
    horizon: f64,
    durations: Vec<f64>,
    directions: Vec<f64>,
    time_path: StepPath,
    space_path: StepPath,
}

pub fn simulate_skeleton<R: Rng + ?Sized>(
    config: &WalkConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<WalkSkeleton> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("{horizon} is not positive")));
    }
    let dim = config.dim();
    let mut durations = Vec::new();
    let mut directions = Vec::new();
    let mut cum_t = Vec::new();
    let mut cum_s = Vec::new();
    let mut t = 0.0;
    let mut s = vec![0.0; dim];
    let mut theta = vec![0.0; dim];
    while t <= horizon {
        let j = config.moving_time.sample(rng);
        config.directions.sample_into(rng, &mut theta);
        t += j;
        s.iter_mut().zip(&theta).for_each(|(si, th)| *si += j * th);
        durations.push(j);
        directions.extend_from_slice(&theta);
        cum_t.push(t);
        cum_s.extend_from_slice(&s);
    }
    let index: Vec<f64> = (1..=durations.len()).map(|i| i as f64).collect();
    Ok(WalkSkeleton {
        dim,
        horizon,
        time_path: StepPath::monotone(index.clone(), cum_t)?,
        space_path: StepPath::new(dim, index, cum_s)?,
        durations,
        directions,
    })
}

impl WalkSkeleton {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.durations.len()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.directions[i * self.dim..(i + 1) * self.dim]
    }

    /// T(n) as a step path indexed by n.
    pub fn time_path(&self) -> &StepPath {
        &self.time_path
    }

    /// S(n) as a step path indexed by n.
    pub fn space_path(&self) -> &StepPath {
        &self.space_path
    }

    /// Number of completed flights N_t = max{n : T(n) ≤ t}.
    pub fn renewals_before(&self, t: f64) -> usize {
        self.time_path.values().partition_point(|&v| v <= t)
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::HorizonExceeded {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// W(t) = S(N_t) + (t − T(N_t)) Λ_{N_t+1}.
    pub fn walk_at(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.walk_at_into(t, &mut out)?;
        Ok(out)
    }

    pub fn walk_at_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        self.check(t)?;
        let n = self.renewals_before(t);
        let (t_n, s_n) = match n.checked_sub(1) {
            Some(k) => (self.time_path.value(k)[0], Some(self.space_path.value(k))),
            None => (0.0, None),
        };
        match s_n {
            Some(s) => out.copy_from_slice(s),
            None => out.fill(0.0),
        }
        if t == t_n {
            return Ok(());
        }
        // tθ + (S − Tθ): exact when every flight so far shares θ.
        for (o, th) in out.iter_mut().zip(self.direction(n)) {
            *o = t * th + (*o - t_n * th);
        }
        Ok(())
    }

    /// Φ(S, T)(t), the same walk through the path functional.
    pub fn phi_at(&self, t: f64) -> Result<Vec<f64>> {
        self.check(t)?;
        let mut out = vec![0.0; self.dim];
        phi_eval_into(&self.space_path, &self.time_path, t, &mut out)?;
        Ok(out)
    }

    /// W over a sorted grid, row-major.
    pub fn walk_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.len() * self.dim];
        for (t, chunk) in grid.iter().zip(out.chunks_mut(self.dim)) {
            self.walk_at_into(*t, chunk)?;
        }
        Ok(out)
    }

    pub fn rescaled_walk_at(&self, spec: &RescaleSpec, t: f64) -> Result<Vec<f64>> {
        let (time, factor) = spec.map(t);
        let mut w = self.walk_at(time)?;
        if factor != 1.0 {
            w.iter_mut().for_each(|c| *c *= factor);
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RescaleMode {
    /// W(ct)/c, β < 1.
    Ballistic,
    /// b(c)·W(μct), β ∈ (1, 2).
    Superdiffusive { b: f64, mu: f64 },
    /// W(ct)/√c, finite variance.
    Diffusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleSpec {
    pub c: f64,
    pub mode: RescaleMode,
}

impl RescaleSpec {
    /// Picks the rescaling regime appropriate for the moving-time law.
    pub fn for_law(law: &MovingTimeLaw, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("c", format!("{c} is not positive")));
        }
        let mode = match *law {
            MovingTimeLaw::Pareto { beta, .. } | MovingTimeLaw::ExactStable { beta } if beta < 1.0 => {
                RescaleMode::Ballistic
            }
            MovingTimeLaw::Pareto { beta, x0 } if beta > 1.0 && beta < 2.0 => {
                RescaleMode::Superdiffusive {
                    b: law.normalizer(c)?,
                    mu: beta * x0 / (beta - 1.0),
                }
            }
            MovingTimeLaw::Exponential { .. } => RescaleMode::Diffusive,
            _ => {
                return Err(invalid("moving_time", format!("no rescaling regime for {law:?}")));
            }
        };
        Ok(Self { c, mode })
    }

    /// (physical time queried, spatial factor).
    pub fn map(&self, t: f64) -> (f64, f64) {
        match self.mode {
            RescaleMode::Ballistic => (self.c * t, 1.0 / self.c),
            RescaleMode::Superdiffusive { b, mu } => (mu * self.c * t, b),
            RescaleMode::Diffusive => (self.c * t, 1.0 / self.c.sqrt()),
        }
    }

    /// Physical horizon a skeleton needs to answer queries up to `t`.
    pub fn required_horizon(&self, t: f64) -> f64 {
        self.map(t).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn symmetric_pareto(beta: f64) -> WalkConfig {
        WalkConfig::new(
            MovingTimeLaw::Pareto { beta, x0: 1.0 },
            DirectionLaw::symmetric_1d(),
        )
        .unwrap()
    }

    fn hand_trace() -> WalkSkeleton {
        WalkSkeleton {
            dim: 1,
            horizon: 4.0,
            durations: vec![2.0, 3.0],
            directions: vec![1.0, -1.0],
            time_path: StepPath::monotone(vec![1.0, 2.0], vec![2.0, 5.0]).unwrap(),
            space_path: StepPath::new(1, vec![1.0, 2.0], vec![2.0, -1.0]).unwrap(),
        }
    }

    #[test]
    fn hand_trace_values() {
        let sk = hand_trace();
        assert_eq!(sk.walk_at(3.0).unwrap(), vec![1.0]);
        assert_eq!(sk.walk_at(2.0).unwrap(), vec![2.0]);
        assert_eq!(sk.walk_at(0.0).unwrap(), vec![0.0]);
        assert_eq!(sk.phi_at(3.0).unwrap(), vec![1.0]);
        assert!(sk.walk_at(4.5).is_err());
    }

    #[test]
    fn fixed_direction_is_ballistic() {
        let cfg = WalkConfig::new(
            MovingTimeLaw::Exponential { rate: 1.0 },
            DirectionLaw::point_mass(vec![1.0]).unwrap(),
        )
        .unwrap();
        let sk = simulate_skeleton(&cfg, 10.0, &mut stream(1, 0)).unwrap();
        assert_eq!(sk.space_path().values(), sk.time_path().values());
        for i in 0..=100 {
            let t = 0.1 * f64::from(i);
            assert_eq!(sk.walk_at(t).unwrap(), vec![t]);
        }
        let spec = RescaleSpec::for_law(&cfg.moving_time, 1.0).unwrap();
        assert_eq!(spec.mode, RescaleMode::Diffusive);
        let spec = RescaleSpec {
            c: 4.0,
            mode: RescaleMode::Ballistic,
        };
        assert_eq!(sk.rescaled_walk_at(&spec, 2.0).unwrap(), vec![2.0]);
    }

    #[test]
    fn stopping_rule() {
        let cfg = symmetric_pareto(0.5);
        for i in 0..50 {
            let sk = simulate_skeleton(&cfg, 100.0, &mut stream(2, i)).unwrap();
            let tv = sk.time_path().values();
            assert!(*tv.last().unwrap() > 100.0);
            if tv.len() > 1 {
                assert!(tv[tv.len() - 2] <= 100.0);
            }
            assert_eq!(sk.walk_at(100.0).unwrap().len(), 1);
        }
    }

    #[test]
    fn renewal_epochs_hit_skeleton() {
        let cfg = symmetric_pareto(0.7);
        let sk = simulate_skeleton(&cfg, 1e3, &mut stream(3, 0)).unwrap();
        for k in 0..sk.steps() - 1 {
            let tk = sk.time_path().value(k)[0];
            assert_eq!(sk.walk_at(tk).unwrap(), sk.space_path().value(k));
        }
    }

    #[test]
    fn unit_rescale_is_identity() {
        let cfg = symmetric_pareto(0.5);
        let sk = simulate_skeleton(&cfg, 50.0, &mut stream(4, 0)).unwrap();
        let spec = RescaleSpec::for_law(&cfg.moving_time, 1.0).unwrap();
        for t in [0.0, 1.0, 13.7, 50.0] {
            assert_eq!(sk.rescaled_walk_at(&spec, t).unwrap(), sk.walk_at(t).unwrap());
        }
    }

    #[test]
    fn superdiffusive_spec_uses_analytic_mean() {
        let law = MovingTimeLaw::Pareto { beta: 1.5, x0: 1.0 };
        let spec = RescaleSpec::for_law(&law, 100.0).unwrap();
        match spec.mode {
            RescaleMode::Superdiffusive { b, mu } => {
                assert!((mu - 3.0).abs() < 1e-15);
                assert!((b - law.normalizer(100.0).unwrap()).abs() < 1e-18);
            }
            other => panic!("unexpected mode {other:?}"),
        }
        assert!((spec.required_horizon(1.0) - 300.0).abs() < 1e-12);
    }

    // N_t Γ(1−β)/t^β ⟹ E(1) = D^{-β}, the inverse stable clock, whose mean
    // is 1/Γ(1+β).
    #[test]
    fn renewal_count_scaling() {
        let beta = 0.5;
        let cfg = symmetric_pareto(beta);
        let t: f64 = 1e4;
        let n = 4000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let sk = simulate_skeleton(&cfg, t, &mut stream(5, i)).unwrap();
                sk.renewals_before(t) as f64 * statrs::function::gamma::gamma(1.0 - beta)
                    / t.powf(beta)
            })
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (v / n as f64).sqrt();
        let target = 1.0 / statrs::function::gamma::gamma(1.0 + beta);
        // Pareto corrections at t = 1e4 are O(t^{-β}) = 1%.
        assert!((m - target).abs() < 4.0 * se + 0.02 * target, "{m} vs {target} (se {se})");
    }

    #[test]
    fn fourth_moment_bounded() {
        let cfg = symmetric_pareto(0.5);
        let t = 1e3;
        let m4 = (0..2000)
            .map(|i| {
                let sk = simulate_skeleton(&cfg, t, &mut stream(6, i)).unwrap();
                (sk.walk_at(t).unwrap()[0] / t).powi(4)
            })
            .sum::<f64>()
            / 2000.0;
        assert!(m4 <= 1.0);
    }

    #[test]
    fn dyadic_grid_matches_reference_interpolator() {
        let cfg = WalkConfig::new(
            MovingTimeLaw::Pareto { beta: 0.8, x0: 1.0 },
            DirectionLaw::uniform_sphere(2).unwrap(),
        )
        .unwrap();
        let sk = simulate_skeleton(&cfg, 64.0, &mut stream(7, 0)).unwrap();
        let grid: Vec<f64> = (0..=1024).map(|i| 64.0 * f64::from(i) / 1024.0).collect();
        let w = sk.walk_on_grid(&grid).unwrap();
        // Reference: scan every segment (T(k−1), S(k−1)) → (T(k), S(k)).
        for (i, &t) in grid.iter().enumerate() {
            let mut prev_t = 0.0;
            let mut prev_s = vec![0.0, 0.0];
            for k in 0..sk.steps() {
                let tk = sk.time_path().value(k)[0];
                let sk_pt = sk.space_path().value(k);
                if t < tk {
                    let f = (t - prev_t) / (tk - prev_t);
                    for c in 0..2 {
                        let r = prev_s[c] + f * (sk_pt[c] - prev_s[c]);
                        assert!((w[2 * i + c] - r).abs() < 1e-12);
                    }
                    break;
                }
                prev_t = tk;
                prev_s = sk_pt.to_vec();
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn walk_matches_phi(seed in 0u64..1_000_000, frac in 0.0f64..=1.0) {
            let cfg = WalkConfig::new(
                MovingTimeLaw::Pareto { beta: 0.6, x0: 1.0 },
                DirectionLaw::uniform_sphere(3).unwrap(),
            ).unwrap();
            let sk = simulate_skeleton(&cfg, 200.0, &mut stream(seed, 0)).unwrap();
            let t = frac * 200.0;
            let direct = sk.walk_at(t).unwrap();
            let via_phi = sk.phi_at(t).unwrap();
            for (p, q) in direct.iter().zip(&via_phi) {
                prop_assert!((p - q).abs() <= 1e-12 * t.max(1.0));
            }
            let norm = direct.iter().map(|c| c * c).sum::<f64>().sqrt();
            prop_assert!(norm <= t * (1.0 + 1e-12));
        }
    }
}
