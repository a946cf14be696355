//! Log-price dynamics driven by trader groups.
//!
//! A run starts with a random-walk bootstrap `ln p_{t+1} = ln p_t + σ ε_t`
//! for `t < T0`, then switches to
//!
//! ```text
//! ln p_{t+1} = ln p_t + [σ ε_t] + Σ_i a_i(t) · ed_i(x_t)
//! ```
//!
//! where the noise term is kept only when the scenario asks for it.
//!
//! `ε_t` comes from `ChaCha8Rng::seed_from_u64(seed)` through the ziggurat
//! `StandardNormal` sampler of `rand_distr`. One normal is drawn per
//! bootstrap step and, with noise kept, one per model step, in time order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsl::CompiledBlock;
use crate::error::{Error, Result};
use crate::indicators::{FeatureParams, IndicatorCache, PriceSeries};
use crate::rules::{
    BuiltinGroup, ExcessDemand, ManipulatorSchedule, Portfolio, RuleSet, StopWidths,
};

/// Piecewise-constant, nonnegative strength `a_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthSchedule {
    steps: Vec<(usize, f64)>,
}

impl StrengthSchedule {
    pub fn constant(a: f64) -> Result<Self> {
        Self::piecewise(vec![(0, a)])
    }

    /// Breakpoints `(t_start, value)`; the first must start at 0 and starts
    /// must strictly increase.
    pub fn piecewise(steps: Vec<(usize, f64)>) -> Result<Self> {
        if steps.first().map(|s| s.0) != Some(0) {
            return Err(Error::Config(
                "strength schedule must start at t = 0".into(),
            ));
        }
        if steps.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config(
                "strength schedule start times must increase".into(),
            ));
        }
        if let Some((t, a)) = steps.iter().find(|(_, a)| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config(format!(
                "strength at t = {t} must be nonnegative and finite, got {a}"
            )));
        }
        Ok(StrengthSchedule { steps })
    }

    pub fn at(&self, t: usize) -> f64 {
        let i = self.steps.partition_point(|s| s.0 <= t);
        self.steps[i - 1].1
    }

    pub fn steps(&self) -> &[(usize, f64)] {
        &self.steps
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::piecewise(self.steps.iter().map(|&(t, a)| (t, a * k)).collect())
    }
}

/// Where a group's excess demand comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DemandSource {
    Builtin(BuiltinGroup),
    Rules(CompiledBlock),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraderGroup {
    pub id: String,
    pub source: DemandSource,
    pub strength: StrengthSchedule,
    pub params: FeatureParams,
    pub rules: RuleSet,
    pub stops: StopWidths,
}

impl TraderGroup {
    pub fn builtin(
        group: BuiltinGroup,
        strength: StrengthSchedule,
        params: FeatureParams,
        w: f64,
    ) -> Result<Self> {
        Ok(TraderGroup {
            id: group.number().to_string(),
            source: DemandSource::Builtin(group),
            strength,
            params,
            rules: RuleSet::new(w)?,
            stops: StopWidths::default(),
        })
    }

    /// Parameters actually used for feature extraction: the big-trader
    /// groups always compare the current price to the `n`-average.
    pub fn feature_params(&self) -> FeatureParams {
        match self.source {
            DemandSource::Builtin(BuiltinGroup::Ed6 | BuiltinGroup::Ed7 | BuiltinGroup::Ed8) => {
                FeatureParams {
                    m: 1,
                    ..self.params
                }
            }
            _ => self.params,
        }
    }

    /// First time index at which the group can be active.
    pub fn lookback(&self) -> usize {
        use crate::indicators::Feature as F;
        let p = self.feature_params();
        let needed: Vec<F> = match &self.source {
            DemandSource::Builtin(g) => match g {
                BuiltinGroup::Ed1 | BuiltinGroup::Ed6 | BuiltinGroup::Ed7 | BuiltinGroup::Ed8 => {
                    vec![F::X1]
                }
                BuiltinGroup::Ed2 | BuiltinGroup::Ed3 => vec![F::X2],
                BuiltinGroup::Ed4 | BuiltinGroup::Ed5 => vec![F::X4],
                BuiltinGroup::Ed9 => vec![F::X6],
                BuiltinGroup::Ed10 => return p.n.saturating_sub(1),
                BuiltinGroup::Ed11 => vec![F::X4, F::X8],
                BuiltinGroup::Ed12 => vec![F::X4, F::X10],
            },
            DemandSource::Rules(b) => b.block().features(),
        };
        needed.into_iter().map(|f| p.lookback(f)).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub p0: f64,
    pub sigma: f64,
    pub bootstrap_len: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Keep `σ ε_t` after the bootstrap.
    pub keep_noise: bool,
    pub groups: Vec<TraderGroup>,
    pub volumes: Option<Vec<f64>>,
    pub index: Option<Vec<f64>>,
    pub manipulator: Option<ManipulatorSchedule>,
    pub portfolio: Option<Portfolio>,
}

impl Scenario {
    /// A pure random walk with no trader groups.
    pub fn random_walk(
        p0: f64,
        sigma: f64,
        bootstrap_len: usize,
        horizon: usize,
        seed: u64,
    ) -> Self {
        Scenario {
            p0,
            sigma,
            bootstrap_len,
            horizon,
            seed,
            keep_noise: true,
            groups: Vec::new(),
            volumes: None,
            index: None,
            manipulator: None,
            portfolio: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.p0.is_finite() && self.p0 > 0.0) {
            return cfg(format!("p0 must be positive, got {}", self.p0));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return cfg(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if self.bootstrap_len < 1 {
            return cfg("bootstrap_len must be at least 1".into());
        }
        if self.horizon <= self.bootstrap_len {
            return cfg(format!(
                "horizon ({}) must exceed bootstrap_len ({})",
                self.horizon, self.bootstrap_len
            ));
        }
        let mut ids = std::collections::HashSet::new();
        for g in &self.groups {
            if !ids.insert(g.id.as_str()) {
                return cfg(format!("duplicate group id {}", g.id));
            }
            let p = &g.params;
            if p.n == 0 || p.n_star == 0 || p.m == 0 {
                return cfg(format!("group {}: window lengths must be positive", g.id));
            }
            if matches!(g.source, DemandSource::Builtin(BuiltinGroup::Ed1)) && p.m >= p.n {
                return cfg(format!(
                    "group {}: need m < n, got m={} n={}",
                    g.id, p.m, p.n
                ));
            }
            let lb = g.lookback();
            if lb > self.bootstrap_len {
                return cfg(format!(
                    "group {}: lookback {lb} exceeds bootstrap_len {}",
                    g.id, self.bootstrap_len
                ));
            }
            if let DemandSource::Builtin(b) = g.source {
                match b {
                    BuiltinGroup::Ed8 if self.manipulator.is_none() => {
                        return cfg(format!("group {}: ed8 needs a manipulator schedule", g.id));
                    }
                    BuiltinGroup::Ed10 if self.portfolio.is_none() => {
                        return cfg(format!("group {}: ed10 needs a portfolio", g.id));
                    }
                    BuiltinGroup::Ed11 if self.volumes.is_none() => {
                        return cfg(format!("group {}: ed11 needs a volume series", g.id));
                    }
                    BuiltinGroup::Ed12 if self.index.is_none() => {
                        return cfg(format!("group {}: ed12 needs an index series", g.id));
                    }
                    _ => {}
                }
            }
        }
        for (name, series) in [("volume", &self.volumes), ("index", &self.index)] {
            if let Some(s) = series {
                if s.len() < self.horizon {
                    return cfg(format!(
                        "{name} series has {} rows, horizon needs {}",
                        s.len(),
                        self.horizon
                    ));
                }
            }
        }
        if let Some(v) = &self.volumes {
            if let Some(i) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return cfg(format!("volume at t = {i} must be nonnegative"));
            }
        }
        if let Some(v) = &self.index {
            if let Some(i) = v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                return cfg(format!("index at t = {i} must be positive"));
            }
        }
        if let Some(m) = &self.manipulator {
            m.validate()?;
        }
        if let Some(p) = &self.portfolio {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Bootstrap,
    Model,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Bootstrap => "bootstrap",
            Regime::Model => "model",
        }
    }
}

/// One group's contribution to a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStep {
    pub ed: f64,
    pub active: bool,
    pub strength: f64,
}

/// Row `t` holds `p_t` and the terms that moved the price from `t-1`:
/// `log_return = noise + Σ strength·ed` over the groups.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub t: usize,
    pub price: f64,
    pub log_return: f64,
    pub regime: Regime,
    pub noise: f64,
    pub groups: Vec<GroupStep>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationRecord {
    pub group_ids: Vec<String>,
    pub bootstrap_len: usize,
    pub rows: Vec<RecordRow>,
}

impl SimulationRecord {
    pub fn prices(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.price).collect()
    }

    /// Log-returns of rows in `regime` (row 0 has none and is skipped).
    pub fn returns(&self, regime: Option<Regime>) -> Vec<f64> {
        self.rows
            .iter()
            .skip(1)
            .filter(|r| regime.is_none_or(|g| r.regime == g))
            .map(|r| r.log_return)
            .collect()
    }

    pub fn final_price(&self) -> Option<f64> {
        self.rows.last().map(|r| r.price)
    }
}

/// Apply one log-price update. Returns `(p_{t+1}, log_return)`.
pub fn price_step(
    price: f64,
    noise: f64,
    contributions: &[(f64, ExcessDemand)],
) -> Result<(f64, f64)> {
    let r = contributions
        .iter()
        .fold(noise, |acc, (a, ed)| acc + a * ed.value);
    let next = price * r.exp();
    if !(r.is_finite() && next.is_finite() && next > 0.0) {
        return Err(Error::InvalidInput(format!(
            "log-price update left the finite range (p={price}, r={r})"
        )));
    }
    Ok((next, r))
}

/// Random-walk prefix of `len` prices starting at `p0`.
pub fn bootstrap_random_walk(p0: f64, sigma: f64, len: usize, seed: u64) -> Result<PriceSeries> {
    let sc = Scenario::random_walk(p0, sigma, len, len + 1, seed);
    sc.validate()?;
    let mut sim = Simulation::new(&sc)?;
    while sim.t() + 1 < len {
        sim.advance()?;
    }
    PriceSeries::new(sim.record.prices())
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    rng: ChaCha8Rng,
    cache: IndicatorCache,
    portfolio: Portfolio,
    record: SimulationRecord,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let mut cache = IndicatorCache::new(scenario.volumes.clone(), scenario.index.clone());
        cache.push(scenario.p0);
        let record = SimulationRecord {
            group_ids: scenario.groups.iter().map(|g| g.id.clone()).collect(),
            bootstrap_len: scenario.bootstrap_len,
            rows: vec![RecordRow {
                t: 0,
                price: scenario.p0,
                log_return: 0.0,
                regime: Regime::Bootstrap,
                noise: 0.0,
                groups: scenario
                    .groups
                    .iter()
                    .map(|_| GroupStep {
                        ed: 0.0,
                        active: false,
                        strength: 0.0,
                    })
                    .collect(),
            }],
        };
        Ok(Simulation {
            scenario,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            cache,
            portfolio: scenario.portfolio.unwrap_or_default(),
            record,
        })
    }

    /// Index of the latest price.
    pub fn t(&self) -> usize {
        self.record.rows.len() - 1
    }

    pub fn is_done(&self) -> bool {
        self.record.rows.len() >= self.scenario.horizon
    }

    pub fn portfolio(&self) -> &Portfolio {
        &self.portfolio
    }

    pub fn record(&self) -> &SimulationRecord {
        &self.record
    }

    fn evaluate(&mut self, g: &TraderGroup, t: usize) -> ExcessDemand {
        let r = &g.rules;
        let fv = self.cache.features(&g.feature_params());
        use crate::indicators::Feature as F;
        match &g.source {
            DemandSource::Rules(block) => block.evaluate(&fv),
            DemandSource::Builtin(b) => match b {
                BuiltinGroup::Ed1 => r.ed1(fv.get(F::X1)),
                BuiltinGroup::Ed2 => r.ed2(fv.get(F::X2), fv.get(F::X3)),
                BuiltinGroup::Ed3 => r.ed3(fv.get(F::X2), fv.get(F::X3)),
                BuiltinGroup::Ed4 => r.ed4(fv.get(F::X4), fv.get(F::X5)),
                BuiltinGroup::Ed5 => r.ed5(fv.get(F::X4), fv.get(F::X5)),
                BuiltinGroup::Ed6 => r.ed6(fv.get(F::X1)),
                BuiltinGroup::Ed7 => r.ed7(fv.get(F::X1)),
                BuiltinGroup::Ed8 => {
                    let phase = self.scenario.manipulator.and_then(|m| m.phase_at(t));
                    r.ed8(fv.get(F::X1), phase)
                }
                BuiltinGroup::Ed9 => r.ed9(fv.get(F::X6), fv.get(F::X7)),
                BuiltinGroup::Ed10 => {
                    let price = self.cache.prices()[t];
                    r.ed10(
                        &self.portfolio,
                        price,
                        self.cache.rolling_max(g.params.n),
                        g.stops,
                    )
                }
                BuiltinGroup::Ed11 => {
                    r.ed11(fv.get(F::X4), fv.get(F::X5), fv.get(F::X8), fv.get(F::X9))
                }
                BuiltinGroup::Ed12 => r.ed12(fv.get(F::X4), fv.get(F::X5), fv.get(F::X10)),
            },
        }
    }

    /// Produce the next price.
    pub fn advance(&mut self) -> Result<()> {
        let sc = self.scenario;
        let t = self.t();
        let next_t = t + 1;
        let regime = if next_t < sc.bootstrap_len {
            Regime::Bootstrap
        } else {
            Regime::Model
        };
        let draw_noise = regime == Regime::Bootstrap || sc.keep_noise;
        let noise = if draw_noise {
            let eps: f64 = StandardNormal.sample(&mut self.rng);
            sc.sigma * eps
        } else {
            0.0
        };

        let mut steps = Vec::with_capacity(sc.groups.len());
        let mut r = noise;
        for g in &sc.groups {
            let a = g.strength.at(t);
            let ed = match regime {
                Regime::Bootstrap => ExcessDemand::INACTIVE,
                Regime::Model => self.evaluate(g, t),
            };
            r += a * ed.value;
            steps.push(GroupStep {
                ed: ed.value,
                active: ed.active,
                strength: a,
            });
            if regime == Regime::Model
                && matches!(g.source, DemandSource::Builtin(BuiltinGroup::Ed10))
            {
                let price = self.cache.prices()[t];
                self.portfolio = self.portfolio.apply(a * ed.value, price);
            }
        }

        let prev = self.record.rows[t].price;
        let price = prev * r.exp();
        if !(r.is_finite() && price.is_finite() && price > 0.0) {
            return Err(Error::Numerical {
                t: next_t,
                message: format!(
                    "price {prev} with log-return {r} (noise {noise}) leaves the representable range"
                ),
                partial: Box::new(self.record.clone()),
            });
        }
        self.cache.push(price);
        self.record.rows.push(RecordRow {
            t: next_t,
            price,
            log_return: r,
            regime,
            noise,
            groups: steps,
        });
        Ok(())
    }

    pub fn run(mut self) -> Result<SimulationRecord> {
        while !self.is_done() {
            self.advance()?;
        }
        Ok(self.record)
    }
}

/// Run a scenario from start to horizon.
pub fn simulate(scenario: &Scenario) -> Result<SimulationRecord> {
    Simulation::new(scenario)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{ConsequentCenters, TermFamily};
    use crate::rules::BuiltinGroup as G;

    fn group(g: G, a: f64) -> TraderGroup {
        TraderGroup::builtin(
            g,
            StrengthSchedule::constant(a).unwrap(),
            FeatureParams::default(),
            0.01,
        )
        .unwrap()
    }

    fn fig3(seed: u64) -> Scenario {
        let mut s = Scenario::random_walk(10.0, 0.037, 100, 500, seed);
        s.keep_noise = false;
        s.groups.push(group(G::Ed1, 0.03));
        s
    }

    #[test]
    fn strength_schedule_lookup() {
        let s = StrengthSchedule::piecewise(vec![(0, 0.1), (50, 0.3), (80, 0.0)]).unwrap();
        assert_eq!(s.at(0), 0.1);
        assert_eq!(s.at(49), 0.1);
        assert_eq!(s.at(50), 0.3);
        assert_eq!(s.at(1000), 0.0);
        assert!(StrengthSchedule::piecewise(vec![(1, 0.1)]).is_err());
        assert!(StrengthSchedule::piecewise(vec![(0, 0.1), (0, 0.2)]).is_err());
        assert!(StrengthSchedule::constant(-0.1).is_err());
        assert!(StrengthSchedule::constant(f64::NAN).is_err());
    }

    #[test]
    fn price_step_examples() {
        let (p, r) = price_step(10.0, 0.0, &[(0.2, ExcessDemand::active(0.1))]).unwrap();
        assert!((p - 10.0 * 0.02f64.exp()).abs() < 1e-12);
        assert!((p - 10.2020).abs() < 1e-4);
        assert!((r - 0.02).abs() < 1e-15);
        let (p, _) = price_step(10.0, 0.0, &[(0.3, ExcessDemand::INACTIVE)]).unwrap();
        assert!((p - 10.0).abs() < 1e-12);
        let (p, r) = price_step(
            10.0,
            0.0,
            &[
                (0.2, ExcessDemand::active(0.1)),
                (0.1, ExcessDemand::active(-0.2)),
            ],
        )
        .unwrap();
        assert_eq!(r, 0.0);
        assert!((p - 10.0).abs() < 1e-12);
        assert!(price_step(10.0, f64::INFINITY, &[]).is_err());
    }

    #[test]
    fn bootstrap_examples() {
        let flat = bootstrap_random_walk(10.0, 0.0, 100, 3).unwrap();
        assert_eq!(flat.len(), 100);
        assert!(flat.as_slice().iter().all(|p| *p == 10.0));
        let a = bootstrap_random_walk(10.0, 0.037, 100, 9).unwrap();
        let b = bootstrap_random_walk(10.0, 0.037, 100, 9).unwrap();
        assert_eq!(a, b);
        assert!(bootstrap_random_walk(-1.0, 0.1, 10, 0).is_err());
        assert!(bootstrap_random_walk(1.0, -0.1, 10, 0).is_err());
    }

    #[test]
    fn bootstrap_volatility_close_to_sigma() {
        for seed in 0..50 {
            let s = bootstrap_random_walk(10.0, 0.037, 100, seed).unwrap();
            assert!(s.as_slice().iter().all(|p| *p > 0.0));
            let r: Vec<f64> = (1..s.len()).map(|t| s.log_return(t).unwrap()).collect();
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64;
            let sd = var.sqrt();
            assert!((sd / 0.037 - 1.0).abs() < 0.25, "seed {seed}: sd {sd}");
        }
    }

    #[test]
    fn fig3_shape_and_regimes() {
        let rec = simulate(&fig3(1)).unwrap();
        assert_eq!(rec.rows.len(), 500);
        assert!(rec.rows.iter().all(|r| r.price > 0.0));
        assert_eq!(rec.rows[99].regime, Regime::Bootstrap);
        assert_eq!(rec.rows[100].regime, Regime::Model);
        assert!(rec.rows[100..].iter().all(|r| r.noise == 0.0));
        assert!(rec.rows[101..].iter().any(|r| r.groups[0].active));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(simulate(&fig3(5)).unwrap(), simulate(&fig3(5)).unwrap());
        assert_ne!(simulate(&fig3(5)).unwrap(), simulate(&fig3(6)).unwrap());
    }

    #[test]
    fn zero_groups_with_noise_is_random_walk() {
        let s = Scenario::random_walk(10.0, 0.02, 50, 300, 11);
        let rec = simulate(&s).unwrap();
        let rw = bootstrap_random_walk(10.0, 0.02, 300, 11).unwrap();
        assert_eq!(rec.prices(), rw.as_slice());
        assert!(rec.group_ids.is_empty());
    }

    #[test]
    fn zero_strength_matches_random_walk() {
        let mut s = Scenario::random_walk(10.0, 0.05, 100, 400, 8);
        s.groups.push(group(G::Ed1, 0.0));
        s.groups.push(group(G::Ed2, 0.0));
        let pure = simulate(&Scenario::random_walk(10.0, 0.05, 100, 400, 8)).unwrap();
        assert_eq!(simulate(&s).unwrap().prices(), pure.prices());
    }

    #[test]
    fn decomposition_holds() {
        let mut s = Scenario::random_walk(10.0, 0.05, 100, 500, 4);
        s.groups.push(group(G::Ed1, 0.2));
        s.groups.push(group(G::Ed2, 1.0));
        s.groups.push(group(G::Ed3, 1.0));
        let rec = simulate(&s).unwrap();
        for w in rec.rows.windows(2) {
            let r = &w[1];
            let sum = r
                .groups
                .iter()
                .fold(r.noise, |acc, g| acc + g.strength * g.ed);
            assert!((r.log_return - sum).abs() < 1e-12);
            let direct = r.price.ln() - w[0].price.ln();
            assert!((r.log_return - direct).abs() < 1e-12);
            for g in &r.groups {
                assert!(g.active || g.ed == 0.0);
            }
        }
    }

    #[test]
    fn doubling_strength_doubles_contribution() {
        let base = fig3(2);
        let mut sim = Simulation::new(&base).unwrap();
        while sim.t() < 150 {
            sim.advance().unwrap();
        }
        let mut doubled = base.clone();
        doubled.groups[0].strength = doubled.groups[0].strength.scaled(2.0).unwrap();
        // same state, one more step under each strength
        let mut a = sim.clone();
        a.advance().unwrap();
        let mut b = Simulation {
            scenario: &doubled,
            ..sim.clone()
        };
        b.advance().unwrap();
        let ga = a.record().rows.last().unwrap().groups[0];
        let gb = b.record().rows.last().unwrap().groups[0];
        assert_eq!(ga.ed, gb.ed);
        assert_eq!(2.0 * ga.strength * ga.ed, gb.strength * gb.ed);
    }

    #[test]
    fn manipulator_push_phase_is_constant() {
        let mut s = Scenario::random_walk(10.0, 0.03, 100, 300, 3);
        s.keep_noise = false;
        s.manipulator = Some(ManipulatorSchedule::new(100, 200, 220, 300).unwrap());
        s.groups.push(group(G::Ed8, 0.05));
        let rec = simulate(&s).unwrap();
        for row in &rec.rows[201..=220] {
            assert_eq!(row.groups[0].ed, 0.4);
            assert_eq!(row.log_return, 0.05 * 0.4);
        }
    }

    #[test]
    fn stop_rules_liquidate_on_crash() {
        let mut s = Scenario::random_walk(10.0, 0.0, 20, 60, 0);
        s.keep_noise = false;
        s.portfolio = Some(Portfolio::new(1.0, 20.0).unwrap());
        // price 10 against an entry of 20: loss ln(0.5) ≈ -0.69 is fully Negative Large
        s.groups.push(group(G::Ed10, 0.5));
        let mut sim = Simulation::new(&s).unwrap();
        while !sim.is_done() {
            sim.advance().unwrap();
        }
        let rec = sim.record().clone();
        assert!(rec.rows[20..]
            .iter()
            .skip(1)
            .all(|r| r.groups[0].ed == -0.4));
        assert!(sim.portfolio().amount < 1.0);
    }

    #[test]
    fn config_errors_before_running() {
        let mut s = fig3(0);
        s.horizon = 100;
        assert!(matches!(simulate(&s), Err(Error::Config(_))));
        let mut s = fig3(0);
        s.groups.push(group(G::Ed8, 0.1));
        assert!(matches!(simulate(&s), Err(Error::Config(_))));
        let mut s = fig3(0);
        s.groups[0].params.n_star = 500;
        s.groups[0].source = DemandSource::Builtin(G::Ed2);
        assert!(matches!(simulate(&s), Err(Error::Config(_))));
        let mut s = fig3(0);
        s.groups.push(group(G::Ed1, 0.1));
        assert!(matches!(simulate(&s), Err(Error::Config(_))));
    }

    #[test]
    fn numerical_failure_keeps_partial_record() {
        let mut s = Scenario::random_walk(10.0, 0.0, 10, 100, 0);
        s.keep_noise = false;
        let block =
            crate::dsl::parse_rule_block("GROUP boom { IF x1 IS AZ THEN ed IS BB; }").unwrap();
        s.groups.push(TraderGroup {
            id: "boom".into(),
            source: DemandSource::Rules(
                block.compile(TermFamily::new(0.01).unwrap(), ConsequentCenters::STANDARD),
            ),
            strength: StrengthSchedule::constant(1e308).unwrap(),
            params: FeatureParams::default(),
            rules: RuleSet::new(0.01).unwrap(),
            stops: StopWidths::default(),
        });
        match simulate(&s) {
            Err(Error::Numerical { t, partial, .. }) => {
                assert_eq!(t, 10);
                assert_eq!(partial.rows.len(), 10);
            }
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }
}
