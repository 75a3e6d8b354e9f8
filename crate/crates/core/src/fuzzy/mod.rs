//! Mamdani fuzzy inference: piecewise-linear fuzzy sets, min activation,
//! max aggregation, centroid defuzzification on a uniform grid.
//!
//! The engine is general over any number of input and output universes.
//! [`FuzzySystem::infer_hyper`] is the two-input (`loss`, `iter`),
//! three-output (`lr`, `b1`, `b3`) view used by the scheduler, and
//! [`LookupTable`] precomputes it on a grid.

mod definition;
mod table;

pub use definition::{default_system, load_definition, parse_definition, to_definition};
pub use table::{
    build_lookup_table, check_monotonicity, monotonicity_violations, LookupTable, CSV_HEADER as TABLE_CSV_HEADER,
    MONOTONE_TOL,
};

use std::fmt;

use crate::error::{Error, Result};

/// Default number of defuzzification grid points per output universe.
pub const DEFAULT_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Triangle { a: f64, b: f64, c: f64 },
    /// Plateau at 1 on `[b, c]`. `a == b` or `c == d` gives a shoulder.
    Trapezoid { a: f64, b: f64, c: f64, d: f64 },
}

impl Shape {
    fn corners(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Triangle { a, b, c } => (a, b, b, c),
            Shape::Trapezoid { a, b, c, d } => (a, b, c, d),
        }
    }

    pub fn membership(&self, x: f64) -> f64 {
        let (a, b, c, d) = self.corners();
        if (b..=c).contains(&x) {
            1.0
        } else if x > a && x < b {
            (x - a) / (b - a)
        } else if x > c && x < d {
            (d - x) / (d - c)
        } else {
            0.0
        }
    }

    /// Closed interval outside of which membership is zero.
    pub fn support(&self) -> (f64, f64) {
        let (a, _, _, d) = self.corners();
        (a, d)
    }

    fn validate(&self) -> Result<()> {
        let (a, b, c, d) = self.corners();
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("fuzzy set breakpoints must be finite"));
        }
        if !(a <= b && b <= c && c <= d) {
            return Err(Error::invalid(format!("fuzzy set breakpoints out of order: {self}")));
        }
        if a == d {
            return Err(Error::invalid(format!("fuzzy set has empty support: {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Triangle { a, b, c } => write!(f, "triangle {a:e} {b:e} {c:e}"),
            Shape::Trapezoid { a, b, c, d } => write!(f, "trapezoid {a:e} {b:e} {c:e} {d:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzySet {
    pub name: String,
    pub shape: Shape,
}

impl FuzzySet {
    pub fn new(name: impl Into<String>, shape: Shape) -> Self {
        Self { name: name.into(), shape }
    }

    pub fn membership(&self, x: f64) -> f64 {
        self.shape.membership(x)
    }
}

/// Membership of `x` in `set`.
pub fn membership(set: &FuzzySet, x: f64) -> f64 {
    set.membership(x)
}

/// A bounded variable with its fuzzy sets and defuzzification grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Universe {
    name: String,
    lo: f64,
    hi: f64,
    sets: Vec<FuzzySet>,
    grid: Vec<f64>,
    /// `sampled[s][k]`: membership of set `s` at grid point `k`.
    sampled: Vec<Vec<f64>>,
}

impl Universe {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, sets: Vec<FuzzySet>, grid_n: usize) -> Result<Self> {
        let name = name.into();
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid(format!("universe `{name}` needs finite bounds lo < hi")));
        }
        if grid_n < 2 {
            return Err(Error::invalid(format!("universe `{name}` needs a grid of at least 2 points")));
        }
        if sets.is_empty() {
            return Err(Error::invalid(format!("universe `{name}` has no fuzzy sets")));
        }
        for (i, set) in sets.iter().enumerate() {
            set.shape.validate()?;
            let (a, d) = set.shape.support();
            if a < lo || d > hi {
                return Err(Error::invalid(format!(
                    "set `{}` support [{a}, {d}] leaves universe `{name}` [{lo}, {hi}]",
                    set.name
                )));
            }
            if sets[..i].iter().any(|s| s.name == set.name) {
                return Err(Error::invalid(format!("duplicate set `{}` in universe `{name}`", set.name)));
            }
        }
        let span = hi - lo;
        let last = (grid_n - 1) as f64;
        let grid: Vec<f64> = (0..grid_n).map(|k| lo + span * k as f64 / last).collect();
        let sampled = sets.iter().map(|s| grid.iter().map(|&x| s.membership(x)).collect()).collect();
        Ok(Self { name, lo, hi, sets, grid, sampled })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn sets(&self) -> &[FuzzySet] {
        &self.sets
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn set_index(&self, name: &str) -> Option<usize> {
        self.sets.iter().position(|s| s.name == name)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        if x.is_nan() {
            self.lo
        } else {
            x.clamp(self.lo, self.hi)
        }
    }

    /// Largest set membership at `x`.
    pub fn coverage_at(&self, x: f64) -> f64 {
        self.sets.iter().map(|s| s.membership(x)).fold(0.0, f64::max)
    }

    /// Checks that some set is active at each of `points` evenly spaced
    /// positions across the universe.
    pub fn check_coverage(&self, points: usize) -> Result<()> {
        let last = points.max(2) - 1;
        for k in 0..=last {
            let x = self.lo + self.span() * k as f64 / last as f64;
            if self.coverage_at(x) <= 0.0 {
                return Err(Error::invalid(format!("universe `{}` has no active set at {x}", self.name)));
            }
        }
        Ok(())
    }
}

/// Centre of mass `Σ xₖ μₖ / Σ μₖ` of `aggregate` sampled on `universe`'s grid.
pub fn centroid(aggregate: &[f64], universe: &Universe) -> Result<f64> {
    if aggregate.len() != universe.grid.len() {
        return Err(Error::DimensionMismatch { expected: universe.grid.len(), got: aggregate.len() });
    }
    let (moment, mass) = universe
        .grid
        .iter()
        .zip(aggregate)
        .fold((0.0, 0.0), |(m, s), (x, mu)| (m + x * mu, s + mu));
    if !(mass > 0.0) {
        return Err(Error::ZeroMass(universe.name.clone()));
    }
    Ok(moment / mass)
}

/// `IF` part names one set (or none, "don't care") per input universe;
/// `THEN` part names one set (or none) per output universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub antecedents: Vec<Option<usize>>,
    pub consequents: Vec<Option<usize>>,
}

/// Crisp outputs of the scheduling system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzySystem {
    inputs: Vec<Universe>,
    outputs: Vec<Universe>,
    rules: Vec<Rule>,
}

impl FuzzySystem {
    pub fn new(inputs: Vec<Universe>, outputs: Vec<Universe>, rules: Vec<Rule>) -> Result<Self> {
        if inputs.is_empty() || outputs.is_empty() {
            return Err(Error::invalid("a fuzzy system needs at least one input and one output"));
        }
        if rules.is_empty() {
            return Err(Error::invalid("a fuzzy system needs at least one rule"));
        }
        let all = inputs.iter().chain(&outputs).collect::<Vec<_>>();
        for (i, u) in all.iter().enumerate() {
            if all[..i].iter().any(|v| v.name == u.name) {
                return Err(Error::invalid(format!("duplicate universe `{}`", u.name)));
            }
        }
        for (r, rule) in rules.iter().enumerate() {
            if rule.antecedents.len() != inputs.len() || rule.consequents.len() != outputs.len() {
                return Err(Error::invalid(format!("rule {r} does not match the system's universes")));
            }
            let refs = rule.antecedents.iter().zip(&inputs).chain(rule.consequents.iter().zip(&outputs));
            for (set, universe) in refs {
                if matches!(set, Some(s) if *s >= universe.sets.len()) {
                    return Err(Error::invalid(format!("rule {r} names a set missing from `{}`", universe.name)));
                }
            }
        }
        Ok(Self { inputs, outputs, rules })
    }

    pub fn inputs(&self) -> &[Universe] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Universe] {
        &self.outputs
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    fn input_index(&self, name: &str) -> Result<usize> {
        self.inputs
            .iter()
            .position(|u| u.name == name)
            .ok_or_else(|| Error::UnknownId { kind: "input universe", id: name.to_string() })
    }

    fn output_index(&self, name: &str) -> Result<usize> {
        self.outputs
            .iter()
            .position(|u| u.name == name)
            .ok_or_else(|| Error::UnknownId { kind: "output universe", id: name.to_string() })
    }

    /// Firing strength of every rule for already-clamped inputs.
    fn activations(&self, x: &[f64]) -> Vec<f64> {
        self.rules
            .iter()
            .map(|rule| {
                rule.antecedents
                    .iter()
                    .zip(&self.inputs)
                    .zip(x)
                    .filter_map(|((set, u), &xi)| set.map(|s| u.sets[s].membership(xi)))
                    .fold(1.0, f64::min)
            })
            .collect()
    }

    /// Aggregated membership of output `o` sampled on its grid.
    pub fn aggregate(&self, o: usize, activations: &[f64]) -> Vec<f64> {
        let universe = &self.outputs[o];
        let mut agg = vec![0.0_f64; universe.grid.len()];
        for (rule, &act) in self.rules.iter().zip(activations) {
            let Some(s) = rule.consequents[o] else { continue };
            if act <= 0.0 {
                continue;
            }
            for (a, &mu) in agg.iter_mut().zip(&universe.sampled[s]) {
                *a = a.max(mu.min(act));
            }
        }
        agg
    }

    /// Crisp value of every output universe, in declaration order. Inputs
    /// are clamped to their universes first.
    pub fn infer(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch { expected: self.inputs.len(), got: inputs.len() });
        }
        let x: Vec<f64> = inputs.iter().zip(&self.inputs).map(|(&v, u)| u.clamp(v)).collect();
        let acts = self.activations(&x);
        (0..self.outputs.len())
            .map(|o| centroid(&self.aggregate(o, &acts), &self.outputs[o]))
            .collect()
    }

    /// Scheduling view: inputs `loss` and `iter`, outputs `lr`, `b1`, `b3`.
    pub fn infer_hyper(&self, loss: f64, iter_frac: f64) -> Result<FuzzyHyper> {
        let mut x = vec![0.0; self.inputs.len()];
        x[self.input_index("loss")?] = loss;
        x[self.input_index("iter")?] = iter_frac;
        let y = self.infer(&x)?;
        Ok(FuzzyHyper {
            lr: y[self.output_index("lr")?],
            beta1: y[self.output_index("b1")?],
            beta3: y[self.output_index("b3")?],
        })
    }

    pub fn input(&self, name: &str) -> Result<&Universe> {
        Ok(&self.inputs[self.input_index(name)?])
    }

    pub fn output(&self, name: &str) -> Result<&Universe> {
        Ok(&self.outputs[self.output_index(name)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: f64, b: f64, c: f64) -> Shape {
        Shape::Triangle { a, b, c }
    }

    #[test]
    fn triangle_membership() {
        let s = FuzzySet::new("t", tri(0.1, 0.6, 0.9));
        assert_eq!(membership(&s, 0.6), 1.0);
        assert!((membership(&s, 0.35) - 0.5).abs() < 1e-15);
        assert_eq!(membership(&s, 1.0), 0.0);
        assert_eq!(membership(&s, 0.1), 0.0);
    }

    #[test]
    fn shoulders_reach_one_at_edges() {
        let left = Shape::Trapezoid { a: 0.0, b: 0.0, c: 0.4, d: 0.7 };
        let right = Shape::Trapezoid { a: 2.5, b: 4.0, c: 6.0, d: 6.0 };
        assert_eq!(left.membership(0.0), 1.0);
        assert_eq!(right.membership(6.0), 1.0);
        assert!((left.membership(0.55) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn universe_validation() {
        let ok = vec![FuzzySet::new("a", tri(0.0, 0.5, 1.0))];
        assert!(Universe::new("u", 0.0, 1.0, ok.clone(), 11).is_ok());
        assert!(Universe::new("u", 1.0, 0.0, ok.clone(), 11).is_err());
        assert!(Universe::new("u", 0.0, 1.0, ok.clone(), 1).is_err());
        assert!(Universe::new("u", 0.0, 0.8, ok.clone(), 11).is_err());
        let dup = vec![ok[0].clone(), ok[0].clone()];
        assert!(Universe::new("u", 0.0, 1.0, dup, 11).is_err());
        let bad = vec![FuzzySet::new("b", tri(0.5, 0.2, 1.0))];
        assert!(Universe::new("u", 0.0, 1.0, bad, 11).is_err());
    }

    #[test]
    fn centroid_constant_and_zero_mass() {
        let u = Universe::new("u", 0.0, 1.0, vec![FuzzySet::new("a", tri(0.0, 0.5, 1.0))], 101).unwrap();
        assert!((centroid(&[1.0; 101], &u).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(centroid(&[0.0; 101], &u), Err(Error::ZeroMass(_))));
        assert!(centroid(&[1.0; 3], &u).is_err());
    }

    #[test]
    fn rules_must_reference_existing_sets() {
        let u = |n: &str| Universe::new(n, 0.0, 1.0, vec![FuzzySet::new("a", tri(0.0, 0.5, 1.0))], 11).unwrap();
        let bad = Rule { antecedents: vec![Some(3)], consequents: vec![Some(0)] };
        assert!(FuzzySystem::new(vec![u("x")], vec![u("y")], vec![bad]).is_err());
        let short = Rule { antecedents: vec![], consequents: vec![Some(0)] };
        assert!(FuzzySystem::new(vec![u("x")], vec![u("y")], vec![short]).is_err());
        let clash = Rule { antecedents: vec![Some(0)], consequents: vec![Some(0)] };
        assert!(FuzzySystem::new(vec![u("x")], vec![u("x")], vec![clash]).is_err());
    }

    #[test]
    fn uncovered_input_yields_zero_mass_error() {
        let input = Universe::new("x", 0.0, 1.0, vec![FuzzySet::new("low", tri(0.0, 0.1, 0.2))], 11).unwrap();
        let output = Universe::new("y", 0.0, 1.0, vec![FuzzySet::new("a", tri(0.0, 0.5, 1.0))], 11).unwrap();
        let rule = Rule { antecedents: vec![Some(0)], consequents: vec![Some(0)] };
        let sys = FuzzySystem::new(vec![input], vec![output], vec![rule]).unwrap();
        assert!(input_err_names(&sys, 0.9, "y"));
        assert!((sys.infer(&[0.1]).unwrap()[0] - 0.5).abs() < 1e-12);
    }

    fn input_err_names(sys: &FuzzySystem, x: f64, name: &str) -> bool {
        matches!(sys.infer(&[x]), Err(Error::ZeroMass(n)) if n == name)
    }
}
