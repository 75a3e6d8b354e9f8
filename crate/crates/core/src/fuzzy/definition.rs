//! Plain-text system definitions and the built-in scheduling rule base.
//!
//! ```text
//! # comment
//! INPUT  loss 0 6
//! INPUT  iter 0 1
//! OUTPUT lr 0 1.5e-7 1001
//! SET loss Best trapezoid 0 0 0.4 0.7
//! SET iter Initial trapezoid 0 0 100/T 110/T
//! IF loss IS Best AND iter IS Initial THEN lr IS Medium, b1 IS Minimum, b3 IS Maximum
//! ```
//!
//! Keywords are case-insensitive. A breakpoint written `k/T` is divided by
//! the run's total step count. Grid size defaults to [`DEFAULT_GRID`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{FuzzySet, FuzzySystem, Rule, Shape, Universe, DEFAULT_GRID};
use crate::error::{Error, Result};

struct Decl {
    output: bool,
    name: String,
    lo: f64,
    hi: f64,
    grid_n: usize,
    sets: Vec<FuzzySet>,
}

struct Parser<'a> {
    path: &'a Path,
    total_steps: usize,
}

impl Parser<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.path.to_path_buf(), line, msg: msg.into() }
    }

    fn number(&self, line: usize, tok: &str) -> Result<f64> {
        let value = match tok.strip_suffix("/T").or_else(|| tok.strip_suffix("/t")) {
            Some(k) => k.parse::<f64>().map(|k| k / self.total_steps as f64),
            None => tok.parse::<f64>(),
        };
        value.map_err(|_| self.err(line, format!("expected a number, found `{tok}`")))
    }
}

/// Parses a definition. `k/T` breakpoints resolve against `total_steps`.
pub fn parse_definition(text: &str, total_steps: usize) -> Result<FuzzySystem> {
    parse_from(Path::new("<definition>"), text, total_steps)
}

/// Reads and parses a definition file.
pub fn load_definition(path: &Path, total_steps: usize) -> Result<FuzzySystem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_from(path, &text, total_steps)
}

fn parse_from(path: &Path, text: &str, total_steps: usize) -> Result<FuzzySystem> {
    if total_steps == 0 {
        return Err(Error::invalid("total steps must be positive"));
    }
    let p = Parser { path, total_steps };
    let mut decls: Vec<Decl> = Vec::new();
    let mut raw_rules: Vec<(usize, Vec<(String, String)>, Vec<(String, String)>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let spaced = content.replace(',', " , ");
        let toks: Vec<&str> = spaced.split_whitespace().collect();
        match toks[0].to_ascii_uppercase().as_str() {
            kw @ ("INPUT" | "OUTPUT") => {
                if !(4..=5).contains(&toks.len()) {
                    return Err(p.err(line, format!("usage: {kw} <name> <lo> <hi> [grid]")));
                }
                if decls.iter().any(|d| d.name == toks[1]) {
                    return Err(p.err(line, format!("universe `{}` declared twice", toks[1])));
                }
                let grid_n = match toks.get(4) {
                    Some(g) => g.parse().map_err(|_| p.err(line, format!("bad grid size `{g}`")))?,
                    None => DEFAULT_GRID,
                };
                decls.push(Decl {
                    output: kw == "OUTPUT",
                    name: toks[1].to_string(),
                    lo: p.number(line, toks[2])?,
                    hi: p.number(line, toks[3])?,
                    grid_n,
                    sets: Vec::new(),
                });
            }
            "SET" => {
                if toks.len() < 4 {
                    return Err(p.err(line, "usage: SET <universe> <name> <shape> <breakpoints...>"));
                }
                let nums = toks[4..].iter().map(|t| p.number(line, t)).collect::<Result<Vec<_>>>()?;
                let shape = match (toks[3].to_ascii_lowercase().as_str(), nums.as_slice()) {
                    ("triangle", &[a, b, c]) => Shape::Triangle { a, b, c },
                    ("trapezoid", &[a, b, c, d]) => Shape::Trapezoid { a, b, c, d },
                    (kind, _) => return Err(p.err(line, format!("bad shape `{kind}` with {} breakpoints", nums.len()))),
                };
                let decl = decls
                    .iter_mut()
                    .find(|d| d.name == toks[1])
                    .ok_or_else(|| p.err(line, format!("SET before declaring universe `{}`", toks[1])))?;
                decl.sets.push(FuzzySet::new(toks[2], shape));
            }
            "IF" => {
                let (ante, cons) = parse_rule(&p, line, &toks)?;
                raw_rules.push((line, ante, cons));
            }
            other => return Err(p.err(line, format!("unknown directive `{other}`"))),
        }
    }

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for d in decls {
        let u = Universe::new(d.name, d.lo, d.hi, d.sets, d.grid_n)?;
        if d.output {
            outputs.push(u);
        } else {
            inputs.push(u);
        }
    }

    let resolve = |line: usize, universes: &[Universe], clauses: &[(String, String)]| -> Result<Vec<Option<usize>>> {
        let mut slots = vec![None; universes.len()];
        for (var, set) in clauses {
            let u = universes
                .iter()
                .position(|u| u.name() == var)
                .ok_or_else(|| p.err(line, format!("unknown variable `{var}`")))?;
            if slots[u].is_some() {
                return Err(p.err(line, format!("variable `{var}` used twice")));
            }
            slots[u] = Some(
                universes[u]
                    .set_index(set)
                    .ok_or_else(|| p.err(line, format!("`{var}` has no set `{set}`")))?,
            );
        }
        Ok(slots)
    };
    let rules = raw_rules
        .iter()
        .map(|(line, ante, cons)| {
            Ok(Rule { antecedents: resolve(*line, &inputs, ante)?, consequents: resolve(*line, &outputs, cons)? })
        })
        .collect::<Result<Vec<_>>>()?;

    FuzzySystem::new(inputs, outputs, rules)
}

type Clauses = Vec<(String, String)>;

fn parse_rule(p: &Parser<'_>, line: usize, toks: &[&str]) -> Result<(Clauses, Clauses)> {
    let then = toks
        .iter()
        .position(|t| t.eq_ignore_ascii_case("THEN"))
        .ok_or_else(|| p.err(line, "rule without THEN"))?;
    let clauses = |part: &[&str], sep: &str| -> Result<Clauses> {
        part.split(|t| t.eq_ignore_ascii_case(sep))
            .map(|c| match c {
                [var, is, set] if is.eq_ignore_ascii_case("IS") => Ok((var.to_string(), set.to_string())),
                _ => Err(p.err(line, format!("malformed clause `{}`", c.join(" ")))),
            })
            .collect()
    };
    Ok((clauses(&toks[1..then], "AND")?, clauses(&toks[then + 1..], ",")?))
}

/// Serializes a system in the format accepted by [`parse_definition`].
pub fn to_definition(system: &FuzzySystem) -> String {
    let mut out = String::new();
    let universes = system.inputs().iter().map(|u| ("INPUT", u)).chain(system.outputs().iter().map(|u| ("OUTPUT", u)));
    for (kw, u) in universes.clone() {
        let (lo, hi) = u.bounds();
        let _ = writeln!(out, "{kw} {} {lo:e} {hi:e} {}", u.name(), u.grid().len());
    }
    for (_, u) in universes {
        for s in u.sets() {
            let _ = writeln!(out, "SET {} {} {}", u.name(), s.name, s.shape);
        }
    }
    for rule in system.rules() {
        let clause = |slots: &[Option<usize>], universes: &[Universe]| {
            slots
                .iter()
                .zip(universes)
                .filter_map(|(s, u)| s.map(|s| format!("{} IS {}", u.name(), u.sets()[s].name)))
                .collect::<Vec<_>>()
        };
        let _ = writeln!(
            out,
            "IF {} THEN {}",
            clause(&rule.antecedents, system.inputs()).join(" AND "),
            clause(&rule.consequents, system.outputs()).join(", ")
        );
    }
    out
}

impl FuzzySystem {
    pub fn to_definition(&self) -> String {
        to_definition(self)
    }

    pub fn load(path: impl Into<PathBuf>, total_steps: usize) -> Result<Self> {
        load_definition(&path.into(), total_steps)
    }
}

const LOSS_SETS: [&str; 4] = ["Best", "Acceptable", "Medium", "Worst"];
const ITER_SETS: [&str; 3] = ["Initial", "Early", "Late"];

/// Learning-rate consequent per loss set, ordered by iteration set.
const LR_RULES: [[&str; 3]; 4] = [
    ["Medium", "Minimum", "Minimum"],
    ["Medium", "Medium", "Minimum"],
    ["High", "Medium", "Medium"],
    ["High", "High", "Medium"],
];
const B1_BY_ITER: [&str; 3] = ["Minimum", "Medium", "Maximum"];
const B3_BY_LOSS: [&str; 4] = ["Maximum", "Maximum", "Medium", "Minimum"];

/// Built-in scheduling system for a run of `total_steps` steps.
///
/// The iteration input is the fraction of the run completed. The `Initial`
/// set ends at step 100 (fading out by step 110); for short runs its
/// breakpoints are capped at 0.40/0.45 of the run so that `Early` keeps a
/// rising edge before its peak at the midpoint.
pub fn default_system(total_steps: usize) -> Result<FuzzySystem> {
    if total_steps == 0 {
        return Err(Error::invalid("total steps must be positive"));
    }
    let t = total_steps as f64;
    let init_end = (100.0 / t).min(0.40);
    let init_fade = (110.0 / t).min(0.45);

    let tri = |name: &str, a, b, c| FuzzySet::new(name, Shape::Triangle { a, b, c });
    let trap = |name: &str, a, b, c, d| FuzzySet::new(name, Shape::Trapezoid { a, b, c, d });
    let decay_sets = || vec![tri("Minimum", 0.0, 0.1, 0.3), tri("Medium", 0.1, 0.6, 0.9), tri("Maximum", 0.6, 0.9, 0.99)];

    let loss = Universe::new(
        "loss",
        0.0,
        6.0,
        vec![
            trap("Best", 0.0, 0.0, 0.4, 0.7),
            tri("Acceptable", 0.5, 0.8, 1.2),
            trap("Medium", 0.8, 1.5, 2.5, 3.5),
            trap("Worst", 2.5, 4.0, 6.0, 6.0),
        ],
        DEFAULT_GRID,
    )?;
    let iter = Universe::new(
        "iter",
        0.0,
        1.0,
        vec![
            trap("Initial", 0.0, 0.0, init_end, init_fade),
            tri("Early", init_end, 0.5, 0.75),
            trap("Late", 0.5, 0.75, 1.0, 1.0),
        ],
        DEFAULT_GRID,
    )?;
    let lr = Universe::new(
        "lr",
        0.0,
        1.5e-7,
        vec![tri("Minimum", 0.0, 0.0, 0.5e-7), tri("Medium", 0.0, 0.5e-7, 1e-7), trap("High", 0.5e-7, 1e-7, 1.5e-7, 1.5e-7)],
        DEFAULT_GRID,
    )?;
    let b1 = Universe::new("b1", 0.0, 0.99, decay_sets(), DEFAULT_GRID)?;
    let b3 = Universe::new("b3", 0.0, 0.99, decay_sets(), DEFAULT_GRID)?;

    let idx = |u: &Universe, name: &str| u.set_index(name).expect("built-in set name");
    let mut rules = Vec::with_capacity(12);
    for (li, lname) in LOSS_SETS.iter().enumerate() {
        for (ii, iname) in ITER_SETS.iter().enumerate() {
            rules.push(Rule {
                antecedents: vec![Some(idx(&loss, lname)), Some(idx(&iter, iname))],
                consequents: vec![
                    Some(idx(&lr, LR_RULES[li][ii])),
                    Some(idx(&b1, B1_BY_ITER[ii])),
                    Some(idx(&b3, B3_BY_LOSS[li])),
                ],
            });
        }
    }
    FuzzySystem::new(vec![loss, iter], vec![lr, b1, b3], rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_text() {
        let sys = default_system(1000).unwrap();
        let text = sys.to_definition();
        assert_eq!(parse_definition(&text, 1000).unwrap(), sys);
    }

    #[test]
    fn step_relative_breakpoints() {
        let text = "INPUT iter 0 1 11\nOUTPUT y 0 1 11\nSET iter a trapezoid 0 0 100/T 110/T\nSET y z triangle 0 0.5 1\nIF iter IS a THEN y IS z\n";
        let sys = parse_definition(text, 1000).unwrap();
        assert_eq!(sys.inputs()[0].sets()[0].shape, Shape::Trapezoid { a: 0.0, b: 0.0, c: 0.1, d: 0.11 });
    }

    #[test]
    fn keywords_are_case_insensitive_and_comments_ignored() {
        let text = "input x 0 1 # the input\noutput y 0 1\nset x a triangle 0 0.5 1\nset y b triangle 0 0.5 1\nif x is a then y is b\n";
        assert_eq!(parse_definition(text, 10).unwrap().rules().len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("INPUT x 0 1\nSET x a circle 0 1\n", 2),
            ("INPUT x 0 1\nSET y a triangle 0 0.5 1\n", 2),
            ("INPUT x 0 1\nOUTPUT y 0 1\nSET x a triangle 0 .5 1\nSET y b triangle 0 .5 1\nIF x IS a THEN y IS nope\n", 5),
            ("INPUT x 0 1\nOUTPUT y 0 1\nSET x a triangle 0 .5 1\nSET y b triangle 0 .5 1\nIF x IS a y IS b\n", 5),
            ("BOGUS\n", 1),
        ];
        for (text, want) in cases {
            match parse_definition(text, 10) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn default_rule_base_is_complete() {
        let sys = default_system(500).unwrap();
        assert_eq!(sys.rules().len(), 12);
        for l in 0..4 {
            for i in 0..3 {
                assert!(sys.rules().iter().any(|r| r.antecedents == vec![Some(l), Some(i)]));
            }
        }
    }

    #[test]
    fn short_runs_keep_sets_ordered() {
        for t in [1, 50, 65, 199, 200, 250, 100_000] {
            let sys = default_system(t).unwrap();
            sys.input("iter").unwrap().check_coverage(1001).unwrap();
        }
        assert!(default_system(0).is_err());
    }
}
