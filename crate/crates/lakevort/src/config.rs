//! Declarative experiment configuration: flat `key = value` lines,
//! `#` comments, no sections. Parse errors carry line numbers and name the
//! offending key.

use crate::error::{Error, Result};
use crate::geometry::{build_annulus_lake, build_disk_lake, build_slit_square_lake, Lake};
use crate::rearrange::DistributionFamily;
use std::path::PathBuf;

/// Lake geometry selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Disk,
    Annulus,
    SlitSquare,
}

/// Depth profile selector: `b = profile(|x|²)` for radial lakes.
#[derive(Debug, Clone)]
pub enum ProfileSpec {
    Const,
    Parabolic,
    LinearShore,
    Custom(Expr),
}

impl ProfileSpec {
    /// The profile as a function of `t = |x|² ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ProfileSpec::Const => 1.0,
            ProfileSpec::Parabolic => 2.0 - 4.0 * (t - 0.5).powi(2),
            ProfileSpec::LinearShore => 1.0 - t,
            ProfileSpec::Custom(expr) => expr.eval(t),
        }
    }
}

/// External stream selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiChoice {
    /// No external flow.
    None,
    /// Rigid rotation at speed ν: `Ψ = (ν/2)∫₀^{|x|²} b`.
    Rotation,
}

/// Ascent initialization selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitChoice {
    Warm,
    Random,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub n: usize,
    pub r_inner: f64,
    pub profile: ProfileSpec,
    pub tau: f64,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub d_family: DistributionFamily,
    pub d_sup: f64,
    pub levels: usize,
    pub p: f64,
    pub nu: f64,
    pub nu_points: usize,
    pub psi: PsiChoice,
    pub circulations: Vec<f64>,
    pub lambda: f64,
    pub tol: f64,
    pub ascent_max_iter: usize,
    pub rel_tol: f64,
    pub init: InitChoice,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub green_max_rel_err: f64,
    pub green_probes: usize,
    pub bump_radius: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            geometry: Geometry::Disk,
            n: 64,
            r_inner: 0.4,
            profile: ProfileSpec::Parabolic,
            tau: 0.7,
            eps: 0.1,
            eps_list: Vec::new(),
            d_family: DistributionFamily::Uniform,
            d_sup: 1.0,
            levels: 1,
            p: 2.0,
            nu: 0.0,
            nu_points: 20,
            psi: PsiChoice::None,
            circulations: Vec::new(),
            lambda: 1.0,
            tol: 1e-10,
            ascent_max_iter: 200,
            rel_tol: 1e-10,
            init: InitChoice::Warm,
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            green_max_rel_err: 0.05,
            green_probes: 8,
            bump_radius: 0.12,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::Config {
                    line,
                    msg: format!("expected `key = value`, got `{stripped}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            cfg.apply(key, value, line)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let bad = |msg: String| Error::Config { line, msg };
        let num = |v: &str, key: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| bad(format!("key `{key}` expects a number, got `{v}`")))
        };
        let int = |v: &str, key: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| bad(format!("key `{key}` expects an integer, got `{v}`")))
        };
        match key {
            "geometry" => {
                self.geometry = match value {
                    "disk" => Geometry::Disk,
                    "annulus" => Geometry::Annulus,
                    "slit_square" => Geometry::SlitSquare,
                    _ => {
                        return Err(bad(format!(
                            "key `geometry` expects disk|annulus|slit_square, got `{value}`"
                        )))
                    }
                }
            }
            "n" => self.n = int(value, key)?,
            "r_inner" => self.r_inner = num(value, key)?,
            "profile" => {
                self.profile = match value {
                    "const" => ProfileSpec::Const,
                    "parabolic" => ProfileSpec::Parabolic,
                    "linear_shore" => ProfileSpec::LinearShore,
                    custom => match custom.strip_prefix("custom:") {
                        Some(expr) => ProfileSpec::Custom(Expr::parse(expr).map_err(|e| {
                            bad(format!("key `profile`: bad expression: {e}"))
                        })?),
                        None => {
                            return Err(bad(format!(
                                "key `profile` expects const|parabolic|linear_shore|custom:<expr>, \
                                 got `{value}`"
                            )))
                        }
                    },
                }
            }
            "tau" => self.tau = num(value, key)?,
            "eps" => self.eps = num(value, key)?,
            "eps_list" => {
                self.eps_list = value
                    .split(',')
                    .map(|v| num(v.trim(), key))
                    .collect::<Result<_>>()?;
            }
            "d_family" => {
                self.d_family = match value {
                    "uniform" => DistributionFamily::Uniform,
                    "linear" => DistributionFamily::Linear,
                    _ => {
                        return Err(bad(format!(
                            "key `d_family` expects uniform|linear, got `{value}`"
                        )))
                    }
                }
            }
            "d_sup" => self.d_sup = num(value, key)?,
            "levels" => self.levels = int(value, key)?,
            "p" => self.p = num(value, key)?,
            "nu" => self.nu = num(value, key)?,
            "nu_points" => self.nu_points = int(value, key)?,
            "psi" => {
                self.psi = match value {
                    "none" => PsiChoice::None,
                    "rotation" => PsiChoice::Rotation,
                    _ => {
                        return Err(bad(format!(
                            "key `psi` expects none|rotation, got `{value}`"
                        )))
                    }
                }
            }
            "circulations" => {
                self.circulations = value
                    .split(',')
                    .map(|v| num(v.trim(), key))
                    .collect::<Result<_>>()?;
            }
            "lambda" => self.lambda = num(value, key)?,
            "tol" => self.tol = num(value, key)?,
            "ascent_max_iter" => self.ascent_max_iter = int(value, key)?,
            "rel_tol" => self.rel_tol = num(value, key)?,
            "init" => {
                self.init = match value {
                    "warm" => InitChoice::Warm,
                    "random" => InitChoice::Random,
                    _ => {
                        return Err(bad(format!(
                            "key `init` expects warm|random, got `{value}`"
                        )))
                    }
                }
            }
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("key `seed` expects an integer, got `{value}`")))?
            }
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = Some(int(value, key)?),
            "green_max_rel_err" => self.green_max_rel_err = num(value, key)?,
            "green_probes" => self.green_probes = int(value, key)?,
            "bump_radius" => self.bump_radius = num(value, key)?,
            _ => {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    /// Reference circulation weights `c̄_i` (summing to 1): the configured
    /// list, or the natural default for the geometry.
    pub fn circulation_weights(&self) -> Vec<f64> {
        if !self.circulations.is_empty() {
            return self.circulations.clone();
        }
        match self.geometry {
            Geometry::Annulus => vec![1.0, 0.0],
            _ => vec![1.0],
        }
    }

    pub fn build_lake(&self) -> Result<Lake> {
        let profile = self.profile.clone();
        match self.geometry {
            Geometry::Disk => build_disk_lake(self.n, move |t| profile.eval(t)),
            Geometry::Annulus => build_annulus_lake(self.n, self.r_inner, move |t| profile.eval(t)),
            Geometry::SlitSquare => build_slit_square_lake(self.n),
        }
    }

    pub fn vortex_profile(&self) -> Result<crate::rearrange::VortexProfile> {
        crate::rearrange::VortexProfile::new(
            self.d_family,
            self.d_sup,
            self.tau,
            self.eps,
            self.p,
            self.levels,
        )
    }

    /// Admissibility of the configured rotation, checked before any solve.
    pub fn check_rotation(&self) -> Result<()> {
        if self.psi == PsiChoice::Rotation {
            let bound = crate::asymptotics::nu_bound(self.tau);
            if !(self.nu.abs() < bound) {
                return Err(Error::Admissibility {
                    nu: self.nu,
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// Arithmetic expression in the variable `t`: numbers, `t`, `+ - * / ^`,
/// parentheses, unary minus. Used by `profile = custom:<expr>`.
#[derive(Debug, Clone)]
pub struct Expr {
    ops: Vec<Op>,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
}

impl Expr {
    pub fn parse(text: &str) -> std::result::Result<Expr, String> {
        let tokens = lex(text)?;
        let mut parser = ExprParser { tokens, pos: 0 };
        let mut ops = Vec::new();
        parser.expr(&mut ops)?;
        if parser.pos != parser.tokens.len() {
            return Err(format!("unexpected trailing input at token {}", parser.pos));
        }
        Ok(Expr { ops })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(8);
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Var => stack.push(t),
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                _ => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => a / b,
                        Op::Pow => a.powf(b),
                        _ => unreachable!(),
                    });
                }
            }
        }
        stack.pop().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Num(f64),
    Var,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn lex(text: &str) -> std::result::Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            't' => {
                out.push(Token::Var);
                i += 1;
            }
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, '0'..='9' | '.' | 'e' | 'E')
                {
                    // allow exponent signs
                    if matches!(bytes[i] as char, 'e' | 'E')
                        && i + 1 < bytes.len()
                        && matches!(bytes[i + 1] as char, '+' | '-')
                    {
                        i += 1;
                    }
                    i += 1;
                }
                let num: f64 = text[start..i]
                    .parse()
                    .map_err(|_| format!("bad number `{}`", &text[start..i]))?;
                out.push(Token::Num(num));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct ExprParser {
    tokens: Vec<Token>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).copied()
    }

    fn expr(&mut self, ops: &mut Vec<Op>) -> std::result::Result<(), String> {
        self.term(ops)?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.pos += 1;
                    self.term(ops)?;
                    ops.push(Op::Add);
                }
                Token::Minus => {
                    self.pos += 1;
                    self.term(ops)?;
                    ops.push(Op::Sub);
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn term(&mut self, ops: &mut Vec<Op>) -> std::result::Result<(), String> {
        self.power(ops)?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Star => {
                    self.pos += 1;
                    self.power(ops)?;
                    ops.push(Op::Mul);
                }
                Token::Slash => {
                    self.pos += 1;
                    self.power(ops)?;
                    ops.push(Op::Div);
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn power(&mut self, ops: &mut Vec<Op>) -> std::result::Result<(), String> {
        self.atom(ops)?;
        if self.peek() == Some(Token::Caret) {
            self.pos += 1;
            // right associative
            self.power(ops)?;
            ops.push(Op::Pow);
        }
        Ok(())
    }

    fn atom(&mut self, ops: &mut Vec<Op>) -> std::result::Result<(), String> {
        match self.peek() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                ops.push(Op::Const(v));
                Ok(())
            }
            Some(Token::Var) => {
                self.pos += 1;
                ops.push(Op::Var);
                Ok(())
            }
            Some(Token::Minus) => {
                self.pos += 1;
                self.atom(ops)?;
                ops.push(Op::Neg);
                Ok(())
            }
            Some(Token::Open) => {
                self.pos += 1;
                self.expr(ops)?;
                if self.peek() != Some(Token::Close) {
                    return Err("missing closing parenthesis".into());
                }
                self.pos += 1;
                Ok(())
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
# a lake
geometry = annulus
n = 48
r_inner = 0.4
profile = parabolic
tau = 0.6
eps = 0.15
eps_list = 0.2, 0.1, 0.05
circulations = 0.4, 0.6
psi = rotation
nu = 0.01
threads = 2
out = results
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.geometry, Geometry::Annulus);
        assert_eq!(cfg.n, 48);
        assert_eq!(cfg.eps_list, vec![0.2, 0.1, 0.05]);
        assert_eq!(cfg.circulations, vec![0.4, 0.6]);
        assert_eq!(cfg.psi, PsiChoice::Rotation);
        assert_eq!(cfg.threads, Some(2));
        assert_eq!(cfg.out, PathBuf::from("results"));
        cfg.check_rotation().unwrap();
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = ExperimentConfig::parse("n = 32\nbogus = 1\n").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus"), "{msg}");
            }
            other => panic!("wrong error {other}"),
        }
    }

    #[test]
    fn bad_value_reports_line() {
        let err = ExperimentConfig::parse("tau = fast\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
    }

    #[test]
    fn rotation_admissibility_enforced() {
        let cfg = ExperimentConfig::parse("psi = rotation\nnu = 0.2\ntau = 0.7\n").unwrap();
        assert!(matches!(
            cfg.check_rotation(),
            Err(Error::Admissibility { .. })
        ));
    }

    #[test]
    fn custom_profile_expression() {
        let cfg = ExperimentConfig::parse("profile = custom:2 - 4*(t - 0.5)^2\n").unwrap();
        for t in [0.0, 0.3, 0.5, 1.0] {
            let expect = 2.0 - 4.0 * (t - 0.5f64).powi(2);
            assert!((cfg.profile.eval(t) - expect).abs() < 1e-14);
        }
        let e = Expr::parse("1 - t").unwrap();
        assert_eq!(e.eval(0.25), 0.75);
        let e = Expr::parse("-t + 1e0").unwrap();
        assert_eq!(e.eval(0.25), 0.75);
        assert!(Expr::parse("t +").is_err());
        assert!(Expr::parse("(t").is_err());
    }
}
