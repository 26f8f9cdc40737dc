//! Run configuration: flat `key = value` text files.
//!
//! One pair per line, `#` starts a comment, unknown keys are rejected with
//! their line number, and a parsed config normalizes to a canonical form in
//! which every effective value is spelled out (so `parse → serialize →
//! parse` is the identity on normalized configs).
//!
//! Initial data come from a fixed expression catalog:
//!
//! * `constant:<v>`
//! * `cosine:<k>:<amp>` — `amp · ∏_a cos(kπx_a/L_a)`
//! * `gaussian:<center>:<width>:<amp>` — center relative to each extent
//! * `random:<seed>:<amp>` — iid uniform in `[−amp, amp)` from splitmix64

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::potential::{PotentialSpec, Proliferation};
use crate::rng::SplitMix64;
use crate::spectral::{build_operator, Bc, Operators};
use crate::stepper::{Problem, SimConfig, SimState};

/// Which double-well potential the config selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialChoice {
    Regular,
    Log,
    Obstacle,
}

impl PotentialChoice {
    fn as_str(&self) -> &'static str {
        match self {
            PotentialChoice::Regular => "regular",
            PotentialChoice::Log => "log",
            PotentialChoice::Obstacle => "obstacle",
        }
    }
}

/// Which proliferation function the config selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProliferationChoice {
    Constant,
    SmoothClamp,
}

impl ProliferationChoice {
    fn as_str(&self) -> &'static str {
        match self {
            ProliferationChoice::Constant => "constant",
            ProliferationChoice::SmoothClamp => "smooth_clamp",
        }
    }
}

/// Initial-datum expression from the fixed catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum InitExpr {
    Constant { value: f64 },
    Cosine { k: usize, amp: f64 },
    Gaussian { center: f64, width: f64, amp: f64 },
    Random { seed: u64, amp: f64 },
}

impl InitExpr {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::config(format!("unknown initial-data expression '{text}'"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["constant", v] => Ok(InitExpr::Constant { value: num(v)? }),
            ["cosine", k, amp] => Ok(InitExpr::Cosine {
                k: k.parse().map_err(|_| bad())?,
                amp: num(amp)?,
            }),
            ["gaussian", c, w, amp] => {
                let width = num(w)?;
                if width <= 0.0 || !width.is_finite() {
                    return Err(Error::config(format!(
                        "gaussian width must be positive in '{text}'"
                    )));
                }
                Ok(InitExpr::Gaussian {
                    center: num(c)?,
                    width,
                    amp: num(amp)?,
                })
            }
            ["random", seed, amp] => Ok(InitExpr::Random {
                seed: seed.parse().map_err(|_| bad())?,
                amp: num(amp)?,
            }),
            _ => Err(bad()),
        }
    }

    /// Sample the expression on a grid.
    pub fn eval(&self, grid: GridSpec) -> Field {
        match *self {
            InitExpr::Constant { value } => Field::constant(grid, value),
            InitExpr::Cosine { k, amp } => Field::from_fn(grid, |x| {
                let mut v = amp;
                for (a, &xa) in x.iter().enumerate() {
                    v *= (k as f64 * std::f64::consts::PI * xa / grid.extent(a)).cos();
                }
                v
            }),
            InitExpr::Gaussian { center, width, amp } => Field::from_fn(grid, |x| {
                let mut q = 0.0;
                for (a, &xa) in x.iter().enumerate() {
                    let d = xa - center * grid.extent(a);
                    q += d * d;
                }
                amp * (-q / (2.0 * width * width)).exp()
            }),
            InitExpr::Random { seed, amp } => {
                let mut rng = SplitMix64::new(seed);
                let values = (0..grid.len()).map(|_| rng.next_symmetric(amp)).collect();
                Field::from_values(grid, values).expect("length matches")
            }
        }
    }
}

impl std::fmt::Display for InitExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitExpr::Constant { value } => write!(f, "constant:{value}"),
            InitExpr::Cosine { k, amp } => write!(f, "cosine:{k}:{amp}"),
            InitExpr::Gaussian { center, width, amp } => {
                write!(f, "gaussian:{center}:{width}:{amp}")
            }
            InitExpr::Random { seed, amp } => write!(f, "random:{seed}:{amp}"),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dimension: usize,
    pub extent: [f64; 2],
    pub n: [usize; 2],
    pub bc_a: Bc,
    pub bc_b: Bc,
    pub bc_c: Bc,
    pub rho: f64,
    pub sigma: f64,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub n_steps: usize,
    pub lambda: f64,
    pub potential: PotentialChoice,
    pub c1: f64,
    pub c2: f64,
    pub p_kind: ProliferationChoice,
    pub p_p0: f64,
    pub p_width: f64,
    pub l_margin: f64,
    pub tol_outer: f64,
    pub tol_cg: f64,
    pub tol_newton: f64,
    pub adapt_h: bool,
    pub init_mu: InitExpr,
    pub init_phi: InitExpr,
    pub init_s: InitExpr,
    pub out_dir: String,
    pub snapshots_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 1,
            extent: [1.0, 1.0],
            n: [64, 64],
            bc_a: Bc::Neumann,
            bc_b: Bc::Neumann,
            bc_c: Bc::Neumann,
            rho: 0.5,
            sigma: 0.5,
            tau: 0.5,
            alpha: 1.0,
            beta: 1.0,
            h: 0.0,     // required key
            n_steps: 0, // required key
            lambda: 1e-3,
            potential: PotentialChoice::Regular,
            c1: 2.0,
            c2: 1.0,
            p_kind: ProliferationChoice::SmoothClamp,
            p_p0: 1.0,
            p_width: 1.0,
            l_margin: 0.1,
            tol_outer: 1e-10,
            tol_cg: 1e-12,
            tol_newton: 1e-11,
            adapt_h: false,
            init_mu: InitExpr::Constant { value: 0.0 },
            init_phi: InitExpr::Constant { value: 0.0 },
            init_s: InitExpr::Constant { value: 0.0 },
            out_dir: "out".into(),
            snapshots_every: 0,
        }
    }
}

/// Canonical key order of the normalized form.
const KEY_ORDER: [&str; 32] = [
    "dimension",
    "extent.x",
    "extent.y",
    "n.x",
    "n.y",
    "bc.A",
    "bc.B",
    "bc.C",
    "rho",
    "sigma",
    "tau",
    "alpha",
    "beta",
    "h",
    "n_steps",
    "lambda",
    "potential",
    "c1",
    "c2",
    "P.kind",
    "P.p0",
    "P.width",
    "L.margin",
    "tol.outer",
    "tol.cg",
    "tol.newton",
    "adapt_h",
    "init.mu",
    "init.phi",
    "init.s",
    "out.dir",
    "snapshots.every",
];

fn parse_bc(value: &str) -> Result<Bc> {
    match value {
        "neumann" => Ok(Bc::Neumann),
        "dirichlet" => Ok(Bc::Dirichlet),
        other => Err(Error::config(format!(
            "boundary condition must be neumann or dirichlet, got '{other}'"
        ))),
    }
}

impl RunConfig {
    /// Parse, fill defaults, and validate. Errors carry the line number of
    /// the offending key.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "line {line_no}: expected 'key = value', got '{line}'"
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(first) = seen.get(key) {
                return Err(Error::config(format!(
                    "line {line_no}: key '{key}' already set on line {first}"
                )));
            }
            seen.insert(key.to_string(), line_no);
            cfg.apply(key, value)
                .map_err(|e| Error::config(format!("line {line_no}: {e}")))?;
        }
        for required in ["h", "n_steps"] {
            if !seen.contains_key(required) {
                return Err(Error::config(format!("missing required key '{required}'")));
            }
        }
        cfg.validate(&seen)?;
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse_str(&text)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::config(format!("unparsable number '{value}'")))
        }
        fn int(value: &str) -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::config(format!("unparsable integer '{value}'")))
        }
        match key {
            "dimension" => self.dimension = int(value)?,
            "extent.x" => self.extent[0] = num(value)?,
            "extent.y" => self.extent[1] = num(value)?,
            "n.x" => self.n[0] = int(value)?,
            "n.y" => self.n[1] = int(value)?,
            "bc.A" => self.bc_a = parse_bc(value)?,
            "bc.B" => self.bc_b = parse_bc(value)?,
            "bc.C" => self.bc_c = parse_bc(value)?,
            "rho" => self.rho = num(value)?,
            "sigma" => self.sigma = num(value)?,
            "tau" => self.tau = num(value)?,
            "alpha" => self.alpha = num(value)?,
            "beta" => self.beta = num(value)?,
            "h" => self.h = num(value)?,
            "n_steps" => self.n_steps = int(value)?,
            "lambda" => self.lambda = num(value)?,
            "potential" => {
                self.potential = match value {
                    "regular" => PotentialChoice::Regular,
                    "log" => PotentialChoice::Log,
                    "obstacle" => PotentialChoice::Obstacle,
                    other => {
                        return Err(Error::config(format!(
                            "potential must be regular|log|obstacle, got '{other}'"
                        )))
                    }
                }
            }
            "c1" => self.c1 = num(value)?,
            "c2" => self.c2 = num(value)?,
            "P.kind" => {
                self.p_kind = match value {
                    "constant" => ProliferationChoice::Constant,
                    "smooth_clamp" => ProliferationChoice::SmoothClamp,
                    other => {
                        return Err(Error::config(format!(
                            "P.kind must be constant|smooth_clamp, got '{other}'"
                        )))
                    }
                }
            }
            "P.p0" => self.p_p0 = num(value)?,
            "P.width" => self.p_width = num(value)?,
            "L.margin" => self.l_margin = num(value)?,
            "tol.outer" => self.tol_outer = num(value)?,
            "tol.cg" => self.tol_cg = num(value)?,
            "tol.newton" => self.tol_newton = num(value)?,
            "adapt_h" => {
                self.adapt_h = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::config(format!(
                            "adapt_h must be true or false, got '{other}'"
                        )))
                    }
                }
            }
            "init.mu" => self.init_mu = InitExpr::parse(value)?,
            "init.phi" => self.init_phi = InitExpr::parse(value)?,
            "init.s" => self.init_s = InitExpr::parse(value)?,
            "out.dir" => self.out_dir = value.to_string(),
            "snapshots.every" => self.snapshots_every = int(value)?,
            other => return Err(Error::config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Grid described by the config.
    pub fn grid(&self) -> Result<GridSpec> {
        match self.dimension {
            1 => GridSpec::dim1(self.extent[0], self.n[0]),
            2 => GridSpec::dim2(self.extent, self.n),
            d => Err(Error::config(format!("unsupported dimension {d}"))),
        }
    }

    fn potential_spec(&self) -> Result<PotentialSpec> {
        match self.potential {
            PotentialChoice::Regular => Ok(PotentialSpec::regular()),
            PotentialChoice::Log => PotentialSpec::logarithmic(self.c1),
            PotentialChoice::Obstacle => PotentialSpec::double_obstacle(self.c2),
        }
    }

    fn proliferation(&self) -> Result<Proliferation> {
        match self.p_kind {
            ProliferationChoice::Constant => Proliferation::constant(self.p_p0),
            ProliferationChoice::SmoothClamp => {
                Proliferation::smooth_clamp(self.p_p0, self.p_width)
            }
        }
    }

    /// Validation applied after parsing, reporting the config line of the
    /// violated key where one exists.
    fn validate(&self, seen: &HashMap<String, usize>) -> Result<()> {
        let lined = |key: &str, msg: String| -> Error {
            match seen.get(key) {
                Some(line) => Error::config(format!("line {line}: {msg}")),
                None => Error::config(msg),
            }
        };
        self.grid()?;
        let potential = self.potential_spec()?;
        self.proliferation()?;
        let sim = self.sim_config(&potential);
        sim.validate(&potential)?;
        if self.n_steps == 0 {
            return Err(lined("n_steps", "n_steps must be at least 1".into()));
        }
        // admissibility gate on the initial phase field
        if matches!(
            self.potential,
            PotentialChoice::Log | PotentialChoice::Obstacle
        ) {
            let phi0 = self.init_phi.eval(self.grid()?);
            let sup = phi0.norm_inf();
            if sup > 1.0 {
                return Err(lined(
                    "init.phi",
                    format!(
                        "initial datum outside D(F₁): ‖φ₀‖∞ = {sup} > 1 for the {} potential",
                        self.potential.as_str()
                    ),
                ));
            }
        }
        Ok(())
    }

    fn sim_config(&self, potential: &PotentialSpec) -> SimConfig {
        let mut sim = SimConfig::new(self.h, self.n_steps);
        sim.alpha = self.alpha;
        sim.beta = self.beta;
        sim.rho = self.rho;
        sim.sigma = self.sigma;
        sim.tau = self.tau;
        sim.lambda = self.lambda;
        sim.stabilization = potential.stabilization_l(self.l_margin);
        sim.tol_outer = self.tol_outer;
        sim.tol_cg = self.tol_cg;
        sim.tol_newton = self.tol_newton;
        sim.adapt_h = self.adapt_h;
        sim
    }

    /// Assemble the problem and its initial state.
    pub fn build(&self) -> Result<(Problem, SimState)> {
        let grid = self.grid()?;
        let potential = self.potential_spec()?;
        let ops = Operators::new(
            build_operator(grid, self.bc_a),
            build_operator(grid, self.bc_b),
            build_operator(grid, self.bc_c),
        )?;
        let problem = Problem::new(
            self.sim_config(&potential),
            ops,
            potential,
            self.proliferation()?,
        )?;
        let initial = SimState::initial(
            self.init_mu.eval(grid),
            self.init_phi.eval(grid),
            self.init_s.eval(grid),
        )?;
        problem.check_initial(&initial)?;
        Ok((problem, initial))
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "dimension" => self.dimension.to_string(),
            "extent.x" => self.extent[0].to_string(),
            "extent.y" => self.extent[1].to_string(),
            "n.x" => self.n[0].to_string(),
            "n.y" => self.n[1].to_string(),
            "bc.A" => self.bc_a.to_string(),
            "bc.B" => self.bc_b.to_string(),
            "bc.C" => self.bc_c.to_string(),
            "rho" => self.rho.to_string(),
            "sigma" => self.sigma.to_string(),
            "tau" => self.tau.to_string(),
            "alpha" => self.alpha.to_string(),
            "beta" => self.beta.to_string(),
            "h" => self.h.to_string(),
            "n_steps" => self.n_steps.to_string(),
            "lambda" => self.lambda.to_string(),
            "potential" => self.potential.as_str().to_string(),
            "c1" => self.c1.to_string(),
            "c2" => self.c2.to_string(),
            "P.kind" => self.p_kind.as_str().to_string(),
            "P.p0" => self.p_p0.to_string(),
            "P.width" => self.p_width.to_string(),
            "L.margin" => self.l_margin.to_string(),
            "tol.outer" => self.tol_outer.to_string(),
            "tol.cg" => self.tol_cg.to_string(),
            "tol.newton" => self.tol_newton.to_string(),
            "adapt_h" => self.adapt_h.to_string(),
            "init.mu" => self.init_mu.to_string(),
            "init.phi" => self.init_phi.to_string(),
            "init.s" => self.init_s.to_string(),
            "out.dir" => self.out_dir.clone(),
            "snapshots.every" => self.snapshots_every.to_string(),
            _ => unreachable!("key list is fixed"),
        }
    }

    /// Canonical normalized form: fixed key order, every effective value.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        for key in KEY_ORDER.iter() {
            writeln!(out, "{key} = {}", self.value_of(key)).expect("string write");
        }
        out
    }
}
