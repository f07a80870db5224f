//! Line-oriented run configuration: `section.key = value` with `#` comments,
//! no nesting beyond one dot. Unknown keys are rejected with their line
//! number; every derived quantity (m from alpha, default s = 2m + 4) is
//! resolved at parse time and echoed by the canonical printer.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use gkdv_core::{m_of_alpha, ConstantMode, ModelParams, Scheme, Sign, SpectralGrid};

#[derive(Debug)]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line: Some(line),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Picard,
    Regularity,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Picard => "picard",
            Command::Regularity => "regularity",
            Command::Validate => "validate",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Command::Simulate),
            "picard" => Ok(Command::Picard),
            "regularity" => Ok(Command::Regularity),
            "validate" => Ok(Command::Validate),
            other => Err(format!(
                "unknown command '{other}' (expected simulate|picard|regularity|validate)"
            )),
        }
    }
}

/// Initial-data specification, enum-tagged by `data.kind`.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSpec {
    CazenaveNaumkin {
        lambda: f64,
        theta: f64,
        phi: PhiSpec,
    },
    TravelingWave {
        c: f64,
        constant_mode: ConstantMode,
    },
    OneSided {
        x0: f64,
        s: u32,
        l: u32,
    },
    File {
        path: String,
    },
}

/// Optional perturbation added to lower-bounded data.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiSpec {
    None,
    Gaussian { amp: f64, width: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub grid_n: usize,
    pub grid_l: f64,
    pub alpha: f64,
    pub sign: Sign,
    pub lambda: f64,
    pub delta: f64,
    /// derived unless overridden: [1/alpha] + 1
    pub m: u32,
    /// derived unless overridden: 2m + 4
    pub s: u32,
    pub nonlinear_coupling: f64,
    pub t_final: f64,
    pub dt: f64,
    pub slices: usize,
    pub scheme: Scheme,
    pub picard_max_iter: usize,
    pub picard_tol: f64,
    pub picard_force: bool,
    pub front_x0: f64,
    pub front_v: f64,
    pub front_eps_prime: f64,
    pub front_r: f64,
    pub front_l: u32,
    pub proxy_s: u32,
    pub data: DataSpec,
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn grid(&self) -> gkdv_core::Result<Arc<SpectralGrid>> {
        SpectralGrid::new(self.grid_n, self.grid_l)
    }

    pub fn model_params(&self) -> gkdv_core::Result<ModelParams> {
        let p = ModelParams::new(self.alpha, self.sign, self.lambda, self.delta)?;
        let p = if self.s == 2 * p.m + 4 { p } else { p.with_regularity(self.s)? };
        Ok(p.with_coupling(self.nonlinear_coupling))
    }
}

const REQUIRED_KEYS: &[&str] = &[
    "command (or CLI subcommand)",
    "grid.n",
    "grid.L",
    "model.alpha",
    "model.lambda",
    "model.delta",
    "data.kind",
];

struct Raw {
    line: usize,
    value: String,
    used: bool,
}

struct Table {
    entries: Vec<(String, Raw)>,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        for (k, raw) in &mut self.entries {
            if k == key && !raw.used {
                raw.used = true;
                return Some((raw.line, raw.value.clone()));
            }
        }
        None
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ParseError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => value
                .parse::<T>()
                .map(Some)
                .map_err(|e| err(line, format!("bad value for {key}: {e}"))),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<(usize, T), ParseError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Err(ParseError {
                line: None,
                message: format!("missing required key {key}"),
            }),
            Some((line, value)) => value
                .parse::<T>()
                .map(|v| (line, v))
                .map_err(|e| err(line, format!("bad value for {key}: {e}"))),
        }
    }
}

/// Parses and fully validates a configuration document.
///
/// `cli_command` is the subcommand given on the command line; when the
/// document also carries `command = ...` the two must agree.
pub fn parse_config(text: &str, cli_command: Option<Command>) -> Result<RunConfig, ParseError> {
    const KNOWN: &[&str] = &[
        "command",
        "seed",
        "grid.n",
        "grid.L",
        "model.alpha",
        "model.sign",
        "model.lambda",
        "model.delta",
        "model.s",
        "model.nonlinear_coupling",
        "time.T",
        "time.dt",
        "time.slices",
        "time.scheme",
        "picard.max_iter",
        "picard.tol",
        "picard.force",
        "front.x0",
        "front.v",
        "front.eps_prime",
        "front.R",
        "front.l",
        "regularity.proxy_s",
        "data.kind",
        "data.lambda",
        "data.theta",
        "data.phi",
        "data.phi_amp",
        "data.phi_width",
        "data.c",
        "data.constant_mode",
        "data.x0",
        "data.s",
        "data.l",
        "data.path",
        "outputs.dir",
    ];

    let mut table = Table { entries: Vec::new() };
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(err(lineno, "empty key or value"));
        }
        if key.matches('.').count() > 1 {
            return Err(err(lineno, format!("key '{key}' nests deeper than one dot")));
        }
        if !KNOWN.contains(&key) {
            return Err(err(lineno, format!("unknown key '{key}'")));
        }
        if table.entries.iter().any(|(k, r)| k == key && !r.used) {
            return Err(err(lineno, format!("duplicate key '{key}'")));
        }
        table.entries.push((
            key.to_string(),
            Raw {
                line: lineno,
                value: value.to_string(),
                used: false,
            },
        ));
    }

    if table.entries.is_empty() && cli_command.is_none() {
        return Err(ParseError {
            line: None,
            message: format!("empty configuration; required keys: {}", REQUIRED_KEYS.join(", ")),
        });
    }

    // command: CLI subcommand wins, document must agree when present
    let doc_command = table.parse::<Command>("command")?;
    let command = match (cli_command, doc_command) {
        (Some(c), Some(d)) if c != d => {
            return Err(ParseError {
                line: None,
                message: format!(
                    "subcommand '{}' disagrees with config command '{}'",
                    c.name(),
                    d.name()
                ),
            });
        }
        (Some(c), _) => c,
        (None, Some(d)) => d,
        (None, None) => {
            return Err(ParseError {
                line: None,
                message: "no command given (CLI subcommand or 'command = ...')".into(),
            });
        }
    };

    if table.entries.iter().all(|(_, r)| r.used) && command != Command::Validate {
        return Err(ParseError {
            line: None,
            message: format!("empty configuration; required keys: {}", REQUIRED_KEYS.join(", ")),
        });
    }

    let seed = table.parse::<u64>("seed")?.unwrap_or(0);

    let (n_line, grid_n) = table.require::<usize>("grid.n")?;
    if grid_n < 16 || !grid_n.is_power_of_two() {
        return Err(err(n_line, format!("grid.n = {grid_n} is not a power of two >= 16")));
    }
    let (l_line, grid_l) = table.require::<f64>("grid.L")?;
    if grid_l.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(err(l_line, format!("grid.L = {grid_l} must be positive")));
    }

    let (a_line, alpha) = table.require::<f64>("model.alpha")?;
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(err(a_line, format!("model.alpha = {alpha} must lie in (0, 1)")));
    }
    let m = m_of_alpha(alpha).expect("alpha validated above");
    let sign = match table.take("model.sign") {
        None => Sign::Plus,
        Some((line, v)) => match v.as_str() {
            "+1" | "1" | "+" | "plus" => Sign::Plus,
            "-1" | "-" | "minus" => Sign::Minus,
            other => return Err(err(line, format!("model.sign = '{other}' (expected +1 or -1)"))),
        },
    };
    let (lam_line, lambda) = table.require::<f64>("model.lambda")?;
    if lambda.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(err(lam_line, "model.lambda must be positive"));
    }
    let (del_line, delta) = table.require::<f64>("model.delta")?;
    if delta.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(err(del_line, "model.delta must be positive"));
    }
    let s = match table.parse::<u32>("model.s")? {
        Some(s) => {
            if s < 2 * m + 4 {
                return Err(ParseError {
                    line: None,
                    message: format!("model.s = {s} violates s >= 2m + 4 = {}", 2 * m + 4),
                });
            }
            s
        }
        None => 2 * m + 4,
    };
    let nonlinear_coupling = table.parse::<f64>("model.nonlinear_coupling")?.unwrap_or(1.0);

    let t_final = table.parse::<f64>("time.T")?.unwrap_or(1.0);
    let dt = table.parse::<f64>("time.dt")?.unwrap_or(1e-4);
    let slices = table.parse::<usize>("time.slices")?.unwrap_or(16);
    if matches!(command, Command::Simulate | Command::Regularity) {
        if t_final.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || dt.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || slices == 0
        {
            return Err(ParseError {
                line: None,
                message: "time.T, time.dt must be positive and time.slices >= 1".into(),
            });
        }
        // the regularity experiment doubles the slice count internally for
        // its quadrature-stability rerun
        let effective_slices = match command {
            Command::Regularity => slices * 2,
            _ => slices,
        };
        let per = t_final / effective_slices as f64 / dt;
        if (per - per.round()).abs() > 1e-9 * per.abs().max(1.0) || per < 0.5 {
            return Err(ParseError {
                line: None,
                message: format!(
                    "time.dt = {dt} does not divide the slice spacing {} (steps per slice {per})",
                    t_final / effective_slices as f64
                ),
            });
        }
    }
    let scheme = match table.take("time.scheme") {
        None => Scheme::Etdrk4,
        Some((line, v)) => match v.as_str() {
            "etdrk4" => Scheme::Etdrk4,
            "strang" => Scheme::Strang,
            other => return Err(err(line, format!("time.scheme = '{other}' (expected etdrk4|strang)"))),
        },
    };

    let picard_max_iter = table.parse::<usize>("picard.max_iter")?.unwrap_or(12);
    let picard_tol = table.parse::<f64>("picard.tol")?.unwrap_or(1e-6);
    let picard_force = table.parse::<bool>("picard.force")?.unwrap_or(false);

    let front_x0 = table.parse::<f64>("front.x0")?.unwrap_or(0.0);
    let front_v = table.parse::<f64>("front.v")?.unwrap_or(8.0);
    let front_eps_prime = table.parse::<f64>("front.eps_prime")?.unwrap_or(1.0);
    let front_r = table.parse::<f64>("front.R")?.unwrap_or(12.0);
    let front_l = table.parse::<u32>("front.l")?.unwrap_or(2);
    let proxy_s = table.parse::<u32>("regularity.proxy_s")?.unwrap_or(4);

    let data = match table.take("data.kind") {
        None => {
            if command == Command::Validate {
                DataSpec::CazenaveNaumkin {
                    lambda,
                    theta: 0.0,
                    phi: PhiSpec::None,
                }
            } else {
                return Err(ParseError {
                    line: None,
                    message: format!("missing required key data.kind; required keys: {}", REQUIRED_KEYS.join(", ")),
                });
            }
        }
        Some((line, kind)) => match kind.as_str() {
            "cazenave_naumkin" => {
                let d_lambda = table.parse::<f64>("data.lambda")?.unwrap_or(lambda);
                let theta = table.parse::<f64>("data.theta")?.unwrap_or(0.0);
                let phi = match table.take("data.phi") {
                    None => PhiSpec::None,
                    Some((pline, v)) => match v.as_str() {
                        "none" => PhiSpec::None,
                        "gaussian" => {
                            let amp = table.parse::<f64>("data.phi_amp")?.unwrap_or(d_lambda / 2.4);
                            let width = table.parse::<f64>("data.phi_width")?.unwrap_or(1.0);
                            PhiSpec::Gaussian { amp, width }
                        }
                        other => return Err(err(pline, format!("data.phi = '{other}' (expected none|gaussian)"))),
                    },
                };
                DataSpec::CazenaveNaumkin {
                    lambda: d_lambda,
                    theta,
                    phi,
                }
            }
            "traveling_wave" => {
                let (_, c) = table.require::<f64>("data.c")?;
                let constant_mode = match table.take("data.constant_mode") {
                    None => ConstantMode::OdeDerived,
                    Some((mline, v)) => match v.as_str() {
                        "ode_derived" => ConstantMode::OdeDerived,
                        "paper_literal" => ConstantMode::PaperLiteral,
                        other => {
                            return Err(err(
                                mline,
                                format!("data.constant_mode = '{other}' (expected ode_derived|paper_literal)"),
                            ))
                        }
                    },
                };
                DataSpec::TravelingWave { c, constant_mode }
            }
            "one_sided" => {
                let x0 = table.parse::<f64>("data.x0")?.unwrap_or(0.0);
                let s = table.parse::<u32>("data.s")?.unwrap_or(proxy_s);
                let l = table.parse::<u32>("data.l")?.unwrap_or(front_l);
                DataSpec::OneSided { x0, s, l }
            }
            "file" => {
                let (_, path) = table.require::<String>("data.path")?;
                DataSpec::File { path }
            }
            other => {
                return Err(err(
                    line,
                    format!("data.kind = '{other}' (expected cazenave_naumkin|traveling_wave|one_sided|file)"),
                ))
            }
        },
    };

    let out_dir = table.parse::<String>("outputs.dir")?;

    Ok(RunConfig {
        command,
        seed,
        grid_n,
        grid_l,
        alpha,
        sign,
        lambda,
        delta,
        m,
        s,
        nonlinear_coupling,
        t_final,
        dt,
        slices,
        scheme,
        picard_max_iter,
        picard_tol,
        picard_force,
        front_x0,
        front_v,
        front_eps_prime,
        front_r,
        front_l,
        proxy_s,
        data,
        out_dir,
    })
}

/// Round-trip-exact float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl fmt::Display for RunConfig {
    /// Canonical echo; `parse_config(print(config))` round-trips to an equal
    /// config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command = {}", self.command.name())?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "grid.n = {}", self.grid_n)?;
        writeln!(f, "grid.L = {}", fmt_f64(self.grid_l))?;
        writeln!(f, "model.alpha = {}", fmt_f64(self.alpha))?;
        writeln!(f, "model.sign = {}", self.sign)?;
        writeln!(f, "model.lambda = {}", fmt_f64(self.lambda))?;
        writeln!(f, "model.delta = {}", fmt_f64(self.delta))?;
        writeln!(f, "model.s = {}", self.s)?;
        writeln!(f, "model.nonlinear_coupling = {}", fmt_f64(self.nonlinear_coupling))?;
        writeln!(f, "# derived: m = {}", self.m)?;
        writeln!(f, "time.T = {}", fmt_f64(self.t_final))?;
        writeln!(f, "time.dt = {}", fmt_f64(self.dt))?;
        writeln!(f, "time.slices = {}", self.slices)?;
        writeln!(f, "time.scheme = {}", self.scheme)?;
        writeln!(f, "picard.max_iter = {}", self.picard_max_iter)?;
        writeln!(f, "picard.tol = {}", fmt_f64(self.picard_tol))?;
        writeln!(f, "picard.force = {}", self.picard_force)?;
        writeln!(f, "front.x0 = {}", fmt_f64(self.front_x0))?;
        writeln!(f, "front.v = {}", fmt_f64(self.front_v))?;
        writeln!(f, "front.eps_prime = {}", fmt_f64(self.front_eps_prime))?;
        writeln!(f, "front.R = {}", fmt_f64(self.front_r))?;
        writeln!(f, "front.l = {}", self.front_l)?;
        writeln!(f, "regularity.proxy_s = {}", self.proxy_s)?;
        match &self.data {
            DataSpec::CazenaveNaumkin { lambda, theta, phi } => {
                writeln!(f, "data.kind = cazenave_naumkin")?;
                writeln!(f, "data.lambda = {}", fmt_f64(*lambda))?;
                writeln!(f, "data.theta = {}", fmt_f64(*theta))?;
                match phi {
                    PhiSpec::None => writeln!(f, "data.phi = none")?,
                    PhiSpec::Gaussian { amp, width } => {
                        writeln!(f, "data.phi = gaussian")?;
                        writeln!(f, "data.phi_amp = {}", fmt_f64(*amp))?;
                        writeln!(f, "data.phi_width = {}", fmt_f64(*width))?;
                    }
                }
            }
            DataSpec::TravelingWave { c, constant_mode } => {
                writeln!(f, "data.kind = traveling_wave")?;
                writeln!(f, "data.c = {}", fmt_f64(*c))?;
                let mode = match constant_mode {
                    ConstantMode::OdeDerived => "ode_derived",
                    ConstantMode::PaperLiteral => "paper_literal",
                };
                writeln!(f, "data.constant_mode = {mode}")?;
            }
            DataSpec::OneSided { x0, s, l } => {
                writeln!(f, "data.kind = one_sided")?;
                writeln!(f, "data.x0 = {}", fmt_f64(*x0))?;
                writeln!(f, "data.s = {s}")?;
                writeln!(f, "data.l = {l}")?;
            }
            DataSpec::File { path } => {
                writeln!(f, "data.kind = file")?;
                writeln!(f, "data.path = {path}")?;
            }
        }
        if let Some(dir) = &self.out_dir {
            writeln!(f, "outputs.dir = {dir}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
grid.n = 1024
grid.L = 100.53096491487338
model.alpha = 0.5
model.lambda = 0.1
model.delta = 1e7
data.kind = cazenave_naumkin
";

    #[test]
    fn parses_and_derives() {
        let cfg = parse_config(BASE, Some(Command::Simulate)).unwrap();
        assert_eq!(cfg.m, 3);
        assert_eq!(cfg.s, 10);
        assert_eq!(cfg.grid_n, 1024);
        assert_eq!(cfg.scheme, Scheme::Etdrk4);
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let e = parse_config("", None).unwrap_err();
        assert!(e.message.contains("grid.n"), "{e}");
        assert!(e.message.contains("model.alpha"), "{e}");
    }

    #[test]
    fn rejects_non_power_of_two() {
        let text = BASE.replace("grid.n = 1024", "grid.n = 1000");
        let e = parse_config(&text, Some(Command::Simulate)).unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(e.message.contains("power of two"), "{e}");
    }

    #[test]
    fn rejects_unknown_key_with_line_number() {
        let text = format!("{BASE}grid.m = 3\n");
        let e = parse_config(&text, Some(Command::Simulate)).unwrap_err();
        assert_eq!(e.line, Some(7));
        assert!(e.message.contains("unknown key"), "{e}");
    }

    #[test]
    fn rejects_command_mismatch_and_deep_nesting() {
        let text = format!("command = picard\n{BASE}");
        assert!(parse_config(&text, Some(Command::Simulate)).is_err());
        let text = format!("{BASE}model.phi.amp = 1\n");
        assert!(parse_config(&text, Some(Command::Simulate)).is_err());
    }

    #[test]
    fn round_trips_through_display() {
        let text = format!(
            "{BASE}time.T = 0.25\ntime.dt = 2.5e-4\ntime.slices = 10\nseed = 99\ndata.theta = 0.7853981633974483\n"
        );
        let cfg = parse_config(&text, Some(Command::Simulate)).unwrap();
        let echoed = cfg.to_string();
        let reparsed = parse_config(&echoed, None).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn fmt_f64_round_trips_exactly() {
        for x in [0.1, 1.0 / 3.0, 1e-17, 2.5e17, -7.125, std::f64::consts::PI] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
