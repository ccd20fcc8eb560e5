//! `key = value` run configuration.
//!
//! Every key is optional; an absent key takes the command's preset, which for
//! the noise parameters is ε = 0.01, μ = 0.526, ν_el = 0.04361 and for ξ is
//! 0.95 (0.8 for `fig4`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvqkd::fading::DEFAULT_NODES;
use cvqkd::fock::DEFAULT_CUTOFF;
use cvqkd::{ChannelKind, ExperimentSpec, Figure5Spec, NoiseParams, SourceKind};

/// Largest accepted squeezing, dB.
pub const MAX_SQUEEZING_DB: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Keyrate,
    Fig3,
    Fig4,
    Fig5,
    Validate,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Keyrate,
        Command::Fig3,
        Command::Fig4,
        Command::Fig5,
        Command::Validate,
        Command::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Keyrate => "keyrate",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Fig5 => "fig5",
            Command::Validate => "validate",
            Command::Sweep => "sweep",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Tsv,
}

impl Format {
    pub fn separator(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Tsv => '\t',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Tsv => "tsv",
        }
    }
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    CommandLine,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::CommandLine => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{origin}: `{key}`: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub key: String,
    pub message: String,
}

fn err(origin: Origin, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin,
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parsed settings; `None` means "use the command preset".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub state_kinds: Option<Vec<SourceKind>>,
    pub squeezing_db: Option<Vec<f64>>,
    pub xi: Option<f64>,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub nu_el: Option<f64>,
    pub channels: Option<Vec<ChannelKind>>,
    pub loss_db: Option<Vec<f64>>,
    pub quadrature_nodes: Option<usize>,
    pub clamp_negative: Option<bool>,
    pub aperture_h: Option<f64>,
    pub tap: Option<f64>,
    pub cutoff: Option<usize>,
    pub format: Option<Format>,
    pub xi_grid: Option<Vec<f64>>,
    pub squeezing_grid: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    /// Origin of the most recent noise setting, for cross-field errors.
    noise_origin: Option<(Origin, &'static str)>,
}

pub const KEYS: [&str; 17] = [
    "state_kinds",
    "squeezing_db",
    "xi",
    "epsilon",
    "mu",
    "nu_el",
    "channel",
    "loss_db",
    "quadrature_nodes",
    "clamp_negative",
    "aperture_h",
    "T",
    "cutoff",
    "format",
    "xi_grid",
    "squeezing_grid",
    "output",
];

fn number(origin: Origin, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| err(origin, key, format!("`{}` is not a number", v.trim())))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(err(origin, key, "must be finite"))
    }
}

fn count(origin: Origin, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| err(origin, key, format!("`{}` is not a non-negative integer", v.trim())))
}

fn list<T>(
    origin: Origin,
    key: &str,
    v: &str,
    item: impl Fn(&str) -> Result<T, ConfigError>,
) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(err(origin, key, "empty list entry"));
    }
    items.into_iter().map(item).collect()
}

/// `a,b,c` or the inclusive range `start:stop:step`. Range points are rounded
/// to 12 decimals so that `0.8:30:0.4` hits 11.2 exactly.
fn grid(origin: Origin, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if !v.contains(':') {
        return list(origin, key, v, |s| number(origin, key, s));
    }
    let parts: Vec<&str> = v.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(err(origin, key, "range must be start:stop:step"));
    };
    let (start, stop, step) = (
        number(origin, key, start)?,
        number(origin, key, stop)?,
        number(origin, key, step)?,
    );
    if !(step > 0.0) || stop < start {
        return Err(err(origin, key, "range needs step > 0 and stop ≥ start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(err(origin, key, "range has more than 100000 points"));
    }
    Ok((0..=n)
        .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}

fn in_range(
    origin: Origin,
    key: &str,
    x: f64,
    ok: impl Fn(f64) -> bool,
    what: &str,
) -> Result<f64, ConfigError> {
    if ok(x) {
        Ok(x)
    } else {
        Err(err(origin, key, format!("{x} is out of range: {what}")))
    }
}

fn check_xi(origin: Origin, key: &str, x: f64) -> Result<f64, ConfigError> {
    in_range(origin, key, x, |x| x > 0.0 && x <= 1.0, "ξ must lie in (0, 1]")
}

fn check_squeezing(origin: Origin, key: &str, x: f64) -> Result<f64, ConfigError> {
    in_range(
        origin,
        key,
        x,
        |x| (0.0..=MAX_SQUEEZING_DB).contains(&x),
        "squeezing must lie in [0, 40] dB",
    )
}

fn check_increasing(origin: Origin, key: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.windows(2).all(|w| w[1] > w[0]) {
        Ok(())
    } else {
        Err(err(origin, key, "values must be strictly increasing"))
    }
}

impl RunConfig {
    /// Applies one `key = value` setting, range-checking it.
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let v = value.trim();
        if v.is_empty() {
            return Err(err(origin, key, "missing value"));
        }
        match key {
            "state_kinds" => {
                let kinds = list(origin, key, v, |s| {
                    s.parse::<SourceKind>().map_err(|m| err(origin, key, m))
                })?;
                self.state_kinds = Some(kinds);
            }
            "squeezing_db" => {
                let s = list(origin, key, v, |s| {
                    check_squeezing(origin, key, number(origin, key, s)?)
                })?;
                self.squeezing_db = Some(s);
            }
            "xi" => self.xi = Some(check_xi(origin, key, number(origin, key, v)?)?),
            "epsilon" => {
                let x = number(origin, key, v)?;
                self.epsilon = Some(in_range(origin, key, x, |x| x >= 0.0, "ε must be ≥ 0")?);
                self.noise_origin = Some((origin, "epsilon"));
            }
            "mu" => {
                let x = number(origin, key, v)?;
                self.mu = Some(in_range(origin, key, x, |x| x > 0.0 && x <= 1.0, "μ must lie in (0, 1]")?);
                self.noise_origin = Some((origin, "mu"));
            }
            "nu_el" => {
                let x = number(origin, key, v)?;
                self.nu_el = Some(in_range(origin, key, x, |x| x >= 0.0, "ν_el must be ≥ 0")?);
                self.noise_origin = Some((origin, "nu_el"));
            }
            "channel" => {
                let c = if v.eq_ignore_ascii_case("both") {
                    ChannelKind::ALL.to_vec()
                } else {
                    list(origin, key, v, |s| {
                        s.parse::<ChannelKind>().map_err(|m| err(origin, key, m))
                    })?
                };
                self.channels = Some(c);
            }
            "loss_db" => {
                let g = grid(origin, key, v)?;
                for &d in &g {
                    in_range(origin, key, d, |d| d >= 0.0, "losses must be ≥ 0 dB")?;
                }
                check_increasing(origin, key, &g)?;
                self.loss_db = Some(g);
            }
            "quadrature_nodes" => {
                let n = count(origin, key, v)?;
                if !(2..=100_000).contains(&n) {
                    return Err(err(origin, key, format!("{n} is out of range: need 2 to 100000 nodes")));
                }
                self.quadrature_nodes = Some(n);
            }
            "clamp_negative" => {
                self.clamp_negative = Some(match v.to_ascii_lowercase().as_str() {
                    "true" | "yes" | "on" | "1" => true,
                    "false" | "no" | "off" | "0" => false,
                    _ => return Err(err(origin, key, format!("`{v}` is not a boolean"))),
                });
            }
            "aperture_h" => {
                let x = number(origin, key, v)?;
                self.aperture_h = Some(in_range(origin, key, x, |x| x > 0.0, "h must be > 0")?);
            }
            "T" => {
                let x = number(origin, key, v)?;
                self.tap = Some(in_range(origin, key, x, |x| x > 0.0 && x < 1.0, "T must lie in (0, 1)")?);
            }
            "cutoff" => {
                let n = count(origin, key, v)?;
                if !(1..=2000).contains(&n) {
                    return Err(err(origin, key, format!("{n} is out of range: need 1 to 2000")));
                }
                self.cutoff = Some(n);
            }
            "format" => {
                self.format = Some(match v.to_ascii_lowercase().as_str() {
                    "csv" => Format::Csv,
                    "tsv" => Format::Tsv,
                    _ => return Err(err(origin, key, format!("`{v}` is not csv or tsv"))),
                });
            }
            "xi_grid" => {
                let g = grid(origin, key, v)?;
                for &x in &g {
                    check_xi(origin, key, x)?;
                }
                check_increasing(origin, key, &g)?;
                self.xi_grid = Some(g);
            }
            "squeezing_grid" => {
                let g = grid(origin, key, v)?;
                for &x in &g {
                    check_squeezing(origin, key, x)?;
                }
                check_increasing(origin, key, &g)?;
                self.squeezing_grid = Some(g);
            }
            "output" => self.output = Some(PathBuf::from(v)),
            _ => return Err(err(origin, key, format!("unknown key (expected one of {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Cross-field checks that individual settings cannot catch.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let noise = self.noise();
        if let Err(e) = noise.validate() {
            let (origin, key) = self.noise_origin.unwrap_or((Origin::CommandLine, "nu_el"));
            return Err(err(origin, key, e.to_string()));
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseParams {
        let d = NoiseParams::default();
        NoiseParams {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            mu: self.mu.unwrap_or(d.mu),
            nu_el: self.nu_el.unwrap_or(d.nu_el),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff.unwrap_or(DEFAULT_CUTOFF)
    }

    /// Sweep specification for `keyrate`, `fig3`, `fig4` and `sweep`.
    pub fn experiment(&self, command: Command) -> ExperimentSpec {
        let base = match command {
            Command::Fig3 => ExperimentSpec::figure3(),
            Command::Fig4 => ExperimentSpec::figure4(),
            Command::Keyrate => ExperimentSpec {
                loss_grid_db: vec![10.0],
                ..ExperimentSpec::default()
            },
            _ => ExperimentSpec::default(),
        };
        ExperimentSpec {
            state_kinds: self.state_kinds.clone().unwrap_or(base.state_kinds),
            squeezing_db: self.squeezing_db.clone().unwrap_or(base.squeezing_db),
            xi: self.xi.unwrap_or(base.xi),
            noise: self.noise(),
            channels: self.channels.clone().unwrap_or(base.channels),
            loss_grid_db: self.loss_db.clone().unwrap_or(base.loss_grid_db),
            quadrature_nodes: self.quadrature_nodes.unwrap_or(base.quadrature_nodes),
            clamp_negative: self.clamp_negative.unwrap_or(base.clamp_negative),
            aperture_h: self.aperture_h.unwrap_or(base.aperture_h),
            tap: self.tap.or(base.tap),
        }
    }

    /// Surface specification for `fig5`; `xi` sets the squeezing surface's ξ
    /// and the first `squeezing_db` entry sets the ξ surface's squeezing.
    pub fn figure5(&self) -> Figure5Spec {
        let base = Figure5Spec::default();
        Figure5Spec {
            loss_grid_db: self.loss_db.clone().unwrap_or(base.loss_grid_db),
            xi_grid: self.xi_grid.clone().unwrap_or(base.xi_grid),
            xi_surface_squeezing_db: self
                .squeezing_db
                .as_ref()
                .and_then(|s| s.first().copied())
                .unwrap_or(base.xi_surface_squeezing_db),
            squeezing_grid: self.squeezing_grid.clone().unwrap_or(base.squeezing_grid),
            squeezing_surface_xi: self.xi.unwrap_or(base.squeezing_surface_xi),
            noise: self.noise(),
            quadrature_nodes: self.quadrature_nodes.unwrap_or(base.quadrature_nodes),
            clamp_negative: self.clamp_negative.unwrap_or(base.clamp_negative),
            aperture_h: self.aperture_h.unwrap_or(base.aperture_h),
        }
    }

    /// `key = value` lines describing every resolved setting of `command`.
    pub fn describe(&self, command: Command) -> Vec<String> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = vec![format!("command = {}", command.as_str())];
        match command {
            Command::Fig5 => {
                let f = self.figure5();
                out.push(format!("squeezing_db = {}", f.xi_surface_squeezing_db));
                out.push(format!("xi = {}", f.squeezing_surface_xi));
                out.push(format!("loss_db = {}", join(&f.loss_grid_db)));
                out.push(format!("xi_grid = {}", join(&f.xi_grid)));
                out.push(format!("squeezing_grid = {}", join(&f.squeezing_grid)));
                out.push(format!("epsilon = {}", f.noise.epsilon));
                out.push(format!("mu = {}", f.noise.mu));
                out.push(format!("nu_el = {}", f.noise.nu_el));
                out.push(format!("quadrature_nodes = {}", f.quadrature_nodes));
                out.push(format!("clamp_negative = {}", f.clamp_negative));
                out.push(format!("aperture_h = {}", f.aperture_h));
            }
            Command::Validate => {
                let n = self.noise();
                out.push(format!("epsilon = {}", n.epsilon));
                out.push(format!("mu = {}", n.mu));
                out.push(format!("nu_el = {}", n.nu_el));
                out.push(format!("xi = {}", self.xi.unwrap_or(0.95)));
                out.push(format!("cutoff = {}", self.cutoff()));
                out.push(format!(
                    "quadrature_nodes = {}",
                    self.quadrature_nodes.unwrap_or(DEFAULT_NODES)
                ));
            }
            _ => {
                let e = self.experiment(command);
                let kinds: Vec<&str> = e.state_kinds.iter().map(|k| k.as_str()).collect();
                let channels: Vec<&str> = e.channels.iter().map(|c| c.as_str()).collect();
                out.push(format!("state_kinds = {}", kinds.join(",")));
                out.push(format!("squeezing_db = {}", join(&e.squeezing_db)));
                out.push(format!("xi = {}", e.xi));
                out.push(format!("epsilon = {}", e.noise.epsilon));
                out.push(format!("mu = {}", e.noise.mu));
                out.push(format!("nu_el = {}", e.noise.nu_el));
                out.push(format!("channel = {}", channels.join(",")));
                out.push(format!("loss_db = {}", join(&e.loss_grid_db)));
                out.push(format!("quadrature_nodes = {}", e.quadrature_nodes));
                out.push(format!("clamp_negative = {}", e.clamp_negative));
                out.push(format!("aperture_h = {}", e.aperture_h));
                if let Some(t) = e.tap {
                    out.push(format!("T = {t}"));
                }
            }
        }
        out.push(format!("format = {}", self.format().as_str()));
        out
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(origin, line, "expected `key = value`"));
        };
        config.set(key.trim(), value, origin)?;
    }
    config.validate()?;
    Ok(config)
}
