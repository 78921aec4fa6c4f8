//! Scenario-driven front end: strict JSON configs, deterministic file
//! outputs, and a plain-text summary. Exit-code contract: 0 success,
//! 1 usage/configuration error, 2 ran-but-violated-a-numerical-contract.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::Value;

use crate::dirac::ExactFamily;
use crate::eisenstein::{
    eisenstein_fourier, eisenstein_lattice, write_critical_line_scan, EisensteinParams,
};
use crate::immersion::{
    conformality_residual, curvatures, export_obj, integrate_immersion, PathSpec, PathStyle,
};
use crate::moebius::{reduce_to_fundamental_domain, FundamentalDomainSpec, UpperHalfPoint};
use crate::spectral::{assemble, classify, lowest_eigenpairs, write_report};
use crate::wave::{
    dpm_orthogonality, energy_form, make_cusp_data, write_timeseries, CuspProfile, Direction,
    Region,
};
use crate::{Error, Grid, Result};

#[derive(Debug, Clone)]
pub struct GridCfg {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl GridCfg {
    fn build(&self) -> Result<Grid> {
        Grid::new(self.x0, self.y0, self.nx, self.ny, self.h)
    }
}

#[derive(Debug, Clone)]
pub struct ImmerseCfg {
    pub family: ExactFamily,
    pub grid: GridCfg,
    pub path: PathStyle,
    pub obj_out: String,
}

#[derive(Debug, Clone)]
pub struct CurvatureCfg {
    pub family: ExactFamily,
    pub grid: GridCfg,
    pub csv_out: String,
}

#[derive(Debug, Clone)]
pub struct SpectrumCfg {
    pub a: f64,
    pub h: f64,
    pub count: usize,
    pub csv_out: String,
}

#[derive(Debug, Clone)]
pub struct EisensteinScanCfg {
    pub s: Complex64,
    pub n_lat: usize,
    pub n_four: usize,
    pub x: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub steps: usize,
    pub csv_out: String,
}

#[derive(Debug, Clone)]
pub struct ScatteringScanCfg {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    pub csv_out: String,
}

#[derive(Debug, Clone)]
pub struct WaveCfg {
    pub a: f64,
    pub h: f64,
    pub tau0: f64,
    pub tau1: f64,
    pub direction: Direction,
    pub amplitude: f64,
    pub t_final: f64,
    pub samples: usize,
    pub k_y_max: f64,
    pub csv_out: String,
}

#[derive(Debug, Clone)]
pub struct ReduceCfg {
    pub z: Complex64,
}

#[derive(Debug, Clone)]
pub enum Command {
    Immerse(ImmerseCfg),
    Curvature(CurvatureCfg),
    Spectrum(SpectrumCfg),
    EisensteinScan(EisensteinScanCfg),
    ScatteringScan(ScatteringScanCfg),
    Wave(WaveCfg),
    Reduce(ReduceCfg),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub command: Command,
    pub seed: i64,
}

/// Outcome of a scenario: summary rows for stdout plus any numerical
/// contract violations (exit code 2 when non-empty).
#[derive(Debug, Default)]
pub struct RunReport {
    pub rows: Vec<(String, String)>,
    pub violations: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    fn row(&mut self, key: &str, value: impl std::fmt::Display) {
        self.rows.push((key.to_string(), value.to_string()));
    }

    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            0
        } else {
            2
        }
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in &self.rows {
            let _ = writeln!(out, "{k:width$}  {v}");
        }
        for p in &self.outputs {
            let _ = writeln!(out, "wrote {}", p.display());
        }
        for v in &self.violations {
            let _ = writeln!(out, "CONTRACT VIOLATED: {v}");
        }
        out
    }
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut cur = vec![i + 1];
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            cur.push((prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

// error-accumulating view of a JSON object
struct Ctx<'a> {
    errors: &'a mut Vec<String>,
}

impl<'a> Ctx<'a> {
    fn check_keys(&mut self, obj: &serde_json::Map<String, Value>, allowed: &[&str], at: &str) {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                let mut best = ("", usize::MAX);
                for cand in allowed {
                    let d = levenshtein(key, cand);
                    if d < best.1 {
                        best = (cand, d);
                    }
                }
                if best.1 <= 3 {
                    self.errors.push(format!(
                        "{at}: unknown key \"{key}\"; did you mean \"{}\"?",
                        best.0
                    ));
                } else {
                    self.errors.push(format!("{at}: unknown key \"{key}\""));
                }
            }
        }
    }

    fn number(
        &mut self,
        obj: &serde_json::Map<String, Value>,
        key: &str,
        at: &str,
    ) -> Option<f64> {
        match obj.get(key) {
            Some(Value::Number(n)) => {
                let v = n.as_f64().unwrap_or(f64::NAN);
                if v.is_finite() {
                    Some(v)
                } else {
                    self.errors.push(format!("{at}: \"{key}\" is not finite"));
                    None
                }
            }
            Some(_) => {
                self.errors.push(format!("{at}: \"{key}\" must be a number"));
                None
            }
            None => {
                self.errors.push(format!("{at}: missing key \"{key}\""));
                None
            }
        }
    }

    fn number_or(
        &mut self,
        obj: &serde_json::Map<String, Value>,
        key: &str,
        at: &str,
        default: f64,
    ) -> Option<f64> {
        if obj.contains_key(key) {
            self.number(obj, key, at)
        } else {
            Some(default)
        }
    }

    fn integer(
        &mut self,
        obj: &serde_json::Map<String, Value>,
        key: &str,
        at: &str,
    ) -> Option<i64> {
        match obj.get(key) {
            Some(Value::Number(n)) if n.is_i64() || n.is_u64() => n.as_i64().or_else(|| {
                self.errors.push(format!("{at}: \"{key}\" is out of range"));
                None
            }),
            Some(_) => {
                self.errors
                    .push(format!("{at}: \"{key}\" must be an integer"));
                None
            }
            None => {
                self.errors.push(format!("{at}: missing key \"{key}\""));
                None
            }
        }
    }

    fn string(
        &mut self,
        obj: &serde_json::Map<String, Value>,
        key: &str,
        at: &str,
    ) -> Option<String> {
        match obj.get(key) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.errors.push(format!("{at}: \"{key}\" must be a string"));
                None
            }
            None => {
                self.errors.push(format!("{at}: missing key \"{key}\""));
                None
            }
        }
    }

    fn range(&mut self, value: Option<f64>, lo: f64, hi: f64, field: &str) -> Option<f64> {
        let v = value?;
        if v < lo || v > hi {
            self.errors
                .push(format!("{field} = {v} outside [{lo}, {hi}]"));
            None
        } else {
            Some(v)
        }
    }

    fn positive(&mut self, value: Option<f64>, field: &str) -> Option<f64> {
        let v = value?;
        if v <= 0.0 {
            self.errors.push(format!("{field} = {v} must be > 0"));
            None
        } else {
            Some(v)
        }
    }

    fn usize_range(
        &mut self,
        value: Option<i64>,
        lo: usize,
        hi: usize,
        field: &str,
    ) -> Option<usize> {
        let v = value?;
        if v < lo as i64 || v > hi as i64 {
            self.errors
                .push(format!("{field} = {v} outside [{lo}, {hi}]"));
            None
        } else {
            Some(v as usize)
        }
    }
}

fn object<'v>(
    value: Option<&'v Value>,
    at: &str,
    errors: &mut Vec<String>,
) -> Option<&'v serde_json::Map<String, Value>> {
    match value {
        Some(Value::Object(m)) => Some(m),
        Some(_) => {
            errors.push(format!("{at}: must be an object"));
            None
        }
        None => {
            errors.push(format!("{at}: missing"));
            None
        }
    }
}

fn parse_grid(params: &serde_json::Map<String, Value>, errors: &mut Vec<String>) -> Option<GridCfg> {
    let grid_obj = object(params.get("grid"), "parameters.grid", errors)?;
    let mut ctx = Ctx { errors };
    ctx.check_keys(grid_obj, &["x0", "y0", "nx", "ny", "h"], "parameters.grid");
    let x0 = ctx.number(grid_obj, "x0", "parameters.grid");
    let y0 = ctx.number(grid_obj, "y0", "parameters.grid");
    let nx = ctx.integer(grid_obj, "nx", "parameters.grid");
    let ny = ctx.integer(grid_obj, "ny", "parameters.grid");
    let h = ctx.number(grid_obj, "h", "parameters.grid");
    let nx = ctx.usize_range(nx, 3, 2048, "parameters.grid.nx");
    let ny = ctx.usize_range(ny, 3, 2048, "parameters.grid.ny");
    let h = ctx.positive(h, "parameters.grid.h");
    Some(GridCfg {
        x0: x0?,
        y0: y0?,
        nx: nx?,
        ny: ny?,
        h: h?,
    })
}

fn parse_family(
    params: &serde_json::Map<String, Value>,
    errors: &mut Vec<String>,
) -> Option<ExactFamily> {
    let fam_obj = object(params.get("family"), "parameters.family", errors)?;
    let mut ctx = Ctx { errors };
    let kind = ctx.string(fam_obj, "kind", "parameters.family")?;
    match kind.as_str() {
        "const-u" => {
            ctx.check_keys(
                fam_obj,
                &[
                    "kind",
                    "u0",
                    "lambda_re",
                    "lambda_im",
                    "amplitude_re",
                    "amplitude_im",
                ],
                "parameters.family",
            );
            let u0 = ctx.number(fam_obj, "u0", "parameters.family");
            let lre = ctx.number(fam_obj, "lambda_re", "parameters.family");
            let lim = ctx.number_or(fam_obj, "lambda_im", "parameters.family", 0.0);
            let are = ctx.number_or(fam_obj, "amplitude_re", "parameters.family", 1.0);
            let aim = ctx.number_or(fam_obj, "amplitude_im", "parameters.family", 0.0);
            let u0 = u0?;
            let lambda = Complex64::new(lre?, lim?);
            if u0 == 0.0 {
                ctx.errors
                    .push("parameters.family.u0 must be nonzero".to_string());
                return None;
            }
            if lambda == Complex64::new(0.0, 0.0) {
                ctx.errors
                    .push("parameters.family.lambda must be nonzero".to_string());
                return None;
            }
            Some(ExactFamily::ConstUExponential {
                u0,
                lambda,
                amplitude: Complex64::new(are?, aim?),
            })
        }
        "zero-u-holo" | "zero-u-antiholo" => {
            ctx.check_keys(
                fam_obj,
                &["kind", "coeff_re", "coeff_im", "power"],
                "parameters.family",
            );
            let cre = ctx.number_or(fam_obj, "coeff_re", "parameters.family", 1.0);
            let cim = ctx.number_or(fam_obj, "coeff_im", "parameters.family", 0.0);
            let power = ctx.integer(fam_obj, "power", "parameters.family");
            let power = ctx.usize_range(power, 0, 8, "parameters.family.power")? as u32;
            let coeff = Complex64::new(cre?, cim?);
            if kind == "zero-u-holo" {
                Some(ExactFamily::ZeroUHolo { coeff, power })
            } else {
                Some(ExactFamily::ZeroUAntiholo { coeff, power })
            }
        }
        other => {
            ctx.errors.push(format!(
                "parameters.family.kind \"{other}\" is not one of const-u, zero-u-holo, zero-u-antiholo"
            ));
            None
        }
    }
}

/// Parse a complex literal like "0.3+1.2i", "-2i", "i" or "1.5".
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(Error::domain("empty complex literal"));
    }
    let bad = || Error::domain(format!("cannot parse \"{text}\" as x+yi"));
    if let Some(body) = t.strip_suffix('i') {
        // find the split between real and imaginary parts: the last +/-
        // that is not an exponent sign and not leading
        let chars: Vec<char> = body.chars().collect();
        let mut split = None;
        for k in (1..chars.len()).rev() {
            if (chars[k] == '+' || chars[k] == '-')
                && chars[k - 1] != 'e'
                && chars[k - 1] != 'E'
            {
                split = Some(k);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            s => s.parse::<f64>().map_err(|_| bad())?,
        };
        let re = if re_str.is_empty() {
            0.0
        } else {
            re_str.parse::<f64>().map_err(|_| bad())?
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(t.parse::<f64>().map_err(|_| bad())?, 0.0))
    }
}

/// Strict parse: every violation is reported, not just the first.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(vec![format!("JSON syntax: {e}")]))?;
    let mut errors = Vec::new();
    let Some(root_obj) = object(Some(&root), "top level", &mut errors) else {
        return Err(Error::Config(errors));
    };
    {
        let mut ctx = Ctx {
            errors: &mut errors,
        };
        ctx.check_keys(root_obj, &["command", "seed", "parameters"], "top level");
    }
    let seed = match root_obj.get("seed") {
        None => 0,
        Some(Value::Number(n)) if n.is_i64() => n.as_i64().unwrap(),
        Some(_) => {
            errors.push("top level: \"seed\" must be an integer".to_string());
            0
        }
    };
    let command_name = {
        let mut ctx = Ctx {
            errors: &mut errors,
        };
        ctx.string(root_obj, "command", "top level")
    };
    let params = object(root_obj.get("parameters"), "parameters", &mut errors);

    let command = match (command_name.as_deref(), params) {
        (Some("immerse"), Some(p)) => parse_immerse(p, &mut errors).map(Command::Immerse),
        (Some("curvature"), Some(p)) => parse_curvature(p, &mut errors).map(Command::Curvature),
        (Some("spectrum"), Some(p)) => parse_spectrum(p, &mut errors).map(Command::Spectrum),
        (Some("eisenstein-scan"), Some(p)) => {
            parse_eisenstein_scan(p, &mut errors).map(Command::EisensteinScan)
        }
        (Some("scattering-scan"), Some(p)) => {
            parse_scattering_scan(p, &mut errors).map(Command::ScatteringScan)
        }
        (Some("wave"), Some(p)) => parse_wave(p, &mut errors).map(Command::Wave),
        (Some("reduce"), Some(p)) => parse_reduce(p, &mut errors).map(Command::Reduce),
        (Some(other), _) => {
            let known = [
                "immerse",
                "curvature",
                "spectrum",
                "eisenstein-scan",
                "scattering-scan",
                "wave",
                "reduce",
            ];
            let mut best = ("", usize::MAX);
            for cand in known {
                let d = levenshtein(other, cand);
                if d < best.1 {
                    best = (cand, d);
                }
            }
            if best.1 <= 3 {
                errors.push(format!(
                    "unknown command \"{other}\"; did you mean \"{}\"?",
                    best.0
                ));
            } else {
                errors.push(format!("unknown command \"{other}\""));
            }
            None
        }
        _ => None,
    };
    match command {
        Some(cmd) if errors.is_empty() => Ok(ScenarioConfig { command: cmd, seed }),
        _ => Err(Error::Config(errors)),
    }
}

fn parse_immerse(p: &serde_json::Map<String, Value>, errors: &mut Vec<String>) -> Option<ImmerseCfg> {
    {
        let mut ctx = Ctx { errors };
        ctx.check_keys(p, &["family", "grid", "path", "obj_out"], "parameters");
    }
    let family = parse_family(p, errors);
    let grid = parse_grid(p, errors);
    let mut ctx = Ctx { errors };
    let path = match p.get("path") {
        None => Some(PathStyle::XThenY),
        Some(Value::String(s)) if s == "x-then-y" => Some(PathStyle::XThenY),
        Some(Value::String(s)) if s == "y-then-x" => Some(PathStyle::YThenX),
        Some(_) => {
            ctx.errors
                .push("parameters.path must be \"x-then-y\" or \"y-then-x\"".to_string());
            None
        }
    };
    let obj_out = ctx.string(p, "obj_out", "parameters");
    Some(ImmerseCfg {
        family: family?,
        grid: grid?,
        path: path?,
        obj_out: obj_out?,
    })
}

fn parse_curvature(
    p: &serde_json::Map<String, Value>,
    errors: &mut Vec<String>,
) -> Option<CurvatureCfg> {
    {
        let mut ctx = Ctx { errors };
        ctx.check_keys(p, &["family", "grid", "csv_out"], "parameters");
    }
    let family = parse_family(p, errors);
    let grid = parse_grid(p, errors);
    let mut ctx = Ctx { errors };
    let csv_out = ctx.string(p, "csv_out", "parameters");
    Some(CurvatureCfg {
        family: family?,
        grid: grid?,
        csv_out: csv_out?,
    })
}

fn parse_spectrum(
    p: &serde_json::Map<String, Value>,
    errors: &mut Vec<String>,
) -> Option<SpectrumCfg> {
    let mut ctx = Ctx { errors };
    ctx.check_keys(p, &["a", "h", "count", "csv_out"], "parameters");
    let a = ctx.number(p, "a", "parameters");
    let h = ctx.number(p, "h", "parameters");
    let count = ctx.integer(p, "count", "parameters");
    let a = ctx.range(a, 1.0 + 1e-9, 20.0, "parameters.a");
    let h = ctx.range(h, 1e-4, 0.1, "parameters.h");
    let count = ctx.usize_range(count, 1, 32, "parameters.count");
    let csv_out = ctx.string(p, "csv_out", "parameters");
    Some(SpectrumCfg {
        a: a?,
        h: h?,
        count: count?,
        csv_out: csv_out?,
    })
}

fn parse_eisenstein_scan(
    p: &serde_json::Map<String, Value>,
    errors: &mut Vec<String>,
) -> Option<EisensteinScanCfg> {
    let mut ctx = Ctx { errors };
    ctx.check_keys(
        p,
        &[
            "s_re", "s_im", "n_lat", "n_four", "x", "y_min", "y_max", "steps", "csv_out",
        ],
        "parameters",
    );
    let s_re = ctx.number(p, "s_re", "parameters");
    let s_im = ctx.number_or(p, "s_im", "parameters", 0.0);
    let n_lat = ctx.integer(p, "n_lat", "parameters");
    let n_four = ctx.integer(p, "n_four", "parameters");
    let n_lat = ctx.usize_range(n_lat, 1, 200, "parameters.n_lat");
    let n_four = ctx.usize_range(n_four, 1, 64, "parameters.n_four");
    let x = ctx.number_or(p, "x", "parameters", 0.0);
    let y_min = ctx.number(p, "y_min", "parameters");
    let y_min = ctx.positive(y_min, "parameters.y_min");
    let y_max = ctx.number(p, "y_max", "parameters");
    let y_max = ctx.positive(y_max, "parameters.y_max");
    let steps = ctx.integer(p, "steps", "parameters");
    let steps = ctx.usize_range(steps, 1, 10_000, "parameters.steps");
    let csv_out = ctx.string(p, "csv_out", "parameters");
    if let (Some(lo), Some(hi)) = (y_min, y_max) {
        if lo > hi {
            ctx.errors
                .push(format!("parameters.y_min = {lo} exceeds y_max = {hi}"));
        }
        if lo <= 0.3 {
            ctx.errors
                .push(format!("parameters.y_min = {lo} must exceed 0.3"));
        }
    }
    Some(EisensteinScanCfg {
        s: Complex64::new(s_re?, s_im?),
        n_lat: n_lat?,
        n_four: n_four?,
        x: x?,
        y_min: y_min?,
        y_max: y_max?,
        steps: steps?,
        csv_out: csv_out?,
    })
}

fn parse_scattering_scan(
    p: &serde_json::Map<String, Value>,
    errors: &mut Vec<String>,
) -> Option<ScatteringScanCfg> {
    let mut ctx = Ctx { errors };
    ctx.check_keys(p, &["t_min", "t_max", "step", "csv_out"], "parameters");
    let t_min = ctx.number(p, "t_min", "parameters");
    let t_max = ctx.number(p, "t_max", "parameters");
    let step = ctx.number(p, "step", "parameters");
    let step = ctx.positive(step, "parameters.step");
    let csv_out = ctx.string(p, "csv_out", "parameters");
    let t_min = ctx.positive(t_min, "parameters.t_min");
    if let (Some(lo), Some(hi)) = (t_min, t_max) {
        if lo > hi {
            ctx.errors
                .push(format!("parameters.t_min = {lo} exceeds t_max = {hi}"));
        }
    }
    Some(ScatteringScanCfg {
        t_min: t_min?,
        t_max: t_max?,
        step: step?,
        csv_out: csv_out?,
    })
}

fn parse_wave(p: &serde_json::Map<String, Value>, errors: &mut Vec<String>) -> Option<WaveCfg> {
    let mut ctx = Ctx { errors };
    ctx.check_keys(
        p,
        &[
            "a", "h", "tau0", "tau1", "direction", "amplitude", "t_final", "samples", "k_y_max",
            "csv_out",
        ],
        "parameters",
    );
    let a = ctx.number(p, "a", "parameters");
    let a = ctx.range(a, 1.0 + 1e-9, 20.0, "parameters.a");
    let h = ctx.number(p, "h", "parameters");
    let h = ctx.range(h, 1e-4, 0.1, "parameters.h");
    let tau0 = ctx.number(p, "tau0", "parameters");
    let tau1 = ctx.number(p, "tau1", "parameters");
    let amplitude = ctx.number_or(p, "amplitude", "parameters", 1.0);
    let t_final = ctx.number(p, "t_final", "parameters");
    let t_final = ctx.positive(t_final, "parameters.t_final");
    let samples = ctx.integer(p, "samples", "parameters");
    let samples = ctx.usize_range(samples, 1, 1000, "parameters.samples");
    let k_y_max = ctx.number(p, "k_y_max", "parameters");
    let k_y_max = ctx.positive(k_y_max, "parameters.k_y_max");
    let csv_out = ctx.string(p, "csv_out", "parameters");
    let direction = match p.get("direction") {
        Some(Value::String(s)) if s == "outgoing" => Some(Direction::Outgoing),
        Some(Value::String(s)) if s == "incoming" => Some(Direction::Incoming),
        Some(_) => {
            ctx.errors
                .push("parameters.direction must be \"outgoing\" or \"incoming\"".to_string());
            None
        }
        None => {
            ctx.errors
                .push("parameters: missing key \"direction\"".to_string());
            None
        }
    };
    if let (Some(lo), Some(hi)) = (tau0, tau1) {
        if lo >= hi {
            ctx.errors
                .push(format!("parameters.tau0 = {lo} must be < tau1 = {hi}"));
        }
    }
    Some(WaveCfg {
        a: a?,
        h: h?,
        tau0: tau0?,
        tau1: tau1?,
        direction: direction?,
        amplitude: amplitude?,
        t_final: t_final?,
        samples: samples?,
        k_y_max: k_y_max?,
        csv_out: csv_out?,
    })
}

fn parse_reduce(p: &serde_json::Map<String, Value>, errors: &mut Vec<String>) -> Option<ReduceCfg> {
    let mut ctx = Ctx { errors };
    ctx.check_keys(p, &["z"], "parameters");
    let text = ctx.string(p, "z", "parameters")?;
    match parse_complex(&text) {
        Ok(z) if z.im > 0.0 => Some(ReduceCfg { z }),
        Ok(z) => {
            ctx.errors
                .push(format!("parameters.z: Im z = {} must be > 0", z.im));
            None
        }
        Err(e) => {
            ctx.errors.push(format!("parameters.z: {e}"));
            None
        }
    }
}

/// Execute a validated scenario, writing declared outputs under `out_dir`.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(out_dir)?;
    let mut report = RunReport::default();
    report.row("seed", config.seed);
    match &config.command {
        Command::Immerse(cfg) => run_immerse(cfg, out_dir, &mut report)?,
        Command::Curvature(cfg) => run_curvature(cfg, out_dir, &mut report)?,
        Command::Spectrum(cfg) => run_spectrum(cfg, out_dir, &mut report)?,
        Command::EisensteinScan(cfg) => run_eisenstein_scan(cfg, out_dir, &mut report)?,
        Command::ScatteringScan(cfg) => run_scattering_scan(cfg, out_dir, &mut report)?,
        Command::Wave(cfg) => run_wave(cfg, out_dir, &mut report)?,
        Command::Reduce(cfg) => run_reduce(cfg, &mut report)?,
    }
    Ok(report)
}

fn finite_max_abs(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |a, b| a.max(b.abs()))
}

fn run_immerse(cfg: &ImmerseCfg, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let grid = cfg.grid.build()?;
    let (sp, u) = crate::dirac::exact_spinors(cfg.family, grid)?;
    let base = PathSpec::new((0, 0), cfg.path);
    let other = PathSpec::new(
        (0, 0),
        match cfg.path {
            PathStyle::XThenY => PathStyle::YThenX,
            PathStyle::YThenX => PathStyle::XThenY,
        },
    );
    let mut surf = integrate_immersion(&sp, &base)?;
    let alt = integrate_immersion(&sp, &other)?;
    let mut path_gap = 0.0f64;
    for k in 0..surf.grid.len() {
        path_gap = path_gap.max((surf.x1.samples[k] - alt.x1.samples[k]).abs());
        path_gap = path_gap.max((surf.x2.samples[k] - alt.x2.samples[k]).abs());
        path_gap = path_gap.max((surf.x3.samples[k] - alt.x3.samples[k]).abs());
    }
    let (_, kk, hh) = curvatures(&sp, &u)?;
    surf.k = Some(kk.clone());
    surf.h = Some(hh.clone());
    let conf = conformality_residual(&surf)?;
    let obj_path = out_dir.join(&cfg.obj_out);
    export_obj(&surf, &obj_path)?;
    report.row("nodes", surf.grid.len());
    report.row("closedness residual", format!("{:e}", surf.closedness));
    report.row("path independence gap", format!("{path_gap:e}"));
    report.row("max |K|", format!("{:e}", finite_max_abs(&kk.samples)));
    report.row("max |H|", format!("{:e}", finite_max_abs(&hh.samples)));
    report.row("conformality residual", format!("{conf:e}"));
    report.outputs.push(obj_path.clone());
    report.outputs.push(obj_path.with_extension("curvature.csv"));
    if path_gap > 1e-6 {
        report
            .violations
            .push(format!("path-independence gap {path_gap:e} exceeds 1e-6"));
    }
    Ok(())
}

fn run_curvature(cfg: &CurvatureCfg, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    use std::io::Write;
    let grid = cfg.grid.build()?;
    let (sp, u) = crate::dirac::exact_spinors(cfg.family, grid.clone())?;
    let (d, kk, hh) = curvatures(&sp, &u)?;
    let mut csv = String::from("i,j,x,y,K,H\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.idx(i, j);
            csv.push_str(&format!(
                "{i},{j},{},{},{},{}\n",
                grid.x(i),
                grid.y(j),
                kk.samples[idx],
                hh.samples[idx]
            ));
        }
    }
    let path = out_dir.join(&cfg.csv_out);
    let mut f = std::fs::File::create(&path)?;
    f.write_all(csv.as_bytes())?;
    report.row("nodes", grid.len());
    report.row("min D", format!("{:e}", d.samples.iter().cloned().fold(f64::INFINITY, f64::min)));
    report.row("max |K|", format!("{:e}", finite_max_abs(&kk.samples)));
    report.row("max |H|", format!("{:e}", finite_max_abs(&hh.samples)));
    report.outputs.push(path);
    Ok(())
}

fn run_spectrum(cfg: &SpectrumCfg, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let spec = FundamentalDomainSpec::modular_standard(cfg.a)?;
    let op = assemble(&spec, cfg.h)?;
    let result = classify(lowest_eigenpairs(&op, cfg.count)?);
    let path = out_dir.join(&cfg.csv_out);
    write_report(&result, &path)?;
    report.row("mesh nodes", op.len());
    report.row("lambda_0", result.eigenvalues[0]);
    report.row(
        "max residual",
        format!("{:e}", finite_max_abs(&result.residuals)),
    );
    report.outputs.push(path);
    if (result.eigenvalues[0] + 0.25).abs() > 5e-3 {
        report.violations.push(format!(
            "lambda_0 = {} strays from -1/4 by more than 5e-3",
            result.eigenvalues[0]
        ));
    }
    Ok(())
}

fn run_eisenstein_scan(
    cfg: &EisensteinScanCfg,
    out_dir: &Path,
    report: &mut RunReport,
) -> Result<()> {
    use std::io::Write;
    let params = EisensteinParams::new(cfg.s, cfg.n_lat, cfg.n_four)?;
    let mut csv = String::from("x,y,Re E,Im E,error_estimate\n");
    let mut cross_gap = 0.0f64;
    for i in 0..=cfg.steps {
        let y = cfg.y_min + (cfg.y_max - cfg.y_min) * i as f64 / cfg.steps as f64;
        let z = UpperHalfPoint::new(cfg.x, y)?;
        let e = eisenstein_fourier(&z, &params)?;
        if cfg.s.re > 1.0 {
            let lat = eisenstein_lattice(&z, &params)?;
            cross_gap = cross_gap.max((lat.value - e.value).norm());
        }
        csv.push_str(&format!(
            "{},{y},{},{},{}\n",
            cfg.x, e.value.re, e.value.im, e.error_estimate
        ));
    }
    let path = out_dir.join(&cfg.csv_out);
    let mut f = std::fs::File::create(&path)?;
    f.write_all(csv.as_bytes())?;
    report.row("points", cfg.steps + 1);
    if cfg.s.re > 1.0 {
        report.row("lattice/Fourier gap", format!("{cross_gap:e}"));
        if cross_gap > 1e-6 {
            report.violations.push(format!(
                "lattice and Fourier evaluations disagree by {cross_gap:e} > 1e-6"
            ));
        }
    }
    report.outputs.push(path);
    Ok(())
}

fn run_scattering_scan(
    cfg: &ScatteringScanCfg,
    out_dir: &Path,
    report: &mut RunReport,
) -> Result<()> {
    let mut ts = Vec::new();
    let mut t = cfg.t_min;
    while t <= cfg.t_max + 1e-12 {
        ts.push(t);
        t += cfg.step;
    }
    let path = out_dir.join(&cfg.csv_out);
    write_critical_line_scan(&ts, &path)?;
    let mut worst = 0.0f64;
    for &t in &ts {
        let phi = crate::eisenstein::scattering_phi(Complex64::new(0.5, t))?;
        worst = worst.max((phi.norm() - 1.0).abs());
    }
    report.row("points", ts.len());
    report.row("max ||phi| - 1|", format!("{worst:e}"));
    report.outputs.push(path);
    if worst > 1e-8 {
        report.violations.push(format!(
            "critical-line unitarity defect {worst:e} exceeds 1e-8"
        ));
    }
    Ok(())
}

fn run_wave(cfg: &WaveCfg, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let spec = FundamentalDomainSpec::modular_standard(cfg.a)?;
    let op = assemble(&spec, cfg.h)?;
    let profile = CuspProfile::bump(cfg.tau0, cfg.tau1, cfg.direction, cfg.amplitude)?;
    let mirror = CuspProfile {
        direction: match cfg.direction {
            Direction::Outgoing => Direction::Incoming,
            Direction::Incoming => Direction::Outgoing,
        },
        ..profile
    };
    let state = make_cusp_data(&profile, &op)?;
    let reference = make_cusp_data(&mirror, &op)?;
    let ortho = dpm_orthogonality(&op, &state, &reference)?;
    let e0 = energy_form(&op, &state, &state)?;
    let region = Region::below(cfg.k_y_max);
    let path = out_dir.join(&cfg.csv_out);
    write_timeseries(
        &op,
        &state,
        &reference,
        cfg.t_final,
        &region,
        cfg.samples,
        &path,
    )?;
    report.row("mesh nodes", op.len());
    report.row("E(0)", e0);
    report.row("D-/D+ orthogonality", format!("{ortho:e}"));
    report.outputs.push(path);
    if ortho > 1e-8 {
        report.violations.push(format!(
            "D-/D+ orthogonality residual {ortho:e} exceeds 1e-8"
        ));
    }
    Ok(())
}

fn run_reduce(cfg: &ReduceCfg, report: &mut RunReport) -> Result<()> {
    let z = UpperHalfPoint::from_complex(cfg.z)?;
    let (reduced, gamma) = reduce_to_fundamental_domain(&z)?;
    report.row("z", format!("{} + {}i", z.x(), z.y()));
    report.row("reduced", format!("{} + {}i", reduced.x(), reduced.y()));
    report.row(
        "gamma",
        format!(
            "[[{}, {}], [{}, {}]]",
            gamma.a, gamma.b, gamma.c, gamma.d
        ),
    );
    Ok(())
}
