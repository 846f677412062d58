//! Job configuration: the JSON schema and its resolution into core types.

use std::path::Path;

use fedosov_core::geometry::{poisson_bracket, S3Field, SymmetryPolicy, SymplecticConnection};
use fedosov_core::moment::TraceCutoffs;
use fedosov_core::rational::{Gauss, Rational};
use fedosov_core::sample::{FreqBox, Sampler};
use fedosov_core::scalar_ring::{freq_from_slice, ParamCoeff, ScalarFn, MAX_COORDS};
use fedosov_core::transport::FlowSign;
use fedosov_core::weyl::SymplecticData;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One component `T_{ijk}` term `c·e^{ik·x}` of a symmetric 3-tensor.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TensorTerm {
    pub indices: [usize; 3],
    pub freq: Vec<i64>,
    pub re: String,
    #[serde(default = "zero_string")]
    pub im: String,
}

/// One Fourier term `c·e^{ik·x}` of a scalar function.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct FnTerm {
    pub freq: Vec<i64>,
    pub re: String,
    #[serde(default = "zero_string")]
    pub im: String,
}

fn zero_string() -> String {
    "0".to_string()
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    #[default]
    StrictValidate,
    AutoSymmetrize,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Plus,
    #[default]
    Minus,
}

/// Trace-density cutoffs; each list has one bound per coordinate.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub freq: Vec<i64>,
    pub test: Vec<i64>,
}

/// The job file. Tangent directions and functions left out are drawn from
/// the seed.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// Half the torus dimension.
    pub n: usize,
    /// Truncation order `N` in total degree.
    pub order: i32,
    /// Degree cap in the path parameter `t`; also the order of the
    /// Heisenberg flow.
    #[serde(default = "default_cap")]
    pub t_cap: u8,
    /// Degree cap in the loop parameter `s`.
    #[serde(default = "default_cap")]
    pub s_cap: u8,
    #[serde(default)]
    pub symmetry: Symmetry,
    #[serde(default)]
    pub connection: Vec<TensorTerm>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<TensorTerm>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<TensorTerm>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<TensorTerm>>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<FnTerm>>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<FnTerm>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<FnTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<CutoffSpec>,
    /// Highest `ν`-order of the trace density; defaults to the largest
    /// order up to 2 that the star product supports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_order: Option<i32>,
    /// Truncation order for disk computations (holonomy, action), which
    /// carry two path parameters and are much more expensive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disk_order: Option<i32>,
    #[serde(default)]
    pub flow_sign: Sign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_cap() -> u8 {
    2
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// A flat-torus job with everything else defaulted.
    pub fn flat(n: usize, order: i32) -> Self {
        JobConfig {
            n,
            order,
            t_cap: default_cap(),
            s_cap: default_cap(),
            symmetry: Symmetry::default(),
            connection: Vec::new(),
            a: None,
            b: None,
            c: None,
            h: None,
            f: None,
            g: None,
            cutoffs: None,
            trace_order: None,
            disk_order: None,
            flow_sign: Sign::default(),
            command: None,
            output: None,
        }
    }
}

/// Everything a command needs, with exact values in place.
#[derive(Clone, Debug)]
pub struct Job {
    pub sym: SymplecticData,
    pub order: i32,
    pub t_cap: u8,
    pub s_cap: u8,
    pub connection: SymplecticConnection,
    pub a: S3Field,
    pub b: S3Field,
    pub c: S3Field,
    pub h: ScalarFn,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub cutoffs: Option<TraceCutoffs>,
    pub trace_order: i32,
    pub disk_order: i32,
    pub sign: FlowSign,
    pub seed: u64,
    /// Inputs drawn from the seed rather than read from the config.
    pub generated: Vec<&'static str>,
}

/// Redraws until `accept` holds, so seeded inputs do not make the checks
/// vacuous (a constant `F`, commuting `F` and `G`). Gives up after a fixed
/// number of draws and keeps the last one.
fn draw(s: &mut Sampler, mut sample: impl FnMut(&mut Sampler) -> ScalarFn, accept: impl Fn(&ScalarFn) -> bool) -> ScalarFn {
    let mut f = sample(s);
    for _ in 0..64 {
        if accept(&f) {
            break;
        }
        f = sample(s);
    }
    f
}

fn parse_rational(s: &str) -> Result<Rational, CliError> {
    s.parse::<Rational>().map_err(|e| CliError::Config(e.to_string()))
}

fn parse_gauss(re: &str, im: &str) -> Result<Gauss, CliError> {
    Ok(Gauss::new(parse_rational(re)?, parse_rational(im)?))
}

fn parse_freq(k: &[i64], dim: usize) -> Result<[i16; MAX_COORDS], CliError> {
    if k.len() != dim {
        return Err(CliError::Config(format!("frequency {k:?} has {} entries, expected {dim}", k.len())));
    }
    if k.iter().any(|v| v.abs() > i16::MAX as i64 / 4) {
        return Err(CliError::Config(format!("frequency {k:?} is out of range")));
    }
    Ok(freq_from_slice(k))
}

fn build_fn(terms: &[FnTerm], dim: usize, name: &str) -> Result<ScalarFn, CliError> {
    let mut parsed = Vec::with_capacity(terms.len());
    for t in terms {
        parsed.push((parse_freq(&t.freq, dim)?, ParamCoeff::constant(parse_gauss(&t.re, &t.im)?)));
    }
    ScalarFn::real_from_terms(dim, parsed).map_err(|e| CliError::Config(format!("{name}: {e}")))
}

fn build_tensor(terms: &[TensorTerm], sym: SymplecticData, policy: SymmetryPolicy, name: &str) -> Result<S3Field, CliError> {
    let dim = sym.dim();
    let mut entries = Vec::with_capacity(terms.len());
    for t in terms {
        let f = ScalarFn::monomial(dim, parse_freq(&t.freq, dim)?, ParamCoeff::constant(parse_gauss(&t.re, &t.im)?));
        entries.push((t.indices, f));
    }
    let field = S3Field::from_entries(sym, entries, policy).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
    if !field.is_real() {
        return Err(CliError::Config(format!("{name}: components are not real-valued")));
    }
    // rebuild so the entries carry the realness flag
    Ok(field.map(|f| ScalarFn::from_terms(dim, f.terms().iter().cloned())))
}

impl Job {
    /// Parses and validates a config. Missing tangents and functions are
    /// sampled from `seed` with frequencies in `{-1, 0, 1}` along the first
    /// axis for tensors and in the unit box for functions.
    pub fn resolve(cfg: &JobConfig, seed: u64) -> Result<Self, CliError> {
        if cfg.n == 0 || 2 * cfg.n > MAX_COORDS {
            return Err(CliError::Config(format!("n = {} is outside 1..={}", cfg.n, MAX_COORDS / 2)));
        }
        if cfg.order < 3 {
            return Err(CliError::Config(format!("truncation order {} is below the minimum of 3", cfg.order)));
        }
        let sym = SymplecticData::standard(cfg.n);
        let dim = sym.dim();
        let policy = match cfg.symmetry {
            Symmetry::StrictValidate => SymmetryPolicy::StrictValidate,
            Symmetry::AutoSymmetrize => SymmetryPolicy::AutoSymmetrize,
        };
        let connection = SymplecticConnection::new(build_tensor(&cfg.connection, sym, policy, "connection")?);
        let mut sampler = Sampler::new(seed);
        let tensor_box = FreqBox::first_axis(dim, 1);
        let fn_box = FreqBox::uniform(dim, 1);
        let mut generated = Vec::new();
        let mut tensor = |spec: &Option<Vec<TensorTerm>>, name: &'static str, s: &mut Sampler| -> Result<S3Field, CliError> {
            match spec {
                Some(terms) => build_tensor(terms, sym, policy, name),
                None => {
                    generated.push(name);
                    Ok(s.s3(sym, &tensor_box, 1, 1.0))
                }
            }
        };
        let a = tensor(&cfg.a, "A", &mut sampler)?;
        let b = tensor(&cfg.b, "B", &mut sampler)?;
        let c = tensor(&cfg.c, "C", &mut sampler)?;
        let h = match &cfg.h {
            Some(terms) => build_fn(terms, dim, "H")?,
            None => {
                generated.push("H");
                draw(&mut sampler, |s| s.zero_mean_fn(&fn_box, 2), |h| !h.is_zero())
            }
        };
        let f = match &cfg.f {
            Some(terms) => build_fn(terms, dim, "F")?,
            None => {
                generated.push("F");
                draw(&mut sampler, |s| s.real_fn(&fn_box, 2), |f| !f.sub(&ScalarFn::constant(dim, f.mean())).is_zero())
            }
        };
        let g = match &cfg.g {
            Some(terms) => build_fn(terms, dim, "G")?,
            None => {
                generated.push("G");
                draw(&mut sampler, |s| s.real_fn(&fn_box, 2), |g| !poisson_bracket(&sym, &f, g).is_zero())
            }
        };
        let cutoffs = match &cfg.cutoffs {
            None => None,
            Some(c) => {
                if c.freq.len() != dim || c.test.len() != dim {
                    return Err(CliError::Config(format!("cutoffs need {dim} entries per list")));
                }
                if c.freq.iter().chain(&c.test).any(|v| *v < 0) {
                    return Err(CliError::Config("cutoffs must be nonnegative".to_string()));
                }
                Some(TraceCutoffs { freq: c.freq.clone(), test: c.test.clone() })
            }
        };
        let nu_order = cfg.order / 2;
        let trace_order = cfg.trace_order.unwrap_or_else(|| (nu_order - 1).clamp(0, 2));
        if trace_order < 0 {
            return Err(CliError::Config(format!("trace_order {trace_order} is negative")));
        }
        let disk_order = cfg.disk_order.unwrap_or(cfg.order.min(6));
        if disk_order < 3 {
            return Err(CliError::Config(format!("disk_order {disk_order} is below the minimum of 3")));
        }
        let sign = match cfg.flow_sign {
            Sign::Plus => FlowSign::Plus,
            Sign::Minus => FlowSign::Minus,
        };
        Ok(Job {
            sym,
            order: cfg.order,
            t_cap: cfg.t_cap,
            s_cap: cfg.s_cap,
            connection,
            a,
            b,
            c,
            h,
            f,
            g,
            cutoffs,
            trace_order,
            disk_order,
            sign,
            seed,
            generated,
        })
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn is_flat(&self) -> bool {
        self.connection.data().is_zero()
    }
}
