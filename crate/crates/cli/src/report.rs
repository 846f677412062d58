//! Canonical JSON rendering. Every exact number is a string; keys are
//! sorted by `serde_json`'s default map, so identical inputs give identical
//! bytes.

use fedosov_core::formal::{FormalFunction, FormalScalar, EXACT};
use fedosov_core::scalar_ring::ScalarFn;
use fedosov_core::weyl::WeylElement;
use serde_json::{json, Map, Value};

/// `c` for a constant, `(c)*e[k1,k2]` for a wave, terms joined by ` + `.
pub fn fmt_fn(f: &ScalarFn) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    let dim = f.dim();
    let parts: Vec<String> = f
        .terms()
        .iter()
        .map(|(k, c)| {
            if k.iter().all(|v| *v == 0) {
                c.to_string()
            } else {
                let ks: Vec<String> = k[..dim].iter().map(|v| v.to_string()).collect();
                format!("({c})*e[{}]", ks.join(","))
            }
        })
        .collect();
    parts.join(" + ")
}

/// Coefficients of `ν^0, ν^1, …` with trailing zeros dropped. Negative
/// powers, which no reported function has, are prefixed as `nu^k: …`.
pub fn fmt_formal(f: &FormalFunction) -> Value {
    let mut out = Vec::new();
    for (k, c) in f.coeffs() {
        if *k < 0 {
            out.push(format!("nu^{k}: {}", fmt_fn(c)));
        }
    }
    let top = f.coeffs().keys().next_back().copied().unwrap_or(-1);
    for k in 0..=top {
        out.push(fmt_fn(&f.coeff(k)));
    }
    json!(out)
}

/// Nonzero coefficients as `nu^k: <coefficient>`, with `π` factors spelled
/// `pi^k`.
pub fn fmt_scalar(s: &FormalScalar) -> Value {
    json!(s.to_strings().into_iter().map(|(k, c)| format!("nu^{k}: {c}")).collect::<Vec<_>>())
}

pub fn fmt_order(order: i32) -> Value {
    if order >= EXACT / 2 {
        json!("exact")
    } else {
        json!(order)
    }
}

/// `"0"` for a zero residual; otherwise a summary that is still exact.
pub fn residual_weyl(a: &WeylElement) -> Value {
    if a.is_zero() {
        return json!("0");
    }
    let lowest = a.terms().keys().map(|k| k.degree()).min().unwrap_or(0);
    let d = a.dim();
    let leading: Vec<String> = a
        .terms()
        .iter()
        .filter(|(k, _)| k.degree() == lowest)
        .map(|(k, c)| {
            let forms: Vec<usize> = (0..d).filter(|j| k.dx & (1 << j) != 0).collect();
            format!("nu^{} y{:?} dx{:?}: {}", k.nu, &k.y[..d], forms, fmt_fn(c))
        })
        .collect();
    json!({ "lowest_degree": lowest, "terms": a.len(), "leading": leading })
}

pub fn residual_formal(f: &FormalFunction) -> Value {
    if f.is_zero() {
        json!("0")
    } else {
        fmt_formal(f)
    }
}

pub fn residual_scalar(s: &FormalScalar) -> Value {
    if s.is_zero() {
        json!("0")
    } else {
        fmt_scalar(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check {
    Pass,
    Fail,
    Skipped(String),
}

impl Check {
    fn to_json(&self) -> Value {
        match self {
            Check::Pass => json!(true),
            Check::Fail => json!(false),
            Check::Skipped(why) => json!(format!("skipped: {why}")),
        }
    }
}

/// Values, residuals and verdicts of one command.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub values: Map<String, Value>,
    pub residuals: Map<String, Value>,
    pub checks: Vec<(String, Check)>,
}

impl Report {
    pub fn value(&mut self, name: &str, v: Value) {
        self.values.insert(name.to_string(), v);
    }

    pub fn residual(&mut self, name: &str, v: Value) {
        self.residuals.insert(name.to_string(), v);
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.push((name.to_string(), if ok { Check::Pass } else { Check::Fail }));
    }

    pub fn skip(&mut self, name: &str, why: &str) {
        self.checks.push((name.to_string(), Check::Skipped(why.to_string())));
    }

    /// A residual that must vanish, recorded both as a residual and as a
    /// check of the same name.
    pub fn zero_weyl(&mut self, name: &str, a: &WeylElement) {
        self.residual(name, residual_weyl(a));
        self.check(name, a.is_zero());
    }

    pub fn zero_formal(&mut self, name: &str, f: &FormalFunction) {
        self.residual(name, residual_formal(f));
        self.check(name, f.is_zero());
    }

    pub fn zero_scalar(&mut self, name: &str, s: &FormalScalar) {
        self.residual(name, residual_scalar(s));
        self.check(name, s.is_zero());
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, c)| *c == Check::Fail).map(|(n, _)| n.as_str()).collect()
    }

    pub fn passed(&self) -> bool {
        self.failed().is_empty()
    }

    pub fn to_json(&self) -> Value {
        let checks: Map<String, Value> = self.checks.iter().map(|(n, c)| (n.clone(), c.to_json())).collect();
        json!({
            "values": self.values,
            "residuals": self.residuals,
            "checks": checks,
            "verdict": if self.passed() { "pass" } else { "fail" },
        })
    }
}

/// Pretty-printed with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
