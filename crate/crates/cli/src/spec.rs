//! Parsing of compact kernel and list arguments.

use anyhow::{bail, Context, Result};
use serde::Serialize;

use xchain_core::FlipKernel;

/// Kernel described on the command line as `ea:pm=0.1`, `eac:qm=0.2,cr=0.5`
/// or `eac:p=0.1,cr=0.5`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum KernelSpec {
    Ea {
        p_m: f64,
    },
    Eac {
        q_m: Option<f64>,
        c_r: Option<f64>,
        p: Option<f64>,
    },
}

impl KernelSpec {
    pub fn kernel(&self, n: usize) -> Result<FlipKernel> {
        Ok(match *self {
            KernelSpec::Ea { p_m } => FlipKernel::mutation_only(n, p_m)?,
            KernelSpec::Eac { q_m, c_r, p } => match (q_m, c_r, p) {
                (Some(q), Some(c), None) => FlipKernel::mutation_crossover(n, q, c)?,
                (None, Some(c), Some(p)) => FlipKernel::coupled(n, p, c)?,
                (Some(q), None, Some(p)) => FlipKernel::mutation_crossover(n, q, p / q)?,
                _ => bail!("eac kernel needs exactly two of qm, cr, p"),
            },
        })
    }
}

pub fn parse_kernel(text: &str) -> Result<KernelSpec> {
    let (algo, rest) = text
        .split_once(':')
        .with_context(|| format!("kernel `{text}` should look like `ea:pm=0.1`"))?;
    let mut pm = None;
    let mut qm = None;
    let mut cr = None;
    let mut p = None;
    for pair in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .with_context(|| format!("expected key=value, found `{pair}`"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("bad number in `{pair}`"))?;
        let slot = match k.trim() {
            "pm" => &mut pm,
            "qm" => &mut qm,
            "cr" => &mut cr,
            "p" => &mut p,
            other => bail!("unknown kernel parameter `{other}`"),
        };
        if slot.replace(v).is_some() {
            bail!("parameter `{}` given twice", k.trim());
        }
    }
    match algo.trim() {
        "ea" => {
            if qm.is_some() || cr.is_some() {
                bail!("ea kernel takes only pm (or p)");
            }
            match (pm, p) {
                (Some(v), None) | (None, Some(v)) => Ok(KernelSpec::Ea { p_m: v }),
                _ => bail!("ea kernel needs pm"),
            }
        }
        "eac" => {
            if pm.is_some() {
                bail!("eac kernel takes qm, cr and p, not pm");
            }
            Ok(KernelSpec::Eac { q_m: qm, c_r: cr, p })
        }
        other => bail!("unknown algorithm `{other}`; expected ea or eac"),
    }
}

/// Comma-separated unsigned integers.
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad integer `{v}`")))
        .collect()
}

/// Comma-separated integers or an inclusive range `a..b`.
pub fn parse_dims(text: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("bad range `{text}`"))?;
        let b: usize = b.trim().parse().with_context(|| format!("bad range `{text}`"))?;
        if a > b {
            bail!("empty range `{text}`");
        }
        return Ok((a..=b).collect());
    }
    parse_list(text)
}
