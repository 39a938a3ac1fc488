//! Named basis constructions, parameterized by an [`ExperimentConfig`].

use std::sync::Arc;

use anyhow::{bail, Result};
use tgalab::bases::blockwise::default_block_target;
use tgalab::{
    blockwise_t, build_blockwise, build_diamond, build_kt, build_perturbed, Basis, EtaMap,
    KtTables, Space, UnitBasis, Weight,
};

use crate::config::ExperimentConfig;

pub const NAMES: &[&str] = &[
    "kt",
    "lp",
    "lorentz",
    "marcinkiewicz",
    "diamond",
    "perturbed",
    "blockwise",
];

/// Smallest KT construction whose window holds `need` coordinates.
pub fn kt_covering(p: f64, need: usize) -> Result<(Arc<KtTables>, UnitBasis)> {
    let mut m = 2;
    loop {
        let (t, _, b) = build_kt(p, m)?;
        if t.window() >= need {
            return Ok((t, b));
        }
        m += 1;
    }
}

/// `d_{1,1}(w)` and `m_0(w*)` with `w_n = n^{1/p - 1}` on `n` coordinates.
pub fn diamond_components(p: f64, n: usize) -> Result<(Arc<dyn Basis>, Arc<dyn Basis>)> {
    let w = Arc::new(Weight::power(p, n)?);
    let ws = Arc::new(w.dual()?);
    let x: Arc<dyn Basis> = Arc::new(UnitBasis::new(Space::lorentz(w, 1.0)?, n)?);
    let y: Arc<dyn Basis> = Arc::new(UnitBasis::new(Space::marcinkiewicz(ws, true)?, n)?);
    Ok((x, y))
}

/// A basis able to evaluate parameters for every `m ≤ cfg.m_max`.
pub fn build(cfg: &ExperimentConfig) -> Result<Arc<dyn Basis>> {
    let n = cfg.m_max.max(2);
    Ok(match cfg.basis.as_str() {
        "kt" => Arc::new(kt_covering(cfg.p, n)?.1),
        "lp" => Arc::new(UnitBasis::new(Space::lp(cfg.p)?, n)?),
        "lorentz" => Arc::new(UnitBasis::new(
            Space::lorentz(Arc::new(Weight::power(cfg.p, n)?), cfg.q)?,
            n,
        )?),
        "marcinkiewicz" => {
            let w = Arc::new(Weight::power(cfg.p, n)?);
            Arc::new(UnitBasis::new(Space::marcinkiewicz(w, true)?, n)?)
        }
        "diamond" => {
            let (x, y) = diamond_components(cfg.p, n)?;
            Arc::new(build_diamond(x, y)?)
        }
        "perturbed" => {
            let w = Arc::new(Weight::power(cfg.p, cfg.window)?);
            Arc::new(build_perturbed(
                cfg.p,
                cfg.q,
                w,
                EtaMap::default(),
                cfg.window.max(n + 1),
            )?)
        }
        "blockwise" => {
            let t = blockwise_t(default_block_target, cfg.blocks)?;
            let last = t[cfg.blocks];
            let w = Arc::new(Weight::power(cfg.p, last)?);
            Arc::new(build_blockwise(cfg.p, cfg.q, w, t, last)?)
        }
        other => bail!(
            "unknown basis {other:?}; expected one of {}",
            NAMES.join(", ")
        ),
    })
}
