//! Acceptance criteria C1-C12, one PASS/FAIL line each.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use tgalab::bases::blockwise::default_block_target;
use tgalab::bases::kt::{kt_c0_harmonic_threshold, kt_projected_witness};
use tgalab::weights::jar_scan;
use tgalab::*;

type Outcome = std::result::Result<(bool, String), Error>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn budget(trials: usize) -> SearchBudget {
    SearchBudget {
        seed: 20240611,
        trials,
        exhaustive_signs_max: 8,
        random_signs: 16,
        structured_max: 4,
    }
}

fn c1() -> Outcome {
    let rules = [
        ("constant", WeightRule::Constant),
        ("n^-1/2", WeightRule::power(2.0)),
        ("n^-2/3", WeightRule::power(3.0)),
    ];
    let mut worst = 0.0f64;
    for (_, rule) in &rules {
        let w = Weight::new(rule.clone(), 10_000)?;
        for q in [1.0, 1.5, 2.0] {
            let local = (1..=10_000usize)
                .into_par_iter()
                .map(|m| -> Result<f64> {
                    let f =
                        SparseVec::from_pairs((1..=m).map(|n| (n, 1.0 / w.primitives()[n - 1])))?;
                    Ok(rel(lorentz_norm(&f, &w, q)?, w.hw_sum(m)?.powf(1.0 / q)))
                })
                .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
            worst = worst.max(local);
        }
    }
    Ok((
        worst <= 1e-10,
        format!("max rel err {worst:.2e} over 3 weights x 3 q x m<=10^4 (tol 1e-10)"),
    ))
}

struct Kt {
    tables: Arc<KtTables>,
    basis: UnitBasis,
}

fn c2(kt: &Kt) -> Outcome {
    let b = &kt.basis;
    let window = kt.tables.window();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_primal, mut worst_dual) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let k = rng.gen_range(1..=64);
        let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, window, k)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        idx.sort_unstable();
        let c = SparseVec::from_pairs(
            idx.into_iter()
                .map(|n| (n, if rng.gen::<bool>() { 1.0 } else { -1.0 })),
        )?;
        let expect = (k as f64).sqrt();
        worst_primal = worst_primal.max(rel(b.norm(&c)?, expect));
        let d = b.dual_norm(&c)?;
        let upper = d.upper.unwrap_or(f64::INFINITY);
        worst_dual = worst_dual.max(rel(d.lower, expect)).max(rel(upper, expect));
    }
    let mut worst_q = 0.0f64;
    for m in 1..=64 {
        let q = bidem_quotient(b, m, &budget(20))?;
        worst_q = worst_q.max((q.value - 1.0).abs());
    }
    Ok((
        worst_primal <= 1e-9 && worst_dual <= 1e-9 && worst_q <= 1e-9,
        format!(
            "window {window}; |1_eA| vs |A|^1/2 max rel {worst_primal:.1e}; dual bracket max rel {worst_dual:.1e}; |bidem-1| max {worst_q:.1e} (tol 1e-9)"
        ),
    ))
}

fn c3(kt: &Kt) -> Outcome {
    let (mut hs, mut ratios) = (Vec::new(), Vec::new());
    let mut rows_ok = true;
    let mut worst_margin = f64::INFINITY;
    for m in 2..=60 {
        let w = kt_witness(&kt.tables, m)?;
        let r = w.evaluate(&kt.basis)?;
        let bound = w.bound.unwrap();
        rows_ok &= r >= bound;
        worst_margin = worst_margin.min(r / bound);
        hs.push(harmonic(m));
        ratios.push(r);
    }
    let fit = fit_loglog(&hs, &ratios)?;
    let slope_ok = (fit.slope - 0.5).abs() <= 0.1 && fit.r_squared >= 0.95;
    Ok((
        rows_ok && slope_ok,
        format!(
            "row bound {} (min ratio/bound {worst_margin:.4}); slope {:.4} r2 {:.3} (want 0.5+-0.1, r2>=0.95); ratio {:.4}..{:.4}",
            if rows_ok { "holds" } else { "violated" },
            fit.slope,
            fit.r_squared,
            ratios[0],
            ratios[ratios.len() - 1]
        ),
    ))
}

fn c4(kt: &Kt) -> Outcome {
    let mut worst = 0.0f64;
    let mut all_certified = true;
    for m in 2..=60 {
        let k = k_lower(&kt.basis, m, &budget(200))?;
        all_certified &= k.certified(&kt.basis)?;
        let ceiling = (harmonic(m).sqrt() / 2.0).max(1.0);
        worst = worst.max(k.value / ceiling);
    }
    Ok((
        worst <= 1.0 + 1e-9 && all_certified,
        format!(
            "max k_lower/ceiling {worst:.6} (<= 1+1e-9); witnesses re-evaluate: {all_certified}"
        ),
    ))
}

fn c5(kt: &Kt) -> Outcome {
    let mut worst = 0.0f64;
    for m in 1..=60 {
        let g = kt_projected_witness(&kt.tables, m)?;
        worst = worst.max(rel(kt.tables.club_norm(&g)?, harmonic(m) / 2.0));
    }
    Ok((
        worst <= 1e-10,
        format!("max rel err {worst:.2e} for m<=60 (tol 1e-10)"),
    ))
}

fn c6(kt: &Kt) -> Outcome {
    let raw: Vec<f64> = (1..=6).map(|k| 2f64.powf(-(k as f64) / 2.0)).collect();
    let norm = raw.iter().map(|e| e * e).sum::<f64>().sqrt();
    let eps: Vec<f64> = raw.iter().map(|e| e / norm).collect();
    match kt_c0_blocks(&kt.tables, &eps) {
        Ok(blocks) => {
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let a: Vec<f64> = (0..blocks.len())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let mut v = SparseVec::new();
                for (h, ak) in blocks.iter().zip(&a) {
                    v = v.axpy(*ak, &h.coefficients);
                }
                let top = a.iter().fold(0.0f64, |x, y| x.max(y.abs()));
                worst = worst.max(rel(kt.basis.norm(&v)?, top));
            }
            Ok((
                worst <= 1e-9,
                format!("max rel err {worst:.2e} on 20 vectors (tol 1e-9)"),
            ))
        }
        Err(Error::Resource { reached, .. }) => Ok((
            false,
            format!(
                "no admissible block for eps_{} inside M=60: needs H_m >= {:.1}, H_60 = {:.2}",
                reached + 1,
                kt_c0_harmonic_threshold(2.0, eps[reached]),
                harmonic(60)
            ),
        )),
        Err(e) => Err(e),
    }
}

fn c7() -> Outcome {
    let small = build_perturbed(
        2.0,
        2.0,
        Arc::new(Weight::power(2.0, 64)?),
        EtaMap::default(),
        64,
    )?;
    let e1 = small.dual_eval(&Element::Single(SparseVec::unit(1)?))?;
    let annihilated = e1.is_empty();
    let ms: Vec<usize> = (2..=2000).collect();
    let rows = perturbed_growth(2.0, 2.0, &WeightRule::power(2.0), &ms)?;
    let scaled = rows
        .iter()
        .map(|r| r.f_minus_e1 * r.h.sqrt())
        .fold(0.0f64, f64::max);
    let fit = fit_loglog(
        &rows.iter().map(|r| r.h).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.ratio).collect::<Vec<_>>(),
    )?;
    let ok = annihilated && scaled <= 1.0 + 1e-9 && (fit.slope - 0.5).abs() <= 0.15;
    Ok((
        ok,
        format!(
            "dual_eval(e_1)=0: {annihilated}; max |f_m-e_1| H^1/2 = {scaled:.4} (<= |T| = 1); slope {:.4} r2 {:.3} (want 0.5+-0.15)",
            fit.slope, fit.r_squared
        ),
    ))
}

fn c8() -> Outcome {
    let t = blockwise_t(default_block_target, 12)?;
    let last = t[12];
    let w = Arc::new(Weight::power(2.0, last)?);
    let b = build_blockwise(2.0, 2.0, w.clone(), t.clone(), last)?;
    let mut gaps_ok = true;
    let (mut lambdas, mut ratios) = (Vec::new(), Vec::new());
    for k in 1..=12 {
        let c = blockwise_witness(&b, k, &BlockOrder::Identity)?;
        let gap = c.gamma - c.theta;
        gaps_ok &= gap > 0.0 && gap <= 2.0;
        lambdas.push(c.lambda);
        ratios.push(c.ratio);
    }
    let zs: Vec<SparseVec> = (1..=12).map(|k| b.annihilator(k)).collect::<Result<_>>()?;
    let annihilated = (1..=last)
        .into_par_iter()
        .map(|j| -> Result<bool> {
            let y = b.synth(&SparseVec::unit(j)?)?;
            let y = y.single()?;
            Ok(zs
                .iter()
                .all(|z| y.iter().map(|(n, v)| v * z.get(n)).sum::<f64>() == 0.0))
        })
        .try_reduce(|| true, |a, c| Ok(a && c))?;
    let small = build_blockwise(2.0, 2.0, w, t.clone(), t[6])?;
    let (rank, cols) = small.totality_rank()?;
    let increasing = ratios.windows(2).all(|r| r[1] > r[0]);
    let drops: Vec<usize> = (1..12)
        .filter(|&i| ratios[i] <= ratios[i - 1])
        .map(|i| i + 1)
        .collect();
    let c = ratios
        .iter()
        .zip(&lambdas)
        .map(|(r, l)| r / l.sqrt())
        .fold(f64::INFINITY, f64::min);
    let fit = fit_loglog(&lambdas, &ratios)?;
    let list: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    Ok((
        gaps_ok && annihilated && increasing && c > 0.0,
        format!(
            "gaps in (0,2]: {gaps_ok}; z*_k(y_j)=0 for j<={last}: {annihilated}; rank {rank}/{cols} on N={}; strictly increasing: {increasing}{}; c = {c:.4}; slope vs Lambda {:.3}; ratios [{}]",
            t[6],
            if drops.is_empty() { String::new() } else { format!(" (drops at k={drops:?})") },
            fit.slope,
            list.join(", ")
        ),
    ))
}

fn c9() -> Outcome {
    let w = Arc::new(Weight::power(2.0, 1000)?);
    let ws = Arc::new(w.dual()?);
    let mut worst = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=200);
        let f =
            SparseVec::from_pairs(rand::seq::index::sample(&mut rng, 1000, k).into_iter().map(
                |i| {
                    (
                        i + 1,
                        rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-3.0..1.0)),
                    )
                },
            ))?;
        let d11 = lorentz_norm(&f, &w, 1.0)?;
        let mm = marcinkiewicz_norm(&f, &ws)?;
        let d1inf = lorentz_norm(&f, &w, f64::INFINITY)?;
        worst = worst.min(d11 - mm).min(mm - d1inf);
    }
    Ok((
        worst >= -1e-10,
        format!("min slack {worst:.3e} over 10^4 vectors (>= -1e-10)"),
    ))
}

fn c10() -> Outcome {
    let n = 512;
    let w = Arc::new(Weight::power(2.0, n)?);
    let ws = Arc::new(w.dual()?);
    let x: Arc<dyn Basis> = Arc::new(UnitBasis::new(Space::lorentz(w.clone(), 1.0)?, n)?);
    let y: Arc<dyn Basis> = Arc::new(UnitBasis::new(Space::marcinkiewicz(ws.clone(), true)?, n)?);
    let d = build_diamond(x.clone(), y.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut identities = true;
    for _ in 0..100 {
        let k = rng.gen_range(1..=64);
        let a = SparseVec::from_pairs(
            rand::seq::index::sample(&mut rng, n, k)
                .into_iter()
                .map(|i| (i + 1, rng.gen_range(-2.0..2.0))),
        )?;
        let dw = diamond_conditionality_witness(x.as_ref(), y.as_ref(), &a)?;
        let root2 = a.scale(2f64.sqrt());
        identities &=
            d.synth(&dw.f_o.add(&dw.f_e))? == Element::Pair(root2.clone(), SparseVec::new());
        identities &= d.synth(&dw.f_o.sub(&dw.f_e))? == Element::Pair(SparseVec::new(), root2);
    }
    let bud = budget(24);
    let ms: Vec<usize> = (2..=512).collect();
    let ks = k_lower_sweep(&d, &ms, &bud)?;
    let rows = ms
        .par_iter()
        .zip(ks.par_iter())
        .map(|(&m, k)| -> Result<(f64, f64, f64, bool)> {
            let e = e_lower(x.as_ref(), y.as_ref(), m, &bud)?
                .value
                .max(e_lower(y.as_ref(), x.as_ref(), m, &bud)?.value);
            // direct norm evaluation of the indicator and 1/s_n profiles
            let mut direct = 0.0f64;
            for a in [
                SparseVec::from_pairs((1..=m).map(|j| (j, 1.0)))?,
                SparseVec::from_pairs((1..=m).map(|j| (j, 1.0 / w.primitives()[j - 1])))?,
            ] {
                let (nx, ny) = (lorentz_norm(&a, &w, 1.0)?, marcinkiewicz_norm(&a, &ws)?);
                direct = direct.max(nx / ny).max(ny / nx);
            }
            let q = bidem_quotient(&d, m, &bud)?;
            Ok((k.value, e.max(direct), q.value, k.certified(&d)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let dominates = rows.iter().all(|r| r.0 >= 0.5 * r.1 * (1.0 - 1e-12));
    let nondecreasing = rows.windows(2).all(|p| p[1].0 >= p[0].0);
    let certified = rows.iter().all(|r| r.3);
    let qmax = rows.iter().map(|r| r.2).fold(0.0f64, f64::max);
    let qmax_first = rows[..255].iter().map(|r| r.2).fold(0.0f64, f64::max);
    let bounded = qmax.is_finite() && qmax <= 1.05 * qmax_first;
    Ok((
        identities && dominates && nondecreasing && certified && bounded,
        format!(
            "identities exact: {identities}; k_lower >= E/2: {dominates}; nondecreasing: {nondecreasing}; certified: {certified}; k_lower(2)={:.4}, k_lower(512)={:.4}; bidem quotient max {qmax:.4} (m<=256: {qmax_first:.4})",
            rows[0].0,
            rows[rows.len() - 1].0
        ),
    ))
}

fn c11() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [0.25, 0.5, 0.75] {
        let base = jar_scan(a, 500, 20)?;
        let doubled = jar_scan(a, 1000, 40)?;
        let change = rel(doubled.max_ratio, base.max_ratio);
        ok &= change < 0.01;
        parts.push(format!(
            "a={a}: {:.5} at {:?} -> {:.5} at {:?} ({:.2}%)",
            base.max_ratio,
            base.argmax,
            doubled.max_ratio,
            doubled.argmax,
            100.0 * change
        ));
    }
    Ok((ok, format!("{} (tol 1%)", parts.join("; "))))
}

fn oracle(f: &SparseVec, m: usize) -> Vec<IndexSet> {
    let supp: Vec<(usize, f64)> = f.iter().collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << supp.len()) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let (mut lo, mut hi, mut idx) = (f64::INFINITY, 0.0f64, Vec::new());
        for (i, &(n, v)) in supp.iter().enumerate() {
            if mask >> i & 1 == 1 {
                lo = lo.min(v.abs());
                idx.push(n);
            } else {
                hi = hi.max(v.abs());
            }
        }
        if lo >= hi {
            out.push(IndexSet::new(idx).unwrap());
        }
    }
    out.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    out
}

fn c12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let values = [0.5, 1.0, 2.0, 3.0];
    let (mut mismatches, mut checks) = (0, 0);
    for _ in 0..500 {
        let k = rng.gen_range(0..=10);
        let f = SparseVec::from_pairs(rand::seq::index::sample(&mut rng, 30, k).into_iter().map(
            |i| {
                let v = values[rng.gen_range(0..values.len())];
                (i + 1, if rng.gen::<bool>() { v } else { -v })
            },
        ))?;
        for m in 0..=f.len() {
            checks += 1;
            if greedy_sets(&f, m, GreedyMode::All)? != oracle(&f, m) {
                mismatches += 1;
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{mismatches} mismatches in {checks} (vector, m) cases"),
    ))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, what: &str, start: Instant, out: Outcome| {
        let (pass, detail) = match out {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{id} {} {what}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    let s = Instant::now();
    report("C1", "Lorentz norm identity", s, c1());
    let s = Instant::now();
    let kt = build_kt(2.0, 60).map(|(tables, _, basis)| Kt { tables, basis });
    match kt {
        Ok(kt) => {
            report("C2", "KT exact bidemocracy", s, c2(&kt));
            let s = Instant::now();
            report("C3", "KT non-quasi-greedy growth", s, c3(&kt));
            let s = Instant::now();
            report("C4", "KT conditionality ceiling", s, c4(&kt));
            let s = Instant::now();
            report("C5", "KT projected norm", s, c5(&kt));
            let s = Instant::now();
            report("C6", "c0 block isometry", s, c6(&kt));
        }
        Err(e) => {
            for id in ["C2", "C3", "C4", "C5", "C6"] {
                report(id, "KT tables", s, Err(e.clone()));
            }
        }
    }
    let s = Instant::now();
    report("C7", "perturbed basis", s, c7());
    let s = Instant::now();
    report("C8", "blockwise basis", s, c8());
    let s = Instant::now();
    report("C9", "embedding chain", s, c9());
    let s = Instant::now();
    report("C10", "diamond algebra and conditionality", s, c10());
    let s = Instant::now();
    report("C11", "harmonic-difference constant stability", s, c11());
    let s = Instant::now();
    report("C12", "greedy oracle equivalence", s, c12());
    println!("acceptance: {} of 12 passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
