//! The acceptance battery: eight quantitative checks, each returning a
//! verdict with the numbers it was decided on.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::circlemap::{
    build_piecewise_canonical, build_rotation, build_sine_family, tune_omega, CriticalSpec,
    MapModel, TuneOptions,
};
use crate::conjugacy::{
    build_sampled, decade_scales, decade_summary, decade_variation, grid_criterion,
    longest_increasing_run, match_gap, measure_bracket, qs_constant, qs_scan, qs_scan_around,
    Decade, QsPoint, Sampling,
};
use crate::crossratio::{
    a_from_lengths, b_from_points, distortion_on_line, mobius, poincare_log_b, NestedPair,
};
use crate::error::Result;
use crate::finegrid::{build_grid, validate_grid, DEFAULT_SN_THRESHOLD};
use crate::num::{ccw, golden, real};
use crate::parabolic::{
    balanced_decomposition, detect_almost_parabolic, detect_n0, fd_schwarzian, order,
    return_schwarzian, yoccoz_fit, SAMPLES_PER_ATOM,
};
use crate::partition::{adjacency_report, aux_from, build_partition, AtomKind, Skeleton};
use crate::rotation::ContinuedFraction;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    /// Runtime limit the criterion carries.
    pub limit: Duration,
    pub elapsed: Duration,
    pub detail: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        let within = if self.elapsed <= self.limit {
            ""
        } else {
            " (over time limit)"
        };
        format!(
            "criterion {} [{}] {}: {} in {:.1?}{}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed,
            within
        )
    }
}

pub const TITLES: [&str; 8] = [
    "cross-ratio identities",
    "rotation oracle",
    "real bounds",
    "Schwarzian machinery",
    "Yoccoz scaling",
    "fine grid",
    "contrast experiment",
    "constant arithmetic",
];

const LIMITS_S: [u64; 8] = [10, 30, 600, 300, 300, 600, 1200, 1];

pub fn run(id: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let res = match id {
        1 => cross_ratio_identities(seed),
        2 => rotation_oracle(),
        3 => real_bounds(),
        4 => schwarzian_machinery(),
        5 => yoccoz_scaling(),
        6 => fine_grid(),
        7 => contrast_experiment(),
        8 => constant_arithmetic(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (pass, detail) = res.unwrap_or_else(|e| (false, format!("error {}: {e}", e.code())));
    Outcome {
        id,
        title: TITLES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        pass,
        limit: Duration::from_secs(LIMITS_S.get(id.wrapping_sub(1)).copied().unwrap_or(0)),
        elapsed: start.elapsed(),
        detail,
    }
}

pub fn run_all(seed: u64) -> Vec<Outcome> {
    (1..=8).map(|i| run(i, seed)).collect()
}

fn golden_tuned(template: &MapModel, budget: usize) -> Result<MapModel> {
    tune_omega(
        template,
        &golden(template.prec),
        &TuneOptions {
            tol: 1e-40,
            max_iterates: budget,
        },
    )
}

fn rel(a: &Float, b: &Float) -> f64 {
    let d = Float::with_val(a.prec(), a - b).abs();
    let s = Float::with_val(a.prec(), b.abs_ref());
    (d / s).to_f64()
}

fn cross_ratio_identities(seed: u64) -> Result<(bool, String)> {
    let p = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_ab, mut worst_int, mut worst_mob) = (0f64, 0f64, 0f64);
    for _ in 0..1000 {
        let mut xs: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if xs.windows(2).any(|w| w[1] - w[0] < 1e-9) {
            continue;
        }
        let pts: Vec<Float> = xs.iter().map(|&x| real(p, x)).collect();
        let pair = NestedPair::from_points(&pts[0], &pts[1], &pts[2], &pts[3])?;
        let (l, m, r) = pair.pieces();
        let a = a_from_lengths(&l, &m, &r)?;
        let b = b_from_points(&pts[0], &pts[1], &pts[2], &pts[3])?;
        let inv = Float::with_val(p, 1u32 / &b);
        worst_ab = worst_ab.max(rel(&inv, &Float::with_val(p, &a + 1u32)));
        let lb = Float::with_val(p, b.ln_ref());
        let integral = poincare_log_b(&pts[0], &pts[1], &pts[2], &pts[3]);
        worst_int = worst_int.max(Float::with_val(p, &lb - &integral).abs().to_f64());
        // pole of the Möbius map kept off [0, 1]
        let c: f64 = rng.gen_range(-0.5..0.5);
        let coef = [
            real(p, rng.gen_range(0.5..2.0)),
            real(p, rng.gen_range(-1.0..1.0)),
            real(p, c),
            real(p, 1.0 + c.abs()),
        ];
        let det = Float::with_val(p, &coef[0] * &coef[3]) - Float::with_val(p, &coef[1] * &coef[2]);
        if det <= 0u32 {
            continue;
        }
        let d = distortion_on_line(|x| mobius(&coef, x), &pts[0], &pts[1], &pts[2], &pts[3])?;
        worst_mob = worst_mob.max(Float::with_val(p, d - 1u32).abs().to_f64());
    }
    let pass = worst_ab <= 1e-30 && worst_int <= 1e-15 && worst_mob <= 1e-30;
    Ok((pass, format!("1/b vs 1+a {worst_ab:.2e}, log b vs integral {worst_int:.2e}, Möbius |D-1| {worst_mob:.2e}")))
}

fn rotation_oracle() -> Result<(bool, String)> {
    let p = 256;
    let rho = golden(p);
    let r = build_rotation(&rho, p)?;
    let norm = |q: u64| {
        let x = Float::with_val(p, &rho * q);
        let n = Float::with_val(p, x.round_ref());
        (x - n).abs()
    };
    let bound = Float::with_val(64, 1u32 / Float::with_val(64, &rho * &rho)).to_f64() + 1e-10;
    let tol = 2f64.powi(-(p as i32) + 16);
    let (mut worst_len, mut worst_adj) = (0f64, 0f64);
    for n in 1..=15 {
        let part = build_partition(&r, 0, n)?;
        let (ln, ls) = (norm(part.q_n), norm(part.q_next));
        for a in &part.atoms {
            let want = if a.kind == AtomKind::Long { &ln } else { &ls };
            worst_len = worst_len.max(Float::with_val(p, &a.arc.length - want).abs().to_f64());
        }
        worst_adj = worst_adj.max(adjacency_report(&part).constant);
    }
    let pass = worst_len <= tol && worst_adj <= bound;
    Ok((pass, format!("atom length error {worst_len:.2e} (tol {tol:.1e}), adjacency {worst_adj:.6} vs bound {bound:.6}")))
}

/// C_n for the golden-mean sine family with `m` critical points.
pub fn real_bounds_series(
    m: u32,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<Vec<(usize, f64)>> {
    let p = 256;
    let f = golden_tuned(&build_sine_family(m, &real(p, 0), p)?, 5000)?;
    levels
        .map(|n| Ok((n, adjacency_report(&build_partition(&f, 0, n)?).constant)))
        .collect()
}

/// Largest level-to-level change of C_n as a fraction of its running maximum.
pub fn stability(series: &[(usize, f64)]) -> f64 {
    let mut run = series.first().map(|s| s.1).unwrap_or(0.0);
    let mut worst: f64 = 0.0;
    for w in series.windows(2) {
        run = run.max(w[1].1);
        worst = worst.max((w[1].1 - w[0].1).abs() / run);
    }
    worst
}

fn real_bounds() -> Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [1u32, 2] {
        let s = real_bounds_series(m, 4..=12)?;
        let v = stability(&s);
        let finite = s.iter().all(|c| c.1.is_finite());
        pass &= finite && v <= 0.25;
        let cs: Vec<String> = s.iter().map(|c| format!("{:.3}", c.1)).collect();
        parts.push(format!(
            "m={m} C_4..12 [{}] variation {:.1}%",
            cs.join(" "),
            100.0 * v
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn bicritical_canonical(p: u32) -> Result<MapModel> {
    let spec = |c: f64| CriticalSpec {
        position: real(p, c),
        exponent: real(p, 3),
        half_width: Some(real(p, 0.1)),
        slope: None,
    };
    build_piecewise_canonical(&[spec(0.0), spec(0.5)], &real(p, 0.3), p)
}

/// Rotation number with all partial quotients 5 up to the tail.
fn fives(p: u32) -> Float {
    ContinuedFraction::from_quotients(&[5; 12])
        .expect("positive quotients")
        .value_with_golden_tail(p)
}

fn schwarzian_machinery() -> Result<(bool, String)> {
    let p = 256;
    let maps = [
        build_sine_family(1, &real(p, 0.2), p)?,
        build_sine_family(2, &real(p, 0.2), p)?,
        bicritical_canonical(p)?,
    ];
    let mut worst_pt: f64 = 0.0;
    for map in &maps {
        for x in [0.07, 0.2, 0.33, 0.61, 0.88] {
            let x = real(p, x);
            let s = map.schwarzian(&x)?.to_f64();
            let fd = fd_schwarzian(|y| map.eval(y), &x, 1e-3);
            worst_pt = worst_pt.max((s - fd).abs() / s.abs());
        }
    }
    let f = tune_omega(
        &build_sine_family(1, &real(p, 0), p)?,
        &fives(p),
        &TuneOptions {
            tol: 1e-40,
            max_iterates: 120_000,
        },
    )?;
    let top = 5;
    let sk = Skeleton::for_level(&f, 0, top)?;
    let mut worst_ret: f64 = 0.0;
    let mut ret_checks = 0usize;
    let mut verdicts = Vec::new();
    let mut sampled = 0usize;
    for n in 1..=top {
        let aux = aux_from(&f, &sk, n)?;
        let mut verdict = None;
        for i in 0..=aux.r() {
            let Some(ch) = detect_almost_parabolic(&f, &sk, &aux, i, SAMPLES_PER_ATOM)? else {
                continue;
            };
            sampled += ch.samples;
            let all_negative = ch.negative_fraction == 1.0;
            verdict = Some(verdict.unwrap_or(true) && all_negative);
            if n <= 3 {
                let x = ch.atoms[ch.atoms.len() / 2].midpoint();
                let chain = return_schwarzian(&f, ch.q as usize, &x)?.total.to_f64();
                let fd = fd_schwarzian(
                    |y| f.iterate_lift(y, ch.q),
                    &x,
                    ch.atoms[0].len_f64() * 1e-2,
                );
                worst_ret = worst_ret.max((chain - fd).abs() / chain.abs());
                ret_checks += 1;
            }
        }
        verdicts.push((n, verdict));
    }
    let n0 = detect_n0(&verdicts);
    let negative_ok = n0.is_some() && verdicts.iter().any(|v| v.1 == Some(true));
    let pass = worst_pt <= 1e-6 && ret_checks > 0 && worst_ret <= 1e-4 && negative_ok;
    let vs: Vec<String> = verdicts
        .iter()
        .map(|(n, v)| {
            format!(
                "{n}:{}",
                v.map(|b| if b { "neg" } else { "pos" }).unwrap_or("-")
            )
        })
        .collect();
    Ok((
        pass,
        format!(
            "pointwise FD {worst_pt:.2e}, return chain vs FD {worst_ret:.2e} on {ret_checks} returns, levels [{}] n0 {:?} over {sampled} points",
            vs.join(" "),
            n0
        ),
    ))
}

/// Bridge atom lengths of the sine family tuned to [1,1,1,40, 1, 1, …].
pub fn long_bridge_lengths(p: u32) -> Result<Vec<f64>> {
    let rho = ContinuedFraction::from_quotients(&[1, 1, 1, 40])?.value_with_golden_tail(p);
    let f = tune_omega(
        &build_sine_family(1, &real(p, 0), p)?,
        &rho,
        &TuneOptions {
            tol: 1e-40,
            max_iterates: 20_000,
        },
    )?;
    let n = 2;
    let sk = Skeleton::for_level(&f, 0, n)?;
    let aux = aux_from(&f, &sk, n)?;
    let ch = (0..=aux.r())
        .filter_map(|i| detect_almost_parabolic(&f, &sk, &aux, i, 4).transpose())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max_by_key(|c| c.len())
        .ok_or(crate::Error::TooShort(0))?;
    Ok(ch.lengths_f64())
}

fn yoccoz_scaling() -> Result<(bool, String)> {
    let lens = long_bridge_lengths(256)?;
    let fit = yoccoz_fit(&lens)?;
    let ell = 40;
    let model: Vec<f64> = (1..=ell)
        .map(|nu| 1.0 / (order(nu, ell) as f64).powi(2))
        .collect();
    let exact = yoccoz_fit(&model)?.slope;
    let dec = balanced_decomposition(20)?;
    // index formula written out by hand for ℓ = 20 (depth 2)
    let oracle_left = vec![(1, 1), (2, 3), (4, 7)];
    let oracle_right = vec![(20, 20), (18, 19), (14, 17)];
    let balanced_ok = dec.left == oracle_left
        && dec.right == oracle_right
        && dec.central[3] == (8, 13)
        && dec.is_exact_tiling();
    let pass = lens.len() >= 30
        && (fit.slope + 2.0).abs() <= 0.25
        && (exact + 2.0).abs() <= 1e-10
        && balanced_ok;
    Ok((
        pass,
        format!(
            "ℓ={} slope {:.3} (C_σ {:.2}), exact model slope {:+.12}, balanced ℓ=20 {}",
            lens.len(),
            fit.slope,
            fit.c_sigma,
            exact,
            if balanced_ok { "matches" } else { "differs" }
        ),
    ))
}

fn fine_grid() -> Result<(bool, String)> {
    let p = 256;
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [1u32, 2] {
        let f = golden_tuned(&build_sine_family(m, &real(p, 0), p)?, 250_000)?;
        let g = build_grid(&f, 10, DEFAULT_SN_THRESHOLD)?;
        let rep = validate_grid(&g)?;
        let atoms: usize = g.levels.iter().map(|l| l.atoms.len()).sum();
        let classified = rep.case_counts.iter().sum::<usize>() == atoms;
        pass &= rep.children_ok && classified && rep.levels == 10;
        parts.push(format!(
            "m={m} Q_1..Q_{} children ≤ {} (bound {}), ρ {:.2}, ratios in [{:.2e}, {:.3}] ⊂ [{:.2e}, {:.3}]",
            rep.levels, rep.a_observed, rep.children_bound, rep.rho_observed, rep.ratio_range.0, rep.ratio_range.1, rep.alpha, rep.beta
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn canonical_pair_member(c1: f64, window: f64, p: u32) -> Result<MapModel> {
    let spec = |c: f64| CriticalSpec {
        position: real(p, c),
        exponent: real(p, 3),
        half_width: Some(real(p, window)),
        slope: None,
    };
    build_piecewise_canonical(&[spec(0.0), spec(c1)], &real(p, 0), p)
}

/// Decades where at least half of the scan points are resolved.
fn resolved_decades(points: &[QsPoint]) -> Vec<Decade> {
    decade_summary(points)
        .into_iter()
        .filter(|d| 2 * d.resolved >= d.total)
        .collect()
}

fn show_decades(ds: &[Decade]) -> String {
    ds.iter()
        .map(|d| format!("1e{}:{:.3}", d.exponent, d.max_k.unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn contrast_experiment() -> Result<(bool, String)> {
    let p = 128;
    let quotients: Vec<u64> = (1..=12).collect();
    let rho = ContinuedFraction::from_quotients(&quotients)?.value_with_golden_tail(p);
    let opts = TuneOptions {
        tol: 1e-30,
        max_iterates: 1_000_000,
    };
    let tuned = |c1: f64, w: f64| tune_omega(&canonical_pair_member(c1, w, p)?, &rho, &opts);
    let f = tuned(0.5, 0.12)?;
    let m_f = f.certified_orbit_length().unwrap_or(0) as usize;
    let gap = |g: &MapModel| -> Result<f64> {
        let (a, b) = measure_bracket(g, &g.critical[1].position, m_f)?;
        Ok(0.5 * (a + b))
    };
    let lambda_f = gap(&f)?;
    let matched = match_gap(|c| tuned(c, 0.10), (0.45, 0.55), lambda_f, 1e-6, m_f, 12)?;
    let gm = matched.map;
    let gx = tuned(0.4, 0.10)?;
    let (lambda_m, lambda_x) = (gap(&gm)?, gap(&gx)?);
    let m = [&f, &gm, &gx]
        .iter()
        .filter_map(|g| g.certified_orbit_length())
        .min()
        .unwrap_or(0) as usize;
    let tabs = build_sampled(&f, &[&gm, &gx], &Sampling::full(m))?;
    let c1_offset = ccw(&gx.critical[0].position, &gx.critical[1].position).to_f64();
    let xstar =
        (tabs[1].preimage_offset(c1_offset) + f.critical[0].position.to_f64()).rem_euclid(1.0);
    let ts = decade_scales(2f64.powi(-20), 2f64.powi(-4), 12);
    let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();

    let mut matched_pts = qs_scan(&tabs[0], &grid, &ts)?;
    matched_pts.extend(qs_scan_around(&tabs[0], xstar, 3.0, 60, &ts)?);
    let matched_ds = resolved_decades(&matched_pts);
    let variation = decade_variation(&matched_ds).unwrap_or(f64::INFINITY);
    let matched_max = matched_ds
        .iter()
        .filter_map(|d| d.max_k)
        .fold(0.0, f64::max);

    let star_ds = resolved_decades(&qs_scan_around(&tabs[1], xstar, 3.0, 60, &ts)?);
    let run = longest_increasing_run(&star_ds);
    let star_max = star_ds.iter().filter_map(|d| d.max_k).fold(0.0, f64::max);

    let gaps_ok = (lambda_m - lambda_f).abs() <= 1e-6 && (lambda_x - lambda_f).abs() >= 0.05;
    let pass = gaps_ok && variation <= 0.5 && run >= 3 && star_max > 2.0 * matched_max;
    Ok((
        pass,
        format!(
            "M {m}; gaps f {lambda_f:.7} matched {lambda_m:.7} mismatched {lambda_x:.4}; matched max K by decade [{}] variation {:.1}%; mismatch point x*={xstar:.6} max K by decade [{}], increasing run {run}",
            show_decades(&matched_ds),
            100.0 * variation,
            show_decades(&star_ds)
        ),
    ))
}

fn constant_arithmetic() -> Result<(bool, String)> {
    let p = 128;
    let f = golden_tuned(&build_sine_family(1, &real(p, 0), p)?, 1000)?;
    let g = build_grid(&f, 3, DEFAULT_SN_THRESHOLD)?;
    let gc = grid_criterion(&g, &g)?;
    let rep = validate_grid(&g)?;
    let formula = qs_constant(
        rep.a_observed.max(2),
        &Rational::from_f64(rep.rho_observed).unwrap(),
        &Rational::from(0),
    )?;
    let identity_ok = gc.lambda_observed == 0.0 && gc.constant.triple() == formula.triple();
    let worked = qs_constant(7, &Rational::from(2), &Rational::from((1, 2)))?;
    // direct evaluation of the minimality condition β^p ρ₁ < 1/4
    let quarter = Rational::from((1, 4));
    let beta = Rational::from((2, 3));
    let rho1 = Rational::from(1344);
    let holds = |p: u32| beta.clone().pow(p as i32) * &rho1 < quarter;
    let minimal = holds(22) && !holds(21);
    let worked_ok = worked.p == 22
        && worked.rho1 == rho1
        && worked.triple() == (7, 22, Rational::from((5, 2)))
        && minimal;
    let (a, pp, lr) = gc.constant.triple();
    Ok((
        identity_ok && worked_ok,
        format!("identity λ={} triple ({a}, {pp}, {lr}); worked example p={} ρ₁={} triple (7, 22, 5/2) {}", gc.lambda_observed, worked.p, worked.rho1, if worked_ok { "reproduced" } else { "differs" }),
    ))
}
