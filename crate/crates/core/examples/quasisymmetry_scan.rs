//! Conjugacy tables between bicritical maps and K(x, t) scans over decades of scales.

use multicrit::circlemap::{
    build_piecewise_canonical, tune_omega, CriticalSpec, MapModel, TuneOptions,
};
use multicrit::conjugacy::{
    build_sampled, decade_scales, decade_summary, qs_scan, qs_scan_around, Sampling,
};
use multicrit::num::{ccw, golden, real};

fn bicritical(c1: f64, window: f64) -> multicrit::Result<MapModel> {
    let p = 128;
    let spec = |c: f64| CriticalSpec {
        position: real(p, c),
        exponent: real(p, 3),
        half_width: Some(real(p, window)),
        slope: None,
    };
    let m = build_piecewise_canonical(&[spec(0.0), spec(c1)], &real(p, 0), p)?;
    tune_omega(
        &m,
        &golden(p),
        &TuneOptions {
            tol: 1e-30,
            max_iterates: 30_000,
        },
    )
}

fn main() -> multicrit::Result<()> {
    let f = bicritical(0.5, 0.12)?;
    let matched = bicritical(0.5, 0.10)?;
    let mismatched = bicritical(0.4, 0.10)?;
    let m = [&f, &matched, &mismatched]
        .iter()
        .filter_map(|g| g.certified_orbit_length())
        .min()
        .unwrap_or(0) as usize;
    let tabs = build_sampled(&f, &[&matched, &mismatched], &Sampling::full(m))?;
    println!("orbit length {m}, resolution {:.2e}", tabs[0].resolution());

    let c1 = ccw(
        &mismatched.critical[0].position,
        &mismatched.critical[1].position,
    )
    .to_f64();
    let xstar = tabs[1].preimage_offset(c1);
    let ts = decade_scales(1e-4, 2f64.powi(-4), 6);
    let grid: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
    for (name, h) in [("matched", &tabs[0]), ("mismatched", &tabs[1])] {
        let mut pts = qs_scan(h, &grid, &ts)?;
        pts.extend(qs_scan_around(h, xstar, 3.0, 40, &ts)?);
        for d in decade_summary(&pts) {
            println!(
                "{name:>10} t~1e{}: max K {:.3} ({}/{} resolved)",
                d.exponent,
                d.max_k.unwrap_or(f64::NAN),
                d.resolved,
                d.total
            );
        }
    }
    println!("mismatch point x* = {xstar:.6}");
    Ok(())
}
