use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use multicrit::acceptance;
use multicrit::circlemap::{power_law_diagnostics, rotation_number, MapModel};
use multicrit::config::{MapSpec, RhoTarget, TuningSpec};
use multicrit::conjugacy::{
    build_conjugacy, decade_scales, grid_criterion, qs_scan, scan_csv, signature, table_csv,
};
use multicrit::crossratio::{cri_audit, level_pair};
use multicrit::finegrid::{build_grid, grid_csv, validate_grid};
use multicrit::num::to_decimal;
use multicrit::parabolic::{detect_almost_parabolic, yoccoz_fit};
use multicrit::partition::{
    adjacency_report, aux_from, build_partition, partition_csv, spot_and_bridge_size_check,
    Skeleton,
};
use multicrit::{Error, Result};

/// Multicritical circle maps: partitions, distortion, fine grids and conjugacies.
#[derive(Parser)]
#[command(name = "multicrit", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Seed for sampled x grids.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Significant decimal digits in numeric output.
    #[arg(long, global = true, default_value_t = 40)]
    digits: usize,
    /// Bridge length from which a bridge counts as saddle-node.
    #[arg(long, global = true, default_value_t = multicrit::finegrid::DEFAULT_SN_THRESHOLD)]
    sn_threshold: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build, tune or diagnose a map.
    #[command(subcommand)]
    Map(MapCmd),
    /// Dynamical and auxiliary partitions.
    #[command(subcommand)]
    Partition(PartitionCmd),
    /// Cross-ratio distortion products.
    #[command(subcommand)]
    Crossratio(CrossCmd),
    /// Lengths along long bridges against the 1/ord² law.
    Yoccoz {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        level: usize,
        /// Sample points per atom for the return Schwarzian.
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
    /// Fine grids.
    #[command(subcommand)]
    Grid(GridCmd),
    /// Conjugacies between two maps.
    #[command(subcommand)]
    Conjugacy(ConjCmd),
    /// The acceptance battery.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Subcommand)]
enum MapCmd {
    /// Build the map of a config file (tuning it when the file asks for it).
    Build {
        #[arg(long)]
        map: PathBuf,
    },
    /// Tune the map to a rotation number, overriding the file's [tuning] section.
    Tune {
        #[arg(long)]
        map: PathBuf,
        /// golden, a prefix like [1,1,1,40], or a decimal.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Power-law constants at each critical point and a rotation number estimate.
    Diag {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        iterates: usize,
        /// Width the rotation number bracket must reach.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum PartitionCmd {
    /// Atoms of the dynamical partition P_n(c).
    Build {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        critical: usize,
    },
    /// Adjacency constant C_n per level.
    Bounds {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = 1)]
        from: usize,
    },
    /// Auxiliary partition with critical spots and bridges.
    Aux {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        level: usize,
    },
}

#[derive(Subcommand)]
enum CrossCmd {
    /// Distortion product along the orbit of the level-n nested pair.
    Audit {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        level: usize,
        /// Iterates to push the pair (default q_n).
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GridCmd {
    /// Fine grid Q_1 … Q_levels as CSV.
    Build {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        levels: usize,
    },
    /// Refinement, children and ratio checks.
    Validate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        levels: usize,
    },
}

#[derive(Subcommand)]
enum ConjCmd {
    /// Rotation number, exponents and measure gaps.
    Signature {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// The table h(f^k(c₀)) = g^k(c₀).
    Build {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        length: usize,
    },
    /// K(x, t) on a random x grid over decade scales.
    Qs {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 2f64.powi(-20))]
        tmin: f64,
        #[arg(long, default_value_t = 2f64.powi(-4))]
        tmax: f64,
        #[arg(long, default_value_t = 4)]
        per_decade: usize,
    },
    /// Fine-grid isomorphism and the resulting quasisymmetry constant.
    GridCheck {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        levels: usize,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Run every acceptance criterion.
    All {
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

/// Outcome of a command: text to emit and whether every check held.
struct Output {
    text: String,
    verified: bool,
}

impl Output {
    fn ok(text: String) -> Output {
        Output {
            text,
            verified: true,
        }
    }
}

fn load(path: &Path) -> Result<MapModel> {
    MapSpec::load(path)?.build()
}

fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

fn map_report(m: &MapModel, digits: usize) -> String {
    let mut s = format!(
        "kind: {}\nprecision: {}\nomega: {}\n",
        m.kind_name(),
        m.prec,
        to_decimal(&m.omega, digits)
    );
    for (i, c) in m.critical.iter().enumerate() {
        s += &format!(
            "critical {i}: position {} exponent {}\n",
            to_decimal(&c.position, digits),
            to_decimal(&c.exponent, 6)
        );
    }
    if let Some(t) = &m.tuning {
        let width = (t.omega_high.clone() - &t.omega_low).to_f64();
        s += &format!(
            "target rho: {}\ncertified depth: {}\ncertified orbit length: {}\nomega bracket width: {}\n",
            to_decimal(&t.target, digits),
            t.certified_depth,
            m.certified_orbit_length().unwrap_or(0),
            sci(width)
        );
        let q: Vec<String> = t.expansion.partial_quotients[..t.certified_depth]
            .iter()
            .map(u64::to_string)
            .collect();
        s += &format!("certified quotients: [{}]\n", q.join(","));
    }
    s
}

fn run(cli: &Cli) -> Result<Output> {
    let c = &cli.common;
    let d = c.digits;
    match &cli.cmd {
        Cmd::Map(MapCmd::Build { map }) => Ok(Output::ok(map_report(&load(map)?, d))),
        Cmd::Map(MapCmd::Tune {
            map,
            target,
            budget,
            tol,
        }) => {
            let mut spec = MapSpec::load(map)?;
            let base = spec.tuning.clone().unwrap_or(TuningSpec {
                target: RhoTarget::Golden,
                tol: 1e-30,
                budget: 50_000,
            });
            spec.tuning = Some(TuningSpec {
                target: match target {
                    Some(t) => RhoTarget::parse(t)?,
                    None => base.target,
                },
                tol: tol.unwrap_or(base.tol),
                budget: budget.unwrap_or(base.budget),
            });
            Ok(Output::ok(map_report(&spec.build()?, d)))
        }
        Cmd::Map(MapCmd::Diag { map, iterates, tol }) => {
            let m = load(map)?;
            let mut s = map_report(&m, d);
            let est = rotation_number(&m, *iterates, *tol)?;
            s += &format!(
                "rotation number: {} in [{}/{}, {}/{}]\n",
                to_decimal(&est.value, d.min(20)),
                est.lower.0,
                est.lower.1,
                est.upper.0,
                est.upper.1
            );
            s += "index,exponent,alpha,beta,gamma,log_slope,off_window_variation\n";
            for r in power_law_diagnostics(&m) {
                s += &format!(
                    "{},{},{},{},{},{},{}\n",
                    r.index,
                    r.exponent,
                    sci(r.alpha),
                    sci(r.beta),
                    sci(r.gamma),
                    sci(r.log_slope),
                    sci(r.off_window_variation)
                );
            }
            Ok(Output::ok(s))
        }
        Cmd::Partition(PartitionCmd::Build {
            map,
            level,
            critical,
        }) => {
            let m = load(map)?;
            let p = build_partition(&m, *critical, *level)?;
            Ok(Output::ok(partition_csv(
                *level,
                &p.atoms,
                d,
                "dynamical partition: long and short atoms tile the circle",
            )))
        }
        Cmd::Partition(PartitionCmd::Bounds { map, levels, from }) => {
            let m = load(map)?;
            let mut s = String::from("# real bounds: adjacent atoms of the dynamical partition have comparable lengths\nlevel,constant,max_ratio,min_ratio\n");
            for n in *from..=*levels {
                let r = adjacency_report(&build_partition(&m, 0, n)?);
                s += &format!(
                    "{n},{},{},{}\n",
                    sci(r.constant),
                    sci(r.max_ratio),
                    sci(r.min_ratio)
                );
            }
            Ok(Output::ok(s))
        }
        Cmd::Partition(PartitionCmd::Aux { map, level }) => {
            let m = load(map)?;
            let sk = Skeleton::for_level(&m, 0, *level)?;
            let aux = aux_from(&m, &sk, *level)?;
            let rep = spot_and_bridge_size_check(&aux);
            let mut s = partition_csv(
                *level,
                &aux.atoms,
                d,
                "auxiliary partition: critical spots and bridges comparable to the level interval",
            );
            s = s.replacen(
                '\n',
                &format!(
                    "\n# spots {} bridges {} empty {} consecutive constant {}\n",
                    rep.spot_ratios.len(),
                    rep.bridge_ratios.len(),
                    rep.empty_bridges,
                    sci(rep.consecutive.constant)
                ),
                1,
            );
            Ok(Output::ok(s))
        }
        Cmd::Crossratio(CrossCmd::Audit { map, level, steps }) => {
            let m = load(map)?;
            let sk = Skeleton::for_level(&m, 0, *level)?;
            let pair = level_pair(&sk, *level)?;
            let k = steps.unwrap_or(sk.q(*level) as usize);
            let a = cri_audit(&m, &[(pair, k)])?;
            Ok(Output::ok(format!(
                "statement: distortion of cross-ratio b along an orbit of bounded multiplicity is bounded\nlevel: {level}\nsteps: {k}\nfactors: {}\nproduct: {}\nmultiplicity: {}\nfitted constant: {}\n",
                a.factors,
                to_decimal(&a.product, d),
                a.multiplicity,
                sci(a.fitted_c)
            )))
        }
        Cmd::Yoccoz {
            map,
            level,
            samples,
        } => {
            let m = load(map)?;
            let sk = Skeleton::for_level(&m, 0, *level)?;
            let aux = aux_from(&m, &sk, *level)?;
            let mut head = String::from(
                "# bridge lengths along almost parabolic chains scale like 1/ord(nu)^2\n",
            );
            let mut rows = String::from("bridge_id,nu,order,length,predicted_length,residual\n");
            for i in 0..=aux.r() {
                let Some(ch) = detect_almost_parabolic(&m, &sk, &aux, i, *samples)? else {
                    continue;
                };
                if ch.len() < 3 {
                    continue;
                }
                let fit = yoccoz_fit(&ch.lengths_f64())?;
                head += &format!(
                    "# bridge {i}: length {} slope {:.6} C_sigma {:.4}\n",
                    ch.len(),
                    fit.slope,
                    fit.c_sigma
                );
                for r in &fit.rows {
                    rows += &format!(
                        "{i},{},{},{},{},{}\n",
                        r.nu,
                        r.order,
                        sci(r.length),
                        sci(r.predicted),
                        sci(r.residual)
                    );
                }
            }
            Ok(Output::ok(head + &rows))
        }
        Cmd::Grid(GridCmd::Build { map, levels }) => {
            let g = build_grid(&load(map)?, *levels, c.sn_threshold)?;
            Ok(Output::ok(grid_csv(&g, d)))
        }
        Cmd::Grid(GridCmd::Validate { map, levels }) => {
            let g = build_grid(&load(map)?, *levels, c.sn_threshold)?;
            let r = validate_grid(&g)?;
            let text = format!(
                "statement: each level strictly refines the previous with boundedly many children and comparable lengths\nsn-threshold: {}\nlevels: {}\nmax children: {} (bound {})\nadjacent ratio: {}\nalpha: {}\nbeta: {}\nchild/parent ratio range: [{}, {}]\ncases b1/b2/b3: {}/{}/{}\n",
                g.threshold,
                r.levels,
                r.a_observed,
                r.children_bound,
                sci(r.rho_observed),
                sci(r.alpha),
                sci(r.beta),
                sci(r.ratio_range.0),
                sci(r.ratio_range.1),
                r.case_counts[0],
                r.case_counts[1],
                r.case_counts[2]
            );
            let within = r.ratio_range.0 >= r.alpha && r.ratio_range.1 <= r.beta;
            Ok(Output {
                text,
                verified: r.children_ok && within,
            })
        }
        Cmd::Conjugacy(ConjCmd::Signature { map, samples }) => {
            let s = signature(&load(map)?, *samples)?;
            let v = json!({
                "rho": to_decimal(&s.rho, d),
                "critical_points": s.n,
                "exponents": s.exponents,
                "gaps": s.gaps.iter().map(|g| json!({"value": g.value, "spread": g.spread})).collect::<Vec<_>>(),
            });
            Ok(Output::ok(
                serde_json::to_string_pretty(&v).expect("plain values") + "\n",
            ))
        }
        Cmd::Conjugacy(ConjCmd::Build {
            map,
            target,
            length,
        }) => {
            let h = build_conjugacy(&load(map)?, &load(target)?, *length)?;
            Ok(Output::ok(table_csv(
                &h,
                d,
                "conjugacy: h maps the orbit of f to the orbit of g in order",
            )))
        }
        Cmd::Conjugacy(ConjCmd::Qs {
            map,
            target,
            length,
            points,
            tmin,
            tmax,
            per_decade,
        }) => {
            let h = build_conjugacy(&load(map)?, &load(target)?, *length)?;
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let xs: Vec<f64> = (0..*points).map(|_| rng.gen::<f64>()).collect();
            let ts = decade_scales(*tmin, *tmax, *per_decade);
            let pts = qs_scan(&h, &xs, &ts)?;
            Ok(Output::ok(scan_csv(
                &pts,
                "quasisymmetry: K(x,t) = |h(x+t)-h(x)| / |h(x)-h(x-t)| stays bounded",
            )))
        }
        Cmd::Conjugacy(ConjCmd::GridCheck {
            map,
            target,
            levels,
        }) => {
            let gf = build_grid(&load(map)?, *levels, c.sn_threshold)?;
            let gg = build_grid(&load(target)?, *levels, c.sn_threshold)?;
            let r = grid_criterion(&gf, &gg)?;
            let k = &r.constant;
            let v = json!({
                "statement": "isomorphic fine grids with comparable atoms give a quasisymmetric conjugacy",
                "sn_threshold": c.sn_threshold,
                "levels": r.levels,
                "lambda_observed": r.lambda_observed,
                "a": k.a,
                "rho": k.rho.to_string(),
                "alpha": k.alpha.to_string(),
                "beta": k.beta.to_string(),
                "rho1": k.rho1.to_string(),
                "p": k.p,
                "lambda": k.lambda.to_string(),
            });
            Ok(Output::ok(
                serde_json::to_string_pretty(&v).expect("plain values") + "\n",
            ))
        }
        Cmd::Report(ReportCmd::All { only }) => {
            let ids: Vec<usize> = if only.is_empty() {
                (1..=8).collect()
            } else {
                only.clone()
            };
            let mut text = String::new();
            let mut verified = true;
            for id in ids {
                let o = acceptance::run(id, c.seed);
                eprintln!("{}", o.line());
                verified &= o.pass;
                text += &o.line();
                text.push('\n');
            }
            Ok(Output { text, verified })
        }
    }
}

/// Errors that mean a checked statement failed, as opposed to bad input.
fn is_verification_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::GridInvalid { .. }
            | Error::NotIsomorphic { .. }
            | Error::OrderViolation(_)
            | Error::StructureBroken(_)
            | Error::CoverageFailure { .. }
            | Error::NonInjective(_)
            | Error::CriticalInside(_)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error[InvalidInput]: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.common.out {
                Some(p) => {
                    std::fs::write(p, &out.text).map_err(|e| format!("{}: {e}", p.display()))
                }
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error[InvalidInput]: {e}");
                return ExitCode::from(1);
            }
            if out.verified {
                ExitCode::SUCCESS
            } else {
                eprintln!("error[VerificationFailed]: a checked inequality does not hold");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(if is_verification_failure(&e) { 2 } else { 1 })
        }
    }
}
