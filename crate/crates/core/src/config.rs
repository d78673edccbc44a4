//! Plain-text map description files.
//!
//! ```text
//! [family]
//! kind = canonical        # sine | rotation | canonical
//! m = 2                   # sine only
//! precision = 256
//! omega = 0.1             # optional when [tuning] is present
//!
//! [critical.0]
//! position = 0
//! exponent = 3
//! window = 0.1
//! slope = 0.5             # optional
//!
//! [tuning]
//! target_rho = golden     # golden, a continued-fraction prefix like [1,1,1,40], or a decimal
//! tol = 1e-30
//! budget = 50000
//! ```

use ini::Ini;
use rug::Float;

use crate::circlemap::{
    build_piecewise_canonical, build_rotation, build_sine_family, tune_omega, CriticalSpec,
    MapModel, TuneOptions,
};
use crate::error::{Error, Result};
use crate::num::{check_precision, golden, parse_real, real, DEFAULT_PRECISION};
use crate::rotation::{parse_prefix, ContinuedFraction};

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    Sine { m: u32 },
    Rotation,
    Canonical,
}

#[derive(Debug, Clone)]
pub enum RhoTarget {
    Golden,
    Prefix(Vec<u64>),
    Decimal(String),
}

impl RhoTarget {
    pub fn parse(s: &str) -> Result<RhoTarget> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("golden") {
            Ok(RhoTarget::Golden)
        } else if t.contains(',') || t.starts_with('[') {
            Ok(RhoTarget::Prefix(parse_prefix(t)?))
        } else if t.parse::<f64>().is_ok() {
            Ok(RhoTarget::Decimal(t.to_string()))
        } else {
            Err(Error::InvalidInput(format!(
                "cannot read rotation target {t:?}"
            )))
        }
    }

    /// The prefix is continued with golden-mean quotients.
    pub fn value(&self, prec: u32) -> Result<Float> {
        match self {
            RhoTarget::Golden => Ok(golden(prec)),
            RhoTarget::Prefix(a) => {
                Ok(ContinuedFraction::from_quotients(a)?.value_with_golden_tail(prec))
            }
            RhoTarget::Decimal(s) => parse_real(s, prec),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TuningSpec {
    pub target: RhoTarget,
    pub tol: f64,
    pub budget: usize,
}

#[derive(Debug, Clone)]
pub struct MapSpec {
    pub kind: FamilyKind,
    pub precision: u32,
    pub omega: Option<String>,
    pub critical: Vec<CriticalSpecText>,
    pub tuning: Option<TuningSpec>,
}

/// A critical point as written in the file; parsed at working precision on build.
#[derive(Debug, Clone, Default)]
pub struct CriticalSpecText {
    pub position: String,
    pub exponent: String,
    pub window: Option<String>,
    pub slope: Option<String>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl MapSpec {
    pub fn parse(text: &str) -> Result<MapSpec> {
        let stripped: String = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim_end().to_string() + "\n")
            .collect();
        let ini = Ini::load_from_str(&stripped).map_err(|e| bad(format!("config: {e}")))?;
        let fam = ini
            .section(Some("family"))
            .ok_or_else(|| bad("config: missing [family]"))?;
        let kind = match fam.get("kind").map(str::trim) {
            Some("sine") => {
                let m = fam
                    .get("m")
                    .unwrap_or("1")
                    .trim()
                    .parse()
                    .map_err(|_| bad("config: bad m"))?;
                FamilyKind::Sine { m }
            }
            Some("rotation") => FamilyKind::Rotation,
            Some("canonical") => FamilyKind::Canonical,
            other => return Err(bad(format!("config: unknown family kind {other:?}"))),
        };
        let precision = match fam.get("precision") {
            Some(p) => p.trim().parse().map_err(|_| bad("config: bad precision"))?,
            None => DEFAULT_PRECISION,
        };
        check_precision(precision)?;
        let mut critical: Vec<(usize, CriticalSpecText)> = Vec::new();
        for (name, props) in ini.iter() {
            let Some(idx) = name.and_then(|n| n.strip_prefix("critical.")) else {
                continue;
            };
            let idx: usize = idx
                .parse()
                .map_err(|_| bad(format!("config: bad section [critical.{idx}]")))?;
            let get = |k: &str| props.get(k).map(|v| v.trim().to_string());
            critical.push((
                idx,
                CriticalSpecText {
                    position: get("position")
                        .ok_or_else(|| bad(format!("config: critical.{idx} needs position")))?,
                    exponent: get("exponent").unwrap_or_else(|| "3".into()),
                    window: get("window"),
                    slope: get("slope"),
                },
            ));
        }
        critical.sort_by_key(|c| c.0);
        let tuning = match ini.section(Some("tuning")) {
            Some(t) => Some(TuningSpec {
                target: RhoTarget::parse(
                    t.get("target_rho")
                        .ok_or_else(|| bad("config: [tuning] needs target_rho"))?,
                )?,
                tol: t
                    .get("tol")
                    .map(|v| v.trim().parse())
                    .transpose()
                    .map_err(|_| bad("config: bad tol"))?
                    .unwrap_or(1e-30),
                budget: t
                    .get("budget")
                    .map(|v| v.trim().parse())
                    .transpose()
                    .map_err(|_| bad("config: bad budget"))?
                    .unwrap_or(50_000),
            }),
            None => None,
        };
        let omega = fam.get("omega").map(|s| s.trim().to_string());
        if omega.is_none() && tuning.is_none() {
            return Err(bad("config: give [family] omega or a [tuning] section"));
        }
        if kind == FamilyKind::Canonical && critical.is_empty() {
            return Err(bad("config: canonical family needs [critical.k] sections"));
        }
        Ok(MapSpec {
            kind,
            precision,
            omega,
            critical: critical.into_iter().map(|c| c.1).collect(),
            tuning,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<MapSpec> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        MapSpec::parse(&text)
    }

    /// The untuned map at the configured ω (or 0).
    pub fn template(&self) -> Result<MapModel> {
        let p = self.precision;
        let omega = match &self.omega {
            Some(s) => parse_real(s, p)?,
            None => real(p, 0),
        };
        match self.kind {
            FamilyKind::Sine { m } => build_sine_family(m, &omega, p),
            FamilyKind::Rotation => build_rotation(&omega, p),
            FamilyKind::Canonical => {
                let specs = self
                    .critical
                    .iter()
                    .map(|c| {
                        Ok(CriticalSpec {
                            position: parse_real(&c.position, p)?,
                            exponent: parse_real(&c.exponent, p)?,
                            half_width: c
                                .window
                                .as_deref()
                                .map(|w| parse_real(w, p))
                                .transpose()?,
                            slope: c.slope.as_deref().map(|s| parse_real(s, p)).transpose()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                build_piecewise_canonical(&specs, &omega, p)
            }
        }
    }

    /// Template tuned to the target rotation number when a [tuning] section is present.
    pub fn build(&self) -> Result<MapModel> {
        let map = self.template()?;
        match &self.tuning {
            Some(t) => {
                let target = t.target.value(self.precision)?;
                tune_omega(
                    &map,
                    &target,
                    &TuneOptions {
                        tol: t.tol,
                        max_iterates: t.budget,
                    },
                )
            }
            None => Ok(map),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BICRIT: &str = "[family]\nkind = canonical\nprecision = 128\nomega = 0.3\n\n[critical.1]\nposition = 0.5\nexponent = 3\nwindow = 0.1\n\n[critical.0]\nposition = 0\nexponent = 3\nwindow = 0.1\n";

    #[test]
    fn sections_are_ordered_by_index() {
        let s = MapSpec::parse(BICRIT).unwrap();
        assert_eq!(s.kind, FamilyKind::Canonical);
        assert_eq!(s.critical[0].position, "0");
        assert_eq!(s.critical[1].position, "0.5");
        assert_eq!(s.template().unwrap().n_critical(), 2);
    }

    #[test]
    fn inline_comments_are_ignored() {
        let s = MapSpec::parse(
            "[family]\nkind = sine   # one critical point\nm = 1\nomega = 0.1 # fixed\n",
        )
        .unwrap();
        assert_eq!(s.kind, FamilyKind::Sine { m: 1 });
        assert_eq!(s.omega.as_deref(), Some("0.1"));
    }

    #[test]
    fn rho_targets() {
        assert!(matches!(
            RhoTarget::parse("golden").unwrap(),
            RhoTarget::Golden
        ));
        assert!(
            matches!(RhoTarget::parse("[1,1,1,40]").unwrap(), RhoTarget::Prefix(v) if v == vec![1, 1, 1, 40])
        );
        assert!(matches!(
            RhoTarget::parse("0.38").unwrap(),
            RhoTarget::Decimal(_)
        ));
        assert!(RhoTarget::parse("pi").is_err());
    }

    #[test]
    fn missing_omega_and_tuning_is_rejected() {
        assert!(MapSpec::parse("[family]\nkind = sine\nm = 1\n").is_err());
        assert!(MapSpec::parse("[family]\nkind = blob\nomega = 0\n").is_err());
    }

    #[test]
    fn sine_tunes_to_golden() {
        let s = MapSpec::parse("[family]\nkind = sine\nm = 1\nprecision = 128\n[tuning]\ntarget_rho = golden\nbudget = 2000\n").unwrap();
        let f = s.build().unwrap();
        assert!(f.certified_orbit_length().unwrap() >= 987);
    }
}
