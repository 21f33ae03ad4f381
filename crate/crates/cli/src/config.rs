//! Run configuration: optional JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use gbell_core::functional::FunctionalJson;
use gbell_core::{BellFunctional, Complex64, Error, Preset, Result, Scenario, SignVector};
use serde::Deserialize;

/// Fields shared by every command. Flags win over the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Named functional: chsh, cglmp, mermin, zb, ekb
    #[arg(long)]
    pub preset: Option<String>,
    /// Functional JSON file (weights and/or coefficients)
    #[arg(long)]
    pub functional: Option<PathBuf>,
    /// Number of parties
    #[arg(long)]
    pub n: Option<usize>,
    /// Settings per party
    #[arg(long)]
    pub k: Option<usize>,
    /// Outcomes per setting
    #[arg(long)]
    pub d: Option<usize>,
    /// EKB weight f(1) as "re" or "re,im"
    #[arg(long)]
    pub f1: Option<String>,
    /// Sign vector: "+-", "1,-1" or canonical index
    #[arg(long)]
    pub sign: Option<String>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enumeration cap
    #[arg(long)]
    pub cap: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))
    }

    /// `self` with unset fields taken from `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            preset: self.preset.or(base.preset),
            functional: self.functional.or(base.functional),
            n: self.n.or(base.n),
            k: self.k.or(base.k),
            d: self.d.or(base.d),
            f1: self.f1.or(base.f1),
            sign: self.sign.or(base.sign),
            seed: self.seed.or(base.seed),
            cap: self.cap.or(base.cap),
            out: self.out.or(base.out),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("gbell-out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn apply_cap(&self, b: BellFunctional) -> Result<BellFunctional> {
        Ok(match self.cap {
            Some(cap) => b.with_cap(cap),
            None => b,
        })
    }

    /// Resolves the single functional source.
    pub fn functional(&self) -> Result<BellFunctional> {
        let b = match (&self.preset, &self.functional) {
            (Some(_), Some(_)) => {
                return Err(Error::Validation(
                    "give either --preset or --functional, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Validation(
                    "no functional: pass --preset or --functional".into(),
                ))
            }
            (None, Some(path)) => {
                if !path.exists() {
                    return Err(Error::Validation(format!(
                        "functional file {} does not exist",
                        path.display()
                    )));
                }
                let text = std::fs::read_to_string(path)?;
                let json: FunctionalJson = serde_json::from_str(&text)?;
                BellFunctional::from_json(&json)?
            }
            (Some(name), None) => self.preset_from_flags(name)?.build()?,
        };
        self.apply_cap(b)
    }

    fn require(&self, value: Option<usize>, flag: &str, preset: &str) -> Result<usize> {
        value.ok_or_else(|| Error::Validation(format!("preset {preset} needs --{flag}")))
    }

    pub fn preset_from_flags(&self, name: &str) -> Result<Preset> {
        let mismatch = |flag: &str, got: usize, want: usize| {
            Error::Validation(format!("preset {name} has {flag}={want}, got --{flag} {got}"))
        };
        let fixed = |flag: &str, value: Option<usize>, want: usize| -> Result<()> {
            match value {
                Some(v) if v != want => Err(mismatch(flag, v, want)),
                _ => Ok(()),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "chsh" => {
                fixed("n", self.n, 2)?;
                fixed("k", self.k, 2)?;
                fixed("d", self.d, 2)?;
                Ok(Preset::Chsh)
            }
            "cglmp" => {
                fixed("n", self.n, 2)?;
                fixed("k", self.k, 2)?;
                Ok(Preset::Cglmp {
                    d: self.require(self.d, "d", name)?,
                })
            }
            "mermin" => {
                fixed("k", self.k, 2)?;
                fixed("d", self.d, 2)?;
                Ok(Preset::Mermin {
                    n: self.require(self.n, "n", name)?,
                })
            }
            "zb" => {
                fixed("k", self.k, 2)?;
                fixed("d", self.d, 2)?;
                let n = self.require(self.n, "n", name)?;
                let sign = match &self.sign {
                    Some(s) => SignVector::parse(s, n)?,
                    None => SignVector::plus(n),
                };
                Ok(Preset::Zb { n, sign })
            }
            "ekb" => {
                fixed("n", self.n, 2)?;
                fixed("d", self.d, 2)?;
                let f1 = parse_complex(self.f1.as_deref().unwrap_or("0.5"))?;
                Ok(Preset::Ekb {
                    k: self.require(self.k, "k", name)?,
                    f1: [f1.re, f1.im],
                })
            }
            other => Err(Error::Validation(format!(
                "unknown preset '{other}' (expected chsh, cglmp, mermin, zb, ekb)"
            ))),
        }
    }

    /// Scenario from `--n --k --d` (all required).
    pub fn scenario(&self) -> Result<Scenario> {
        let get = |v: Option<usize>, flag: &str| {
            v.ok_or_else(|| Error::Validation(format!("missing --{flag}")))
        };
        let sc = Scenario::new(get(self.n, "n")?, get(self.k, "k")?, get(self.d, "d")?)?;
        Ok(match self.cap {
            Some(cap) => sc.with_cap(cap),
            None => sc,
        })
    }

    pub fn sign_for(&self, n_parties: usize) -> Result<SignVector> {
        match &self.sign {
            Some(s) => SignVector::parse(s, n_parties),
            None => Ok(SignVector::plus(n_parties)),
        }
    }
}

/// `"0.5"`, `"0.5,-0.5"`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number '{s}' in '{text}'")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Parse(format!("expected 're' or 're,im', got '{text}'"))),
    }
}
