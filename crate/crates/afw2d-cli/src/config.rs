//! Run configuration: defaults, TOML file, then command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use afw2d::assembly::Material;
use afw2d::experiments::{OrderSpec, SOLUTIONS};
use afw2d::mesh::DOMAINS;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    run: RunSection,
    refine: RefineSection,
    material: Option<MaterialSection>,
    tol: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    domain: Option<String>,
    order: Option<String>,
    orders: Option<String>,
    solution: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RefineSection {
    levels: Option<usize>,
    steps: Option<usize>,
    fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialSection {
    mu: f64,
    lambda: f64,
}

#[derive(Clone, Debug)]
pub struct Tolerances {
    /// relative residual of the commuting identities
    pub commuting: f64,
    /// relative skew moment of discrete stresses
    pub weak_symmetry: f64,
    /// smallest acceptable inf-sup constant
    pub inf_sup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { commuting: 1e-9, weak_symmetry: 1e-9, inf_sup: 1e-6 }
    }
}

impl Tolerances {
    fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(CliError::Usage(format!("tolerance {name} must be a non-negative number")));
        }
        match name {
            "commuting" => self.commuting = value,
            "weak_symmetry" => self.weak_symmetry = value,
            "inf_sup" => self.inf_sup = value,
            _ => return Err(CliError::Usage(format!("unknown tolerance '{name}' (commuting, weak_symmetry, inf_sup)"))),
        }
        Ok(())
    }
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub domain: String,
    pub order: OrderSpec,
    pub orders: Vec<usize>,
    pub solution: String,
    pub material: Option<Material>,
    pub levels: usize,
    pub steps: usize,
    pub fraction: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub tol: Tolerances,
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub domain: Option<String>,
    pub order: Option<String>,
    pub orders: Option<String>,
    pub solution: Option<String>,
    pub material: Option<String>,
    pub levels: Option<usize>,
    pub steps: Option<usize>,
    pub fraction: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Vec<String>,
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// `3`, `0..3` (inclusive) or `0,2,4`.
pub fn parse_order_list(s: &str) -> Result<Vec<usize>, CliError> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("'{t}' is not an order")));
    let v = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(CliError::Usage(format!("empty order range '{s}'")));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    Ok(v)
}

pub fn parse_material(s: &str) -> Result<Material, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("material '{s}' must be MU,LAMBDA")));
    }
    let mu = parts[0].trim().parse::<f64>().map_err(usage)?;
    let lambda = parts[1].trim().parse::<f64>().map_err(usage)?;
    Material::new(mu, lambda).map_err(usage)
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(o: Overrides) -> Result<RunConfig, CliError> {
        let file = match &o.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let domain = o.domain.or(file.run.domain).unwrap_or_else(|| "lshape_affine".into());
        if !DOMAINS.contains(&domain.as_str()) {
            return Err(CliError::Usage(format!("unknown domain '{domain}' (one of {})", DOMAINS.join(", "))));
        }
        let order: OrderSpec = o.order.or(file.run.order).as_deref().unwrap_or("0").parse().map_err(usage)?;
        let orders = parse_order_list(o.orders.or(file.run.orders).as_deref().unwrap_or("0..3"))?;
        let default_solution = if domain == "unit_square" { "smooth_trig" } else { "lshape_singular" };
        let solution = o.solution.or(file.run.solution).unwrap_or_else(|| default_solution.into());
        if !SOLUTIONS.contains(&solution.as_str()) {
            return Err(CliError::Usage(format!("unknown solution '{solution}' (one of {})", SOLUTIONS.join(", "))));
        }
        let material = match (o.material, file.material) {
            (Some(s), _) => Some(parse_material(&s)?),
            (None, Some(m)) => Some(Material::new(m.mu, m.lambda).map_err(usage)?),
            (None, None) => None,
        };
        let fraction = o.fraction.or(file.refine.fraction).unwrap_or(0.2);
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(CliError::Usage(format!("fraction {fraction} not in (0, 1]")));
        }
        let mut tol = Tolerances::default();
        for (k, v) in &file.tol {
            tol.set(k, *v)?;
        }
        for t in &o.tol {
            let (k, v) = t.split_once('=').ok_or_else(|| CliError::Usage(format!("tolerance '{t}' must be NAME=VAL")))?;
            tol.set(k.trim(), v.trim().parse().map_err(usage)?)?;
        }
        Ok(RunConfig {
            domain,
            order,
            orders,
            solution,
            material,
            levels: o.levels.or(file.refine.levels).unwrap_or(4),
            steps: o.steps.or(file.refine.steps).unwrap_or(10),
            fraction,
            out: o.out.or(file.run.out).unwrap_or_else(|| PathBuf::from("out")),
            seed: o.seed.or(file.run.seed).unwrap_or(1),
            tol,
        })
    }
}
