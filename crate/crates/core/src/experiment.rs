//! Risk-level sweeps over the inspection game.
//!
//! For each `(eps1, eps2)` on a grid the equilibrium search runs on a fixed
//! ambiguity set, and each equilibrium is reported with two payoff notions:
//! the expected payoff under the mean payoffs and the negated worst-case
//! CVaR. Reference profiles (for example published values, usually rounded)
//! can be checked against the gap function, one pass/fail line per entry.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{equilibrium_gap, find_equilibria, SearchConfig};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::game::{expected_payoff, StrategyProfile};
use crate::inspection::{build_inspection_game, shape, InspectionParams};

/// Header of the equilibrium CSV.
pub const CSV_HEADER: &str = "eps1,eps2,x1_1,x2_1,payoff1,payoff2,gap,wc_payoff1,wc_payoff2";

/// Header of the reference-check CSV.
pub const REFERENCE_CSV_HEADER: &str =
    "label,eps1,eps2,x1_1,x2_1,tol,required,gap,passed,nearest_found";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRow {
    /// Stacked profile `(x^1, x^2)`.
    pub profile: Vec<f64>,
    /// Expected payoffs under the mean payoff tensor.
    pub payoff: [f64; 2],
    /// Negated worst-case CVaR of each player.
    pub worst_case_payoff: [f64; 2],
    pub gap: f64,
    pub certificate_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPointReport {
    pub eps: [f64; 2],
    pub equilibria: Vec<EquilibriumRow>,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub points: Vec<GridPointReport>,
    pub references: Vec<ReferenceCheck>,
}

/// A profile given by the first components `(x1_1, x2_1)` to be verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceEntry {
    #[serde(default)]
    pub label: String,
    pub eps: [f64; 2],
    pub tol: f64,
    /// Pairs `(x1_1, x2_1)`.
    pub profiles: Vec<[f64; 2]>,
    #[serde(default)]
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceCheck {
    pub label: String,
    pub eps: [f64; 2],
    pub first_components: [f64; 2],
    pub tol: f64,
    pub required: bool,
    pub gap: f64,
    pub passed: bool,
    /// Infinity-norm distance to the nearest equilibrium found at the same
    /// risk levels, when that grid point was run.
    pub nearest_found: Option<f64>,
}

impl ExperimentReport {
    pub fn row_count(&self) -> usize {
        self.points.iter().map(|p| p.equilibria.len()).sum()
    }

    /// One line per equilibrium, no runtime information.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for point in &self.points {
            for row in &point.equilibria {
                let fields = [
                    point.eps[0],
                    point.eps[1],
                    row.profile[0],
                    row.profile[2],
                    row.payoff[0],
                    row.payoff[1],
                    row.gap,
                    row.worst_case_payoff[0],
                    row.worst_case_payoff[1],
                ];
                out.push_str(
                    &fields
                        .iter()
                        .map(|&v| sig9(v))
                        .collect::<Vec<_>>()
                        .join(","),
                );
                out.push('\n');
            }
        }
        out
    }

    pub fn references_to_csv(&self) -> String {
        let mut out = String::from(REFERENCE_CSV_HEADER);
        out.push('\n');
        for r in &self.references {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                csv_text(&r.label),
                sig9(r.eps[0]),
                sig9(r.eps[1]),
                sig9(r.first_components[0]),
                sig9(r.first_components[1]),
                sig9(r.tol),
                r.required,
                sig9(r.gap),
                if r.passed { "pass" } else { "fail" },
                r.nearest_found.map(sig9).unwrap_or_default(),
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Profile `((a, 1 - a), (b, 1 - b))`.
pub fn profile_from_first_components(a: f64, b: f64) -> Result<StrategyProfile> {
    StrategyProfile::from_stacked(&shape(), &[a, 1.0 - a, b, 1.0 - b])
}

pub fn run_experiment(
    params: &InspectionParams,
    grid: &[[f64; 2]],
    config: &SearchConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    let mut points = Vec::with_capacity(grid.len());
    for &[e1, e2] in grid {
        let started = Instant::now();
        let game = build_inspection_game(&params.with_eps(e1, e2))?;
        let found = find_equilibria(&game.ambiguity, &game.risk, config)?;
        let mut equilibria = Vec::with_capacity(found.len());
        for eq in found {
            let report = equilibrium_gap(&game.ambiguity, &game.risk, &eq.profile)?;
            equilibria.push(EquilibriumRow {
                profile: eq.profile.stacked(),
                payoff: [
                    expected_payoff(&game.nominal, &eq.profile, 0)?,
                    expected_payoff(&game.nominal, &eq.profile, 1)?,
                ],
                worst_case_payoff: [-report.players[0].current, -report.players[1].current],
                gap: eq.gap,
                certificate_valid: eq.certificate.is_valid(),
            });
        }
        points.push(GridPointReport {
            eps: [e1, e2],
            equilibria,
            runtime_secs: started.elapsed().as_secs_f64(),
        });
    }
    Ok(ExperimentReport {
        points,
        references: Vec::new(),
    })
}

/// Verifies every reference profile at its own tolerance. Distances to the
/// equilibria in `report` are filled in where the risk levels match.
pub fn check_references(
    params: &InspectionParams,
    references: &[ReferenceEntry],
    report: Option<&ExperimentReport>,
) -> Result<Vec<ReferenceCheck>> {
    let mut out = Vec::new();
    for entry in references {
        let game = build_inspection_game(&params.with_eps(entry.eps[0], entry.eps[1]))?;
        let point = report.and_then(|r| r.points.iter().find(|p| p.eps == entry.eps));
        for &[a, b] in &entry.profiles {
            let profile = profile_from_first_components(a, b)?;
            let gap = equilibrium_gap(&game.ambiguity, &game.risk, &profile)?.total;
            let nearest_found = point.map(|p| {
                p.equilibria
                    .iter()
                    .map(|row| (row.profile[0] - a).abs().max((row.profile[2] - b).abs()))
                    .fold(f64::INFINITY, f64::min)
            });
            out.push(ReferenceCheck {
                label: entry.label.clone(),
                eps: entry.eps,
                first_components: [a, b],
                tol: entry.tol,
                required: entry.required,
                gap,
                passed: gap <= entry.tol,
                nearest_found,
            });
        }
    }
    Ok(out)
}

/// Experiment description read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub inspection: InspectionSection,
    #[serde(default)]
    pub search: SearchSection,
    pub grid: GridSection,
    #[serde(default)]
    pub reference: Vec<ReferenceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InspectionSection {
    pub wage: f64,
    pub g: [f64; 2],
    pub v: [f64; 2],
    pub h: [f64; 2],
    pub mad_cap: f64,
    /// Parameter-space mean `(g, v, h)`; midpoints when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<[f64; 3]>,
}

impl Default for InspectionSection {
    fn default() -> Self {
        let p = InspectionParams::default();
        Self {
            wage: p.wage,
            g: [p.g.0, p.g.1],
            v: [p.v.0, p.v.1],
            h: [p.h.0, p.h.1],
            mad_cap: p.mad_cap,
            mean: p.mean,
        }
    }
}

impl InspectionSection {
    pub fn params(&self) -> InspectionParams {
        InspectionParams {
            wage: self.wage,
            g: (self.g[0], self.g[1]),
            v: (self.v[0], self.v[1]),
            h: (self.h[0], self.h[1]),
            mad_cap: self.mad_cap,
            mean: self.mean,
            eps: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub dedupe_radius: f64,
    pub max_iterations: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        let c = SearchConfig::default();
        Self {
            restarts: c.restarts,
            seed: c.seed,
            tol: c.tol,
            dedupe_radius: c.dedupe_radius,
            max_iterations: c.max_iterations,
        }
    }
}

impl SearchSection {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            restarts: self.restarts,
            seed: self.seed,
            tol: self.tol,
            dedupe_radius: self.dedupe_radius,
            max_iterations: self.max_iterations,
        }
    }
}

pub fn parse_experiment_spec(text: &str) -> Result<ExperimentSpec> {
    toml::from_str(text).map_err(|e| Error::GameFile(e.to_string()))
}

/// Runs the grid and the reference checks of a spec file.
pub fn run_experiment_spec(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let params = spec.inspection.params();
    let mut report = run_experiment(&params, &spec.grid.points, &spec.search.config())?;
    report.references = check_references(&params, &spec.reference, Some(&report))?;
    Ok(report)
}

/// Writes `equilibria.csv`, `references.csv` and `report.json` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("equilibria.csv"), report.to_csv())?;
    std::fs::write(dir.join("references.csv"), report.references_to_csv())?;
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    Ok(())
}
