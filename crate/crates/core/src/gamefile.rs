//! TOML game files.
//!
//! ```toml
//! [game]
//! actions = [2, 2]
//!
//! [risk]
//! eps = [1.0, 0.5]
//!
//! [ambiguity]
//! kind = "explicit"        # or "affine_box"
//! mad_cap = 4.0
//! mean = [...]             # payoff-space vector; "midpoint" allowed for affine_box
//! w = [[...], ...]         # explicit only
//! h = [...]                # explicit only
//!
//! # affine_box only: vec(P) = map * t + offset, t in the parameter box
//! [[ambiguity.parameters]]
//! name = "g"
//! lo = 8.0
//! hi = 12.0
//!
//! [nominal]                # optional
//! payoffs = [...]
//! ```
//!
//! Payoff vectors are player-major with joint actions in row-major order
//! (last player's action varies fastest). Matrices are lists of rows.
//! Emitting a parsed file and parsing it again gives back the same value.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambiguity::{
    build_support_from_box, AffineBoxUncertainty, AmbiguitySet, PolyhedralSupport,
};
use crate::error::{Error, Result};
use crate::game::{GameShape, PayoffTensor};
use crate::risk::RiskProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub game: GameSection,
    pub risk: RiskSection,
    pub ambiguity: AmbiguitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal: Option<NominalSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub actions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSection {
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalSection {
    pub payoffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbiguitySpec {
    Explicit {
        mad_cap: f64,
        mean: Vec<f64>,
        w: Vec<Vec<f64>>,
        h: Vec<f64>,
    },
    AffineBox {
        mad_cap: f64,
        mean: MeanSpec,
        offset: Vec<f64>,
        map: Vec<Vec<f64>>,
        parameters: Vec<ParameterSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Vector(Vec<f64>),
    Keyword(MeanKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKeyword {
    /// Image of the parameter-box midpoint.
    Midpoint,
}

/// A game file turned into solver inputs.
#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub ambiguity: AmbiguitySet,
    pub risk: RiskProfile,
    pub nominal: Option<PayoffTensor>,
    pub uncertainty: Option<AffineBoxUncertainty>,
}

pub fn parse_game_file(text: &str) -> Result<GameFile> {
    toml::from_str(text).map_err(|e| Error::GameFile(e.to_string()))
}

pub fn emit_game_file(file: &GameFile) -> Result<String> {
    toml::to_string(file).map_err(|e| Error::GameFile(e.to_string()))
}

pub fn read_game_file(path: &Path) -> Result<GameFile> {
    let text = std::fs::read_to_string(path)?;
    parse_game_file(&text)
}

fn matrix(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::GameFile(format!(
            "{what}: row {} has {} entries, expected {ncols}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl GameFile {
    /// Builds the ambiguity set and risk profile. Dimension errors are
    /// reported here; semantic checks belong to [`crate::ambiguity::validate`].
    pub fn load(&self) -> Result<LoadedGame> {
        let shape = GameShape::new(self.game.actions.clone())?;
        let n = shape.payoff_len();
        if self.risk.eps.len() != shape.num_players() {
            return Err(Error::GameFile(format!(
                "risk.eps has {} entries for {} players",
                self.risk.eps.len(),
                shape.num_players()
            )));
        }
        let risk = RiskProfile::new(self.risk.eps.clone())?;
        let (ambiguity, uncertainty) = match &self.ambiguity {
            AmbiguitySpec::Explicit {
                mad_cap,
                mean,
                w,
                h,
            } => {
                let support = PolyhedralSupport::new(
                    matrix(w, n, "ambiguity.w")?,
                    DVector::from_vec(h.clone()),
                )?;
                let f = AmbiguitySet::new(
                    shape.clone(),
                    support,
                    DVector::from_vec(mean.clone()),
                    *mad_cap,
                )?;
                (f, None)
            }
            AmbiguitySpec::AffineBox {
                mad_cap,
                mean,
                offset,
                map,
                parameters,
            } => {
                if map.len() != n {
                    return Err(Error::GameFile(format!(
                        "ambiguity.map has {} rows, expected {n}",
                        map.len()
                    )));
                }
                let u = AffineBoxUncertainty::new(
                    parameters.iter().map(|p| p.name.clone()).collect(),
                    parameters.iter().map(|p| p.lo).collect(),
                    parameters.iter().map(|p| p.hi).collect(),
                    matrix(map, parameters.len(), "ambiguity.map")?,
                    DVector::from_vec(offset.clone()),
                )?;
                let support = build_support_from_box(&u)?;
                let m = match mean {
                    MeanSpec::Keyword(MeanKeyword::Midpoint) => u.image(&u.midpoint()),
                    MeanSpec::Vector(v) => v.clone(),
                };
                let f = AmbiguitySet::new(shape.clone(), support, DVector::from_vec(m), *mad_cap)?;
                (f, Some(u))
            }
        };
        let nominal = match &self.nominal {
            Some(section) => Some(PayoffTensor::from_vec(shape, section.payoffs.clone())?),
            None => None,
        };
        Ok(LoadedGame {
            ambiguity,
            risk,
            nominal,
            uncertainty,
        })
    }

    /// The canonical explicit form of an ambiguity set.
    pub fn from_explicit(
        f: &AmbiguitySet,
        risk: &RiskProfile,
        nominal: Option<&PayoffTensor>,
    ) -> Self {
        let w = &f.support.w;
        Self {
            game: GameSection {
                actions: f.shape().action_counts().to_vec(),
            },
            risk: RiskSection {
                eps: risk.levels().to_vec(),
            },
            ambiguity: AmbiguitySpec::Explicit {
                mad_cap: f.mad_cap,
                mean: f.mean.iter().copied().collect(),
                w: (0..w.nrows())
                    .map(|i| w.row(i).iter().copied().collect())
                    .collect(),
                h: f.support.h.iter().copied().collect(),
            },
            nominal: nominal.map(|p| NominalSection {
                payoffs: p.vec().to_vec(),
            }),
        }
    }

    /// The affine-box form, with the mean given by the parameter midpoint.
    pub fn from_affine_box(
        u: &AffineBoxUncertainty,
        mad_cap: f64,
        shape: &GameShape,
        risk: &RiskProfile,
    ) -> Self {
        Self {
            game: GameSection {
                actions: shape.action_counts().to_vec(),
            },
            risk: RiskSection {
                eps: risk.levels().to_vec(),
            },
            ambiguity: AmbiguitySpec::AffineBox {
                mad_cap,
                mean: MeanSpec::Keyword(MeanKeyword::Midpoint),
                offset: u.offset.iter().copied().collect(),
                map: (0..u.map.nrows())
                    .map(|i| u.map.row(i).iter().copied().collect())
                    .collect(),
                parameters: (0..u.num_params())
                    .map(|k| ParameterSpec {
                        name: u.names[k].clone(),
                        lo: u.lo[k],
                        hi: u.hi[k],
                    })
                    .collect(),
            },
            nominal: None,
        }
    }
}

pub fn load_game(path: &Path) -> Result<LoadedGame> {
    read_game_file(path)?.load()
}
