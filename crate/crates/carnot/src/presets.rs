//! Built-in group catalog and the JSON group-specification format.
//!
//! Preset strings: `heisenberg:n`, `engel`, `goursat:N`, `superengel`,
//! `free:m:s`, `freequot:s`. A JSON file path can be used anywhere a preset
//! string is accepted.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{BracketTable, LieVector, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::scalar::{rat, Rat};

/// Endpoint functional known to be one-sided on endpoints of horizontal
/// paths with controls near a specific constant control. Used as probe
/// evidence when the decision procedures return no verdict.
#[derive(Clone, Copy)]
pub struct Obstruction {
    /// Horizontal basis index of the constant control this guards.
    pub anchor: usize,
    pub name: &'static str,
    /// Sign convention: nonnegative on endpoint clouds around the anchor.
    pub eval: fn(&[f64]) -> f64,
}

impl std::fmt::Debug for Obstruction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Obstruction")
            .field("anchor", &self.anchor)
            .field("name", &self.name)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct PresetGroup {
    pub algebra: StratifiedAlgebra,
    pub obstructions: Vec<Obstruction>,
}

impl From<StratifiedAlgebra> for PresetGroup {
    fn from(algebra: StratifiedAlgebra) -> Self {
        PresetGroup {
            algebra,
            obstructions: Vec::new(),
        }
    }
}

/// Basis cap for free-algebra enumeration.
pub const BASIS_CAP: usize = 5000;

fn heisenberg(n: usize) -> Result<StratifiedAlgebra> {
    if n == 0 {
        return Err(Error::InvalidArgument("heisenberg:n needs n >= 1".into()));
    }
    let basis_names = if n == 1 {
        vec!["X".into(), "Y".into(), "Z".into()]
    } else {
        let mut v: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
        v.extend((1..=n).map(|i| format!("Y{i}")));
        v.push("Z".into());
        v
    };
    let entries = (0..n).map(|i| (i, n + i, vec![(2 * n, rat(1))])).collect();
    StratifiedAlgebra::from_table(BracketTable {
        name: format!("heisenberg:{n}"),
        layer_dims: vec![2 * n, 1],
        basis_names,
        entries,
    })
}

/// Chain group of topological dimension `n` and step `n - 1`: generators
/// X, Y with [X,Y] = W1 and [Y, Wi] = W_{i+1}. Dimension 4 is the Engel
/// group.
fn goursat(n: usize) -> Result<StratifiedAlgebra> {
    if n < 3 {
        return Err(Error::InvalidArgument("goursat:N needs N >= 3".into()));
    }
    let mut basis_names = vec!["X".to_string(), "Y".to_string()];
    basis_names.extend((1..=n - 2).map(|i| format!("W{i}")));
    let mut layer_dims = vec![2];
    layer_dims.extend(std::iter::repeat(1).take(n - 2));
    let mut entries = vec![(0, 1, vec![(2, rat(1))])];
    for i in 1..n - 2 {
        // [Y, Wi] = W_{i+1}; Wi sits at index i + 1.
        entries.push((1, i + 1, vec![(i + 2, rat(1))]));
    }
    StratifiedAlgebra::from_table(BracketTable {
        name: format!("goursat:{n}"),
        layer_dims,
        basis_names,
        entries,
    })
}

fn engel() -> Result<StratifiedAlgebra> {
    let a = goursat(4)?;
    StratifiedAlgebra::from_table(BracketTable {
        name: "engel".into(),
        layer_dims: a.layer_dims().to_vec(),
        basis_names: a.basis_names().to_vec(),
        entries: a
            .bracket_entries()
            .into_iter()
            .map(|(i, j, e)| (i, j, e.to_vec()))
            .collect(),
    })
}

/// Dimension 6, layers (3, 2, 1): X, Y, Z horizontal, [X,Z] = Z1,
/// [Y,Z] = Z2, [Y,Z2] = Z3.
fn superengel() -> Result<StratifiedAlgebra> {
    StratifiedAlgebra::from_table(BracketTable {
        name: "superengel".into(),
        layer_dims: vec![3, 2, 1],
        basis_names: vec![
            "X".into(),
            "Y".into(),
            "Z".into(),
            "Z1".into(),
            "Z2".into(),
            "Z3".into(),
        ],
        entries: vec![
            (0, 2, vec![(3, rat(1))]),
            (1, 2, vec![(4, rat(1))]),
            (1, 4, vec![(5, rat(1))]),
        ],
    })
}

/// Quotient of the free algebra on `s` generators of step `s` by all
/// brackets in which some generator appears more than once. The surviving
/// basis consists of the multilinear bracket monomials.
fn free_quotient(s: usize) -> Result<StratifiedAlgebra> {
    let free = StratifiedAlgebra::free(s, s, BASIS_CAP)?;
    let n = free.dim();
    // Letter multiplicities of each Lyndon basis element, recovered from the
    // bracket names; a basis vector lies in the ideal generated by x_i
    // exactly when x_i occurs in its word.
    let occurrences: Vec<Vec<usize>> = (0..s)
        .map(|letter| {
            let pat = format!("x{}", letter + 1);
            (0..n)
                .filter(|&i| {
                    let name = &free.basis_names()[i];
                    name.split(|c| c == '[' || c == ']' || c == ',')
                        .any(|part| part == pat)
                })
                .collect()
        })
        .collect();
    let mut relations: Vec<LieVector<Rat>> = Vec::new();
    for letter in 0..s {
        let members = &occurrences[letter];
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a..] {
                let mut v = LieVector::<Rat>::zero(n);
                let mut nonzero = false;
                for (k, c) in free.bracket_basis(i.min(j), i.max(j)) {
                    v.0[k] = c;
                    nonzero = true;
                }
                if nonzero {
                    relations.push(v);
                }
            }
        }
    }
    free.quotient(&format!("freequot:{s}"), &relations)
}

// Obstruction functionals in exponential coordinates of the first kind.
// Each vanishes at the identity, is nonnegative on endpoints of horizontal
// paths whose control stays close to the anchor's constant control, and its
// zero set pins the endpoint to the anchor's one-parameter line.

/// Coordinates (X, Y, W1, W2); anchor is the constant control X.
fn engel_obstruction(a: &[f64]) -> f64 {
    -a[3] - a[1] * a[2] / 2.0 + a[0] * a[1] * a[1] / 6.0
}

/// Coordinates (X, Y, Z, Z1, Z2, Z3); anchor is the constant control Z.
fn superengel_obstruction(a: &[f64]) -> f64 {
    2.0 * a[5] + a[1] * a[4] + a[1] * a[1] * a[2] / 3.0
}

/// Resolve a preset string to a group and its registered endpoint
/// functionals.
pub fn preset(spec: &str) -> Result<PresetGroup> {
    let parts: Vec<&str> = spec.split(':').collect();
    let arg = |i: usize| -> Result<usize> {
        parts
            .get(i)
            .and_then(|p| p.parse::<usize>().ok())
            .ok_or_else(|| Error::UnknownPreset(spec.to_string()))
    };
    match (parts[0], parts.len()) {
        ("heisenberg", 2) => Ok(heisenberg(arg(1)?)?.into()),
        ("engel", 1) => Ok(PresetGroup {
            algebra: engel()?,
            obstructions: vec![Obstruction {
                anchor: 0,
                name: "engel-vertical-excess",
                eval: engel_obstruction,
            }],
        }),
        ("goursat", 2) => Ok(goursat(arg(1)?)?.into()),
        ("superengel", 1) => Ok(PresetGroup {
            algebra: superengel()?,
            obstructions: vec![Obstruction {
                anchor: 2,
                name: "superengel-vertical-excess",
                eval: superengel_obstruction,
            }],
        }),
        ("free", 3) => Ok(StratifiedAlgebra::free(arg(1)?, arg(2)?, BASIS_CAP)?.into()),
        ("freequot", 2) => Ok(free_quotient(arg(1)?)?.into()),
        _ => Err(Error::UnknownPreset(spec.to_string())),
    }
}

/// Resolve either a preset string or a path to a JSON group file.
pub fn resolve_group(spec: &str) -> Result<PresetGroup> {
    match preset(spec) {
        Ok(g) => Ok(g),
        Err(Error::UnknownPreset(_)) if std::path::Path::new(spec).exists() => {
            let text = std::fs::read_to_string(spec)?;
            Ok(from_json_spec(&text)?.into())
        }
        Err(e) => Err(e),
    }
}

/// User-facing JSON group description: a free nilpotent algebra presented
/// by generator count, step, and homogeneous relations to quotient by.
#[derive(Debug, Serialize, Deserialize)]
struct GroupSpecJson {
    name: String,
    generators: usize,
    step: usize,
    /// Sparse homogeneous vectors in the free Lyndon basis; keys are basis
    /// names like `"[x1,x2]"` or numeric indices, values are integers or
    /// `"p/q"` strings.
    #[serde(default)]
    relations: Vec<BTreeMap<String, serde_json::Value>>,
}

fn parse_coeff(v: &serde_json::Value) -> Result<Rat> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(rat(i))
            } else {
                Err(Error::GroupSpec(format!(
                    "coefficient {n} is not an integer; use a \"p/q\" string"
                )))
            }
        }
        serde_json::Value::String(s) => Rat::from_str(s)
            .map_err(|_| Error::GroupSpec(format!("bad rational coefficient {s:?}"))),
        other => Err(Error::GroupSpec(format!("bad coefficient {other}"))),
    }
}

/// Parse a JSON group description into a validated algebra.
pub fn from_json_spec(text: &str) -> Result<StratifiedAlgebra> {
    let spec: GroupSpecJson = serde_json::from_str(text)?;
    let free = StratifiedAlgebra::free(spec.generators, spec.step, BASIS_CAP)?;
    let n = free.dim();
    let mut relations = Vec::new();
    for rel in &spec.relations {
        let mut v = LieVector::<Rat>::zero(n);
        for (key, value) in rel {
            let idx = match key.parse::<usize>() {
                Ok(i) if i < n => i,
                _ => free.basis_index(key).ok_or_else(|| {
                    Error::GroupSpec(format!("unknown basis element {key:?}"))
                })?,
            };
            v.0[idx] = parse_coeff(value)?;
        }
        relations.push(v);
    }
    if relations.is_empty() {
        // Rebuild under the requested name.
        return StratifiedAlgebra::from_table(BracketTable {
            name: spec.name,
            layer_dims: free.layer_dims().to_vec(),
            basis_names: free.basis_names().to_vec(),
            entries: free
                .bracket_entries()
                .into_iter()
                .map(|(i, j, e)| (i, j, e.to_vec()))
                .collect(),
        });
    }
    free.quotient(&spec.name, &relations)
}

/// On-disk cache form of a computed bracket table.
#[derive(Debug, Serialize, Deserialize)]
struct TableJson {
    name: String,
    layers: Vec<usize>,
    basis: Vec<String>,
    brackets: Vec<(usize, usize, Vec<(usize, String)>)>,
}

pub fn table_to_json(a: &StratifiedAlgebra) -> String {
    let spec = TableJson {
        name: a.name().to_string(),
        layers: a.layer_dims().to_vec(),
        basis: a.basis_names().to_vec(),
        brackets: a
            .bracket_entries()
            .into_iter()
            .map(|(i, j, entry)| {
                (
                    i,
                    j,
                    entry.iter().map(|(k, c)| (*k, c.to_string())).collect(),
                )
            })
            .collect(),
    };
    serde_json::to_string(&spec).expect("bracket table serialization")
}

pub fn table_from_json(text: &str) -> Result<StratifiedAlgebra> {
    let spec: TableJson = serde_json::from_str(text)?;
    let entries = spec
        .brackets
        .into_iter()
        .map(|(i, j, entry)| {
            let sparse = entry
                .into_iter()
                .map(|(k, c)| {
                    Rat::from_str(&c)
                        .map(|c| (k, c))
                        .map_err(|_| Error::GroupSpec(format!("bad coefficient {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((i, j, sparse))
        })
        .collect::<Result<Vec<_>>>()?;
    StratifiedAlgebra::from_table(BracketTable {
        name: spec.name,
        layer_dims: spec.layers,
        basis_names: spec.basis,
        entries,
    })
}
