//! Pharmacophore "color" typing: marks chemically interesting spots on a
//! molecule with typed dummy atoms, which the overlay stage treats as
//! Gaussians that only overlap with color atoms of the same type.
//!
//! The typing rules are a deterministic heuristic over elements, bonds,
//! formal charges, rings, and carbon skeletons. Molecules can bypass the
//! heuristics entirely with a `COLOR_ATOMS` SDF data item giving explicit
//! `type x y z` lines.

mod rings;

pub use rings::perceive_rings;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mol::Molecule;
use crate::overlay::gaussian_width;

/// Gaussian amplitude shared by all color atoms.
pub const COLOR_AMPLITUDE: f64 = 2.70;
/// Effective radius (Å) shared by all color atoms.
pub const COLOR_RADIUS: f64 = 1.0;

/// The six pharmacophore color types, in their stable feature-layout order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ColorType {
    Donor,
    Acceptor,
    Cation,
    Anion,
    Ring,
    Hydrophobe,
}

impl ColorType {
    pub const ALL: [ColorType; 6] = [
        ColorType::Donor,
        ColorType::Acceptor,
        ColorType::Cation,
        ColorType::Anion,
        ColorType::Ring,
        ColorType::Hydrophobe,
    ];

    /// Stable 0..5 encoding used by feature layouts.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorType::Donor => "Donor",
            ColorType::Acceptor => "Acceptor",
            ColorType::Cation => "Cation",
            ColorType::Anion => "Anion",
            ColorType::Ring => "Ring",
            ColorType::Hydrophobe => "Hydrophobe",
        }
    }

    /// Case-insensitive parse of a type token.
    pub fn parse(token: &str) -> Option<ColorType> {
        ColorType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(token.trim()))
    }
}

/// A typed pharmacophore dummy atom with its Gaussian parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorAtom {
    pub color_type: ColorType,
    pub position: Vector3<f64>,
    /// Gaussian amplitude (dimensionless), > 0.
    pub amplitude: f64,
    /// Gaussian width (Å⁻²), > 0.
    pub width: f64,
}

impl ColorAtom {
    pub fn new(color_type: ColorType, position: Vector3<f64>) -> Self {
        ColorAtom {
            color_type,
            position,
            amplitude: COLOR_AMPLITUDE,
            width: gaussian_width(COLOR_AMPLITUDE, COLOR_RADIUS),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ColorError {
    #[error("molecule '{molecule}': unknown color type token '{token}' in COLOR_ATOMS")]
    UnknownType { molecule: String, token: String },
    #[error("molecule '{molecule}': non-numeric coordinate '{token}' in COLOR_ATOMS")]
    BadCoordinate { molecule: String, token: String },
    #[error("molecule '{molecule}': malformed COLOR_ATOMS line '{line}' (expected `type x y z`)")]
    BadLine { molecule: String, line: String },
}

/// SDF data item that overrides heuristic typing when present.
pub const COLOR_ATOMS_PROPERTY: &str = "COLOR_ATOMS";

/// Color atoms for a molecule: the `COLOR_ATOMS` annotation when present,
/// the heuristic typing rules otherwise.
pub fn color_atoms(molecule: &Molecule) -> Result<Vec<ColorAtom>, ColorError> {
    match load_annotated_color_atoms(molecule)? {
        Some(annotated) => Ok(annotated),
        None => Ok(assign_color_atoms(molecule)),
    }
}

/// Parses the `COLOR_ATOMS` data item (`type x y z` per line); `Ok(None)`
/// when the molecule carries no annotation.
pub fn load_annotated_color_atoms(
    molecule: &Molecule,
) -> Result<Option<Vec<ColorAtom>>, ColorError> {
    let Some(raw) = molecule.properties.get(COLOR_ATOMS_PROPERTY) else {
        return Ok(None);
    };
    let mut atoms = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(ColorError::BadLine {
                molecule: molecule.name.clone(),
                line: line.to_string(),
            });
        }
        let color_type = ColorType::parse(tokens[0]).ok_or_else(|| ColorError::UnknownType {
            molecule: molecule.name.clone(),
            token: tokens[0].to_string(),
        })?;
        let mut coords = [0.0f64; 3];
        for (slot, token) in coords.iter_mut().zip(&tokens[1..]) {
            let value: f64 = token.parse().map_err(|_| ColorError::BadCoordinate {
                molecule: molecule.name.clone(),
                token: token.to_string(),
            })?;
            if !value.is_finite() {
                return Err(ColorError::BadCoordinate {
                    molecule: molecule.name.clone(),
                    token: token.to_string(),
                });
            }
            *slot = value;
        }
        atoms.push(ColorAtom::new(
            color_type,
            Vector3::new(coords[0], coords[1], coords[2]),
        ));
    }
    Ok(Some(atoms))
}

/// Serializes color atoms into the `COLOR_ATOMS` annotation format.
pub fn format_color_atoms(atoms: &[ColorAtom]) -> String {
    atoms
        .iter()
        .map(|a| {
            format!(
                "{} {:.4} {:.4} {:.4}",
                a.color_type.name(),
                a.position.x,
                a.position.y,
                a.position.z
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Maximum bonding capacity used by the acceptor rule's lone-pair check;
/// an N or O whose bond-order sum (aromatic = 1.5) is below this still has
/// lone-pair capacity.
fn max_bonding(element: &str) -> Option<f64> {
    if element.eq_ignore_ascii_case("N") {
        Some(4.0)
    } else if element.eq_ignore_ascii_case("O") {
        Some(3.0)
    } else {
        None
    }
}

/// Applies the heuristic typing rules. The result is ordered by
/// (color type, contributing atom indices) and is deterministic.
///
/// Rules:
/// - Donor: N or O bonded to at least one hydrogen.
/// - Acceptor: N or O with no positive formal charge and a bond-order sum
///   below its maximum bonding capacity (N: 4, O: 3; aromatic bonds count
///   1.5), i.e. remaining lone-pair capacity.
/// - Cation: any atom with formal charge > 0; also the central carbon of a
///   guanidinium/amidinium group (C bonded to ≥2 N with ≥1 C=N double bond)
///   unless an adjacent N already carries the positive charge.
/// - Anion: one color atom at the centroid of each carboxylate (C with
///   exactly two terminal O) or sulfonate (S with ≥3 terminal O) group;
///   any other atom with formal charge < 0.
/// - Ring: centroid of every SSSR ring.
/// - Hydrophobe: centroid of each connected group of ≥3 carbons where no
///   member touches a heteroatom.
pub fn assign_color_atoms(molecule: &Molecule) -> Vec<ColorAtom> {
    let n = molecule.atoms.len();
    let adj = molecule.adjacency();
    let is = |i: usize, symbol: &str| molecule.atoms[i].element.eq_ignore_ascii_case(symbol);
    let valence_sum = |i: usize| -> f64 {
        molecule
            .bonds
            .iter()
            .filter(|b| b.atom_a == i || b.atom_b == i)
            .map(|b| b.order.valence())
            .sum()
    };
    let centroid = |members: &[usize]| -> Vector3<f64> {
        members
            .iter()
            .map(|&i| molecule.atoms[i].position)
            .sum::<Vector3<f64>>()
            / members.len() as f64
    };

    // (type, sorted contributing atoms, position)
    let mut candidates: Vec<(ColorType, Vec<usize>, Vector3<f64>)> = Vec::new();

    // Donor and Acceptor (per N/O atom).
    for (i, neighbors) in adj.iter().enumerate() {
        if !(is(i, "N") || is(i, "O")) {
            continue;
        }
        let atom = &molecule.atoms[i];
        if neighbors.iter().any(|&j| molecule.atoms[j].is_hydrogen) {
            candidates.push((ColorType::Donor, vec![i], atom.position));
        }
        if let Some(capacity) = max_bonding(&atom.element) {
            if atom.formal_charge <= 0 && valence_sum(i) < capacity {
                candidates.push((ColorType::Acceptor, vec![i], atom.position));
            }
        }
    }

    // Cation: explicit positive charges, then guanidinium/amidinium carbons.
    for i in 0..n {
        if molecule.atoms[i].formal_charge > 0 {
            candidates.push((ColorType::Cation, vec![i], molecule.atoms[i].position));
        }
    }
    for (i, neighbors) in adj.iter().enumerate() {
        if !is(i, "C") {
            continue;
        }
        let n_neighbors: Vec<usize> = neighbors.iter().copied().filter(|&j| is(j, "N")).collect();
        if n_neighbors.len() < 2 {
            continue;
        }
        let has_cn_double = molecule.bonds.iter().any(|b| {
            b.order == crate::mol::BondOrder::Double
                && ((b.atom_a == i && is(b.atom_b, "N")) || (b.atom_b == i && is(b.atom_a, "N")))
        });
        let neighbor_already_charged = n_neighbors
            .iter()
            .any(|&j| molecule.atoms[j].formal_charge > 0);
        if has_cn_double && !neighbor_already_charged && molecule.atoms[i].formal_charge <= 0 {
            candidates.push((ColorType::Cation, vec![i], molecule.atoms[i].position));
        }
    }

    // Anion: acid groups first (consuming their oxygens), then bare charges.
    let mut consumed_by_group = vec![false; n];
    for i in 0..n {
        let terminal_oxygens: Vec<usize> = adj[i]
            .iter()
            .copied()
            .filter(|&j| is(j, "O") && adj[j].len() == 1)
            .collect();
        let is_acid_group = (is(i, "C") && terminal_oxygens.len() == 2)
            || (is(i, "S") && terminal_oxygens.len() >= 3);
        if is_acid_group {
            let mut members = vec![i];
            members.extend(&terminal_oxygens);
            members.sort_unstable();
            for &j in &terminal_oxygens {
                consumed_by_group[j] = true;
            }
            let position = centroid(&members);
            candidates.push((ColorType::Anion, members, position));
        }
    }
    for (i, (atom, &consumed)) in molecule.atoms.iter().zip(&consumed_by_group).enumerate() {
        if atom.formal_charge < 0 && !consumed {
            candidates.push((ColorType::Anion, vec![i], atom.position));
        }
    }

    // Ring centroids.
    for ring in perceive_rings(molecule) {
        let position = centroid(&ring);
        candidates.push((ColorType::Ring, ring, position));
    }

    // Hydrophobe: connected groups of carbons untouched by heteroatoms.
    let eligible: Vec<bool> = (0..n)
        .map(|i| {
            is(i, "C")
                && adj[i]
                    .iter()
                    .all(|&j| is(j, "C") || molecule.atoms[j].is_hydrogen)
        })
        .collect();
    let mut visited = vec![false; n];
    for start in 0..n {
        if !eligible[start] || visited[start] {
            continue;
        }
        let mut members = Vec::new();
        let mut stack = vec![start];
        visited[start] = true;
        while let Some(u) = stack.pop() {
            members.push(u);
            for &v in &adj[u] {
                if eligible[v] && !visited[v] {
                    visited[v] = true;
                    stack.push(v);
                }
            }
        }
        if members.len() >= 3 {
            members.sort_unstable();
            let position = centroid(&members);
            candidates.push((ColorType::Hydrophobe, members, position));
        }
    }

    candidates.sort_by(|a, b| (a.0.index(), &a.1).cmp(&(b.0.index(), &b.1)));
    candidates.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    candidates
        .into_iter()
        .map(|(color_type, _, position)| ColorAtom::new(color_type, position))
        .collect()
}
