//! Molecule model, SDF I/O, van der Waals radii, and dataset manifests.

mod manifest;
mod sdf;

pub use manifest::{load_manifest, DatasetManifest, ManifestError};
pub use sdf::{parse_sdf, read_sdf_file, write_sdf, write_sdf_file, SdfError, SdfParseOutcome};

use std::collections::BTreeMap;

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MolError {
    #[error("molecule '{0}' has no heavy atoms")]
    NoHeavyAtoms(String),
    #[error("molecule '{name}': bond {bond} references atom {atom} but only {n_atoms} atoms exist")]
    BondOutOfRange {
        name: String,
        bond: usize,
        atom: usize,
        n_atoms: usize,
    },
    #[error("molecule '{name}': bond {bond} connects atom {atom} to itself")]
    SelfBond {
        name: String,
        bond: usize,
        atom: usize,
    },
    #[error("molecule '{name}': atom {atom} has a non-finite coordinate")]
    NonFiniteCoordinate { name: String, atom: usize },
}

/// Bondi-style van der Waals radii in Å, used to parametrize shape Gaussians.
///
/// Values follow Bondi (1964) with a handful of common extensions; elements
/// missing from the table fall back to [`DEFAULT_VDW_RADIUS`].
const VDW_RADII: &[(&str, f64)] = &[
    ("H", 1.20),
    ("D", 1.20),
    ("T", 1.20),
    ("He", 1.40),
    ("Li", 1.82),
    ("B", 1.92),
    ("C", 1.70),
    ("N", 1.55),
    ("O", 1.52),
    ("F", 1.47),
    ("Ne", 1.54),
    ("Na", 2.27),
    ("Mg", 1.73),
    ("Si", 2.10),
    ("P", 1.80),
    ("S", 1.80),
    ("Cl", 1.75),
    ("Ar", 1.88),
    ("K", 2.75),
    ("Ni", 1.63),
    ("Cu", 1.40),
    ("Zn", 1.39),
    ("Ga", 1.87),
    ("As", 1.85),
    ("Se", 1.90),
    ("Br", 1.85),
    ("Kr", 2.02),
    ("Pd", 1.63),
    ("Ag", 1.72),
    ("Cd", 1.58),
    ("In", 1.93),
    ("Sn", 2.17),
    ("Te", 2.06),
    ("I", 1.98),
    ("Xe", 2.16),
    ("Pt", 1.75),
    ("Au", 1.66),
    ("Hg", 1.55),
    ("Tl", 1.96),
    ("Pb", 2.02),
];

/// Fallback radius for elements not in the table.
pub const DEFAULT_VDW_RADIUS: f64 = 1.70;

/// Tabulated vdW radius for an element symbol (case-normalized), with the
/// documented 1.70 Å fallback for unknown elements.
pub fn vdw_radius_for(element: &str) -> f64 {
    let normalized = normalize_element(element);
    VDW_RADII
        .iter()
        .find(|(sym, _)| *sym == normalized)
        .map(|(_, r)| *r)
        .unwrap_or(DEFAULT_VDW_RADIUS)
}

fn normalize_element(element: &str) -> String {
    let trimmed = element.trim();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(first) => {
            let mut s = first.to_ascii_uppercase().to_string();
            s.extend(chars.map(|c| c.to_ascii_lowercase()));
            s
        }
        None => String::new(),
    }
}

fn is_hydrogen_symbol(element: &str) -> bool {
    matches!(normalize_element(element).as_str(), "H" | "D" | "T")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: String,
    pub position: Vector3<f64>,
    pub formal_charge: i32,
    pub is_hydrogen: bool,
    /// van der Waals radius in Å; always > 0.
    pub vdw_radius: f64,
}

impl Atom {
    pub fn new(element: &str, position: Vector3<f64>, formal_charge: i32) -> Self {
        Atom {
            element: element.trim().to_string(),
            position,
            formal_charge,
            is_hydrogen: is_hydrogen_symbol(element),
            vdw_radius: vdw_radius_for(element),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence sum; aromatic bonds count 1.5.
    pub fn valence(&self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }

    fn to_sdf_code(self) -> usize {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub atom_a: usize,
    pub atom_b: usize,
    pub order: BondOrder,
}

/// A rigid 3D molecule: ordered atoms, bonds, and the raw SDF property block
/// (retained so downstream stages can look up annotations such as
/// `COLOR_ATOMS`).
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub name: String,
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub properties: BTreeMap<String, String>,
}

impl Molecule {
    /// Validates the structural invariants: at least one heavy atom, finite
    /// coordinates, and in-range non-degenerate bonds.
    pub fn new(
        name: String,
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        properties: BTreeMap<String, String>,
    ) -> Result<Self, MolError> {
        if !atoms.iter().any(|a| !a.is_hydrogen) {
            return Err(MolError::NoHeavyAtoms(name));
        }
        for (i, atom) in atoms.iter().enumerate() {
            if !atom.position.iter().all(|c| c.is_finite()) {
                return Err(MolError::NonFiniteCoordinate { name, atom: i });
            }
        }
        for (i, bond) in bonds.iter().enumerate() {
            for atom in [bond.atom_a, bond.atom_b] {
                if atom >= atoms.len() {
                    return Err(MolError::BondOutOfRange {
                        name,
                        bond: i,
                        atom,
                        n_atoms: atoms.len(),
                    });
                }
            }
            if bond.atom_a == bond.atom_b {
                return Err(MolError::SelfBond {
                    name,
                    bond: i,
                    atom: bond.atom_a,
                });
            }
        }
        Ok(Molecule {
            name,
            atoms,
            bonds,
            properties,
        })
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| !a.is_hydrogen).count()
    }

    /// Adjacency list over all atoms, neighbor indices sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for bond in &self.bonds {
            adj[bond.atom_a].push(bond.atom_b);
            adj[bond.atom_b].push(bond.atom_a);
        }
        for neighbors in &mut adj {
            neighbors.sort_unstable();
        }
        adj
    }

    /// Axis-aligned bounding box over all atom positions.
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for atom in &self.atoms {
            for i in 0..3 {
                min[i] = min[i].min(atom.position[i]);
                max[i] = max[i].max(atom.position[i]);
            }
        }
        (min, max)
    }
}

/// Re-applies the tabulated radii to every atom. The SDF parser assigns radii
/// on construction; this exists for molecules assembled by hand.
pub fn assign_radii(molecule: &mut Molecule) {
    for atom in &mut molecule.atoms {
        atom.vdw_radius = vdw_radius_for(&atom.element);
    }
}
