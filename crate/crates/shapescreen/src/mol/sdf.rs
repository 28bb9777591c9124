//! MDL SDF (V2000) reading and writing.
//!
//! The parser is multi-record, keeps data items (`> <KEY>` blocks) verbatim,
//! honors `M  CHG` property lines (which supersede the legacy atom-block
//! charge column), and rejects V3000 connection tables. Field extraction is
//! fixed-width first with a whitespace-token fallback, so both strictly
//! column-aligned files and loosely formatted ones parse.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use thiserror::Error;

use super::{Atom, Bond, BondOrder, MolError, Molecule};

#[derive(Debug, Error)]
pub enum SdfError {
    #[error("failed to read '{path}': {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("input contains no records")]
    Empty,
    #[error("record {record}: truncated before the counts line")]
    Truncated { record: usize },
    #[error("record {record}: V3000 connection tables are not supported")]
    V3000 { record: usize },
    #[error("record {record}: cannot parse counts line '{line}'")]
    BadCounts { record: usize, line: String },
    #[error("record {record}: cannot parse atom line '{line}'")]
    BadAtomLine { record: usize, line: String },
    #[error("record {record}: cannot parse bond line '{line}'")]
    BadBondLine { record: usize, line: String },
    #[error("record {record}: unsupported bond order code {code}")]
    BadBondOrder { record: usize, code: i64 },
    #[error("record {record}: bond {bond} references atom {atom} but the record declares {n_atoms} atoms")]
    DanglingBond {
        record: usize,
        bond: usize,
        atom: usize,
        n_atoms: usize,
    },
    #[error("record {record}: cannot parse charge property line '{line}'")]
    BadChargeLine { record: usize, line: String },
    #[error("record {record}: {source}")]
    InvalidMolecule { record: usize, source: MolError },
}

/// A record the lenient parser gave up on, with the reason it was skipped.
#[derive(Debug, Clone)]
pub struct SkippedRecord {
    pub record: usize,
    pub reason: String,
}

/// Result of parsing a multi-record SDF string.
///
/// In strict mode `skipped` is always empty: the first malformed record
/// aborts the parse. In lenient mode malformed records are skipped and
/// reported here so callers can count them.
#[derive(Debug, Default)]
pub struct SdfParseOutcome {
    pub molecules: Vec<Molecule>,
    pub skipped: Vec<SkippedRecord>,
}

/// Parses a multi-record V2000 SDF string.
///
/// Records are separated by `$$$$` lines; a final record without the
/// terminator is accepted. Empty (or all-blank) input is an error.
pub fn parse_sdf(input: &str, strict: bool) -> Result<SdfParseOutcome, SdfError> {
    let mut outcome = SdfParseOutcome::default();
    let mut record_lines: Vec<&str> = Vec::new();
    let mut record_index = 0usize;

    let flush = |lines: &mut Vec<&str>,
                     outcome: &mut SdfParseOutcome,
                     record_index: &mut usize|
     -> Result<(), SdfError> {
        if lines.iter().all(|l| l.trim().is_empty()) {
            lines.clear();
            return Ok(());
        }
        *record_index += 1;
        match parse_record(lines, *record_index) {
            Ok(mol) => outcome.molecules.push(mol),
            Err(err) if strict => {
                lines.clear();
                return Err(err);
            }
            Err(err) => outcome.skipped.push(SkippedRecord {
                record: *record_index,
                reason: err.to_string(),
            }),
        }
        lines.clear();
        Ok(())
    };

    for raw_line in input.lines() {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.trim_end() == "$$$$" {
            flush(&mut record_lines, &mut outcome, &mut record_index)?;
        } else {
            record_lines.push(line);
        }
    }
    flush(&mut record_lines, &mut outcome, &mut record_index)?;

    if record_index == 0 {
        return Err(SdfError::Empty);
    }
    Ok(outcome)
}

/// Reads and parses an SDF file from disk.
pub fn read_sdf_file(path: &Path, strict: bool) -> Result<SdfParseOutcome, SdfError> {
    let text = std::fs::read_to_string(path).map_err(|source| SdfError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sdf(&text, strict)
}

fn parse_record(lines: &[&str], record: usize) -> Result<Molecule, SdfError> {
    if lines.len() < 4 {
        return Err(SdfError::Truncated { record });
    }
    let name = {
        let raw = lines[0].trim();
        if raw.is_empty() {
            format!("record_{record}")
        } else {
            raw.to_string()
        }
    };

    let counts_line = lines[3];
    if counts_line.contains("V3000") {
        return Err(SdfError::V3000 { record });
    }
    let (n_atoms, n_bonds) = parse_counts(counts_line).ok_or_else(|| SdfError::BadCounts {
        record,
        line: counts_line.trim_end().to_string(),
    })?;

    let atom_end = 4 + n_atoms;
    let bond_end = atom_end + n_bonds;
    if lines.len() < bond_end {
        return Err(SdfError::Truncated { record });
    }

    let mut atoms = Vec::with_capacity(n_atoms);
    for line in &lines[4..atom_end] {
        let (position, element, charge_code) =
            parse_atom_line(line).ok_or_else(|| SdfError::BadAtomLine {
                record,
                line: line.trim_end().to_string(),
            })?;
        let formal_charge = legacy_charge(charge_code);
        atoms.push(Atom::new(&element, position, formal_charge));
    }

    let mut bonds = Vec::with_capacity(n_bonds);
    for (bond_idx, line) in lines[atom_end..bond_end].iter().enumerate() {
        let (a_raw, b_raw, order_code) =
            parse_bond_line(line).ok_or_else(|| SdfError::BadBondLine {
                record,
                line: line.trim_end().to_string(),
            })?;
        for raw in [a_raw, b_raw] {
            if raw == 0 || raw > n_atoms {
                return Err(SdfError::DanglingBond {
                    record,
                    bond: bond_idx,
                    atom: raw,
                    n_atoms,
                });
            }
        }
        let order = match order_code {
            1 => BondOrder::Single,
            2 => BondOrder::Double,
            3 => BondOrder::Triple,
            4 => BondOrder::Aromatic,
            code => return Err(SdfError::BadBondOrder { record, code }),
        };
        bonds.push(Bond {
            atom_a: a_raw - 1,
            atom_b: b_raw - 1,
            order,
        });
    }

    // Properties block: `M  CHG` lines supersede every legacy charge-column
    // value, per the format definition.
    let mut chg_pairs: Vec<(usize, i32)> = Vec::new();
    let mut saw_chg = false;
    let mut cursor = bond_end;
    while cursor < lines.len() {
        let line = lines[cursor];
        cursor += 1;
        if line.starts_with("M  END") || line.trim_end() == "M END" {
            break;
        }
        if line.starts_with("M  CHG") {
            saw_chg = true;
            parse_chg_line(line, n_atoms, &mut chg_pairs).ok_or_else(|| {
                SdfError::BadChargeLine {
                    record,
                    line: line.trim_end().to_string(),
                }
            })?;
        }
    }
    if saw_chg {
        for atom in &mut atoms {
            atom.formal_charge = 0;
        }
        for (idx, charge) in chg_pairs {
            atoms[idx].formal_charge = charge;
        }
    }

    let properties = parse_data_items(&lines[cursor.min(lines.len())..]);

    Molecule::new(name, atoms, bonds, properties)
        .map_err(|source| SdfError::InvalidMolecule { record, source })
}

fn parse_counts(line: &str) -> Option<(usize, usize)> {
    let fixed = || -> Option<(usize, usize)> {
        let a = line.get(0..3)?.trim().parse().ok()?;
        let b = line.get(3..6)?.trim().parse().ok()?;
        Some((a, b))
    };
    fixed().or_else(|| {
        let mut tokens = line.split_whitespace();
        let a = tokens.next()?.parse().ok()?;
        let b = tokens.next()?.parse().ok()?;
        Some((a, b))
    })
}

fn parse_atom_line(line: &str) -> Option<(Vector3<f64>, String, i32)> {
    let fixed = || -> Option<(Vector3<f64>, String, i32)> {
        let x: f64 = line.get(0..10)?.trim().parse().ok()?;
        let y: f64 = line.get(10..20)?.trim().parse().ok()?;
        let z: f64 = line.get(20..30)?.trim().parse().ok()?;
        let element = line.get(31..34)?.trim();
        if element.is_empty() {
            return None;
        }
        let charge_code = line
            .get(36..39)
            .and_then(|s| s.trim().parse::<i32>().ok())
            .unwrap_or(0);
        Some((Vector3::new(x, y, z), element.to_string(), charge_code))
    };
    fixed().or_else(|| {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 4 {
            return None;
        }
        let x: f64 = tokens[0].parse().ok()?;
        let y: f64 = tokens[1].parse().ok()?;
        let z: f64 = tokens[2].parse().ok()?;
        let element = tokens[3].to_string();
        let charge_code = tokens
            .get(5)
            .and_then(|s| s.parse::<i32>().ok())
            .unwrap_or(0);
        Some((Vector3::new(x, y, z), element, charge_code))
    })
}

fn parse_bond_line(line: &str) -> Option<(usize, usize, i64)> {
    let fixed = || -> Option<(usize, usize, i64)> {
        let a = line.get(0..3)?.trim().parse().ok()?;
        let b = line.get(3..6)?.trim().parse().ok()?;
        let order = line.get(6..9)?.trim().parse().ok()?;
        Some((a, b, order))
    };
    fixed().or_else(|| {
        let mut tokens = line.split_whitespace();
        let a = tokens.next()?.parse().ok()?;
        let b = tokens.next()?.parse().ok()?;
        let order = tokens.next()?.parse().ok()?;
        Some((a, b, order))
    })
}

/// Legacy atom-block charge column: 1..=3 map to +3..+1, 5..=7 to -1..-3,
/// 4 (doublet radical) and everything else to 0.
fn legacy_charge(code: i32) -> i32 {
    match code {
        1 => 3,
        2 => 2,
        3 => 1,
        5 => -1,
        6 => -2,
        7 => -3,
        _ => 0,
    }
}

fn parse_chg_line(line: &str, n_atoms: usize, pairs: &mut Vec<(usize, i32)>) -> Option<()> {
    let rest = line.get(6..)?;
    let mut tokens = rest.split_whitespace();
    let count: usize = tokens.next()?.parse().ok()?;
    for _ in 0..count {
        let atom_one_based: usize = tokens.next()?.parse().ok()?;
        let charge: i32 = tokens.next()?.parse().ok()?;
        if atom_one_based == 0 || atom_one_based > n_atoms {
            return None;
        }
        pairs.push((atom_one_based - 1, charge));
    }
    Some(())
}

/// Parses `> <KEY>` data items; multi-line values are joined with `\n`.
fn parse_data_items(lines: &[&str]) -> BTreeMap<String, String> {
    let mut properties = BTreeMap::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        i += 1;
        if !line.starts_with('>') {
            continue;
        }
        let key = match extract_data_key(line) {
            Some(k) => k,
            None => continue,
        };
        let mut value_lines: Vec<&str> = Vec::new();
        while i < lines.len() {
            let v = lines[i];
            if v.trim().is_empty() || v.starts_with('>') {
                break;
            }
            value_lines.push(v);
            i += 1;
        }
        properties.insert(key, value_lines.join("\n"));
    }
    properties
}

fn extract_data_key(line: &str) -> Option<String> {
    let open = line.find('<')?;
    let close = line[open + 1..].find('>')?;
    let key = line[open + 1..open + 1 + close].trim();
    if key.is_empty() {
        None
    } else {
        Some(key.to_string())
    }
}

/// Serializes molecules as a multi-record V2000 SDF string.
///
/// Coordinates are written with four decimals, formal charges via `M  CHG`
/// lines, and retained data items as `> <KEY>` blocks, so a parse of the
/// output reproduces the input up to coordinate rounding.
pub fn write_sdf(molecules: &[Molecule]) -> String {
    let mut out = String::new();
    for mol in molecules {
        writeln!(out, "{}", mol.name).unwrap();
        writeln!(out, "  shapescreen 3D").unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000",
            mol.atoms.len(),
            mol.bonds.len()
        )
        .unwrap();
        for atom in &mol.atoms {
            writeln!(
                out,
                "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0",
                atom.position.x, atom.position.y, atom.position.z, atom.element
            )
            .unwrap();
        }
        for bond in &mol.bonds {
            writeln!(
                out,
                "{:>3}{:>3}{:>3}  0",
                bond.atom_a + 1,
                bond.atom_b + 1,
                bond.order.to_sdf_code()
            )
            .unwrap();
        }
        let charged: Vec<(usize, i32)> = mol
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.formal_charge != 0)
            .map(|(i, a)| (i, a.formal_charge))
            .collect();
        for chunk in charged.chunks(8) {
            write!(out, "M  CHG{:>3}", chunk.len()).unwrap();
            for (idx, charge) in chunk {
                write!(out, "{:>4}{:>4}", idx + 1, charge).unwrap();
            }
            writeln!(out).unwrap();
        }
        writeln!(out, "M  END").unwrap();
        for (key, value) in &mol.properties {
            writeln!(out, "> <{key}>").unwrap();
            writeln!(out, "{value}").unwrap();
            writeln!(out).unwrap();
        }
        writeln!(out, "$$$$").unwrap();
    }
    out
}

/// Writes molecules to an SDF file on disk.
pub fn write_sdf_file(path: &Path, molecules: &[Molecule]) -> Result<(), SdfError> {
    std::fs::write(path, write_sdf(molecules)).map_err(|source| SdfError::Io {
        path: path.to_path_buf(),
        source,
    })
}
