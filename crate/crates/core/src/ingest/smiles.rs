use std::collections::BTreeSet;

use crate::error::{Error, Result};

// Symbols that may appear inside brackets. Two-letter symbols are tried
// before their one-letter prefixes.
const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

// Aromatic forms allowed inside brackets.
const BRACKET_AROMATIC: &[(&str, &str)] = &[
    ("se", "Se"),
    ("as", "As"),
    ("te", "Te"),
    ("b", "B"),
    ("c", "C"),
    ("n", "N"),
    ("o", "O"),
    ("p", "P"),
    ("s", "S"),
];

fn is_element(sym: &str) -> bool {
    ELEMENTS.contains(&sym)
}

/// Collect the element symbols of all atoms in a SMILES string.
///
/// Only atoms are reported: implicit or bracket hydrogen counts, charges,
/// isotopes, chirality, bonds, ring closures and branches are skipped. A
/// bare `[H]` or `[2H]` atom does count as hydrogen.
pub fn scan_elements(smiles: &str) -> Result<BTreeSet<String>> {
    if smiles.is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty structure string".into(),
        });
    }
    let bytes = smiles.as_bytes();
    let mut out = BTreeSet::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'[' => {
                let close = smiles[i + 1..].find(']').ok_or(Error::Parse {
                    offset: i,
                    message: "unclosed bracket atom".into(),
                })?;
                let inner = &smiles[i + 1..i + 1 + close];
                out.insert(bracket_element(inner, i + 1)?);
                i += close + 2;
            }
            b'C' if bytes.get(i + 1) == Some(&b'l') => {
                out.insert("Cl".into());
                i += 2;
            }
            b'B' if bytes.get(i + 1) == Some(&b'r') => {
                out.insert("Br".into());
                i += 2;
            }
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                out.insert((c as char).to_string());
                i += 1;
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                out.insert((c.to_ascii_uppercase() as char).to_string());
                i += 1;
            }
            b'0'..=b'9' | b'%' | b'(' | b')' | b'-' | b'=' | b'#' | b'$' | b':' | b'/' | b'\\'
            | b'.' | b'*' | b'@' | b'+' => i += 1,
            _ => {
                return Err(Error::Parse {
                    offset: i,
                    message: format!("unexpected character `{}`", smiles[i..].chars().next().unwrap()),
                })
            }
        }
    }
    Ok(out)
}

fn bracket_element(inner: &str, offset: usize) -> Result<String> {
    // skip isotope digits
    let start = inner
        .find(|c: char| !c.is_ascii_digit())
        .ok_or(Error::Parse {
            offset,
            message: "bracket atom without element".into(),
        })?;
    let rest = &inner[start..];
    let first = rest.as_bytes()[0];
    if first.is_ascii_uppercase() {
        if rest.len() >= 2 && rest.as_bytes()[1].is_ascii_lowercase() && is_element(&rest[..2]) {
            return Ok(rest[..2].to_string());
        }
        if is_element(&rest[..1]) {
            return Ok(rest[..1].to_string());
        }
    } else if first.is_ascii_lowercase() {
        for (form, sym) in BRACKET_AROMATIC {
            if rest.starts_with(form) {
                return Ok((*sym).to_string());
            }
        }
    }
    Err(Error::Parse {
        offset: offset + start,
        message: format!("unknown element in bracket atom `[{inner}]`"),
    })
}
