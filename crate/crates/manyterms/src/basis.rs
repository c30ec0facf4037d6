//! Power-series approximating basis with interaction-order truncation.
//!
//! A basis term is a monomial exponent vector over the d_z covariates. The
//! ladder grows the term list in a fixed graded order: constant and linear
//! terms first, then for each total degree the pure powers z_l^d followed by
//! the mixed monomials of that degree, with mixed terms only included while
//! the total degree stays at or below [`MIXED_DEGREE_CAP`]. Every ladder step
//! is a prefix of the next, so a single evaluated matrix serves all steps.

use crate::{Error, Result};
use ndarray::{Array2, ArrayView2};

/// Largest total degree at which mixed (interaction) monomials are included.
/// Pure powers continue past this cap up to the requested maximum degree.
pub const MIXED_DEGREE_CAP: u32 = 5;

/// An ordered list of monomial exponent vectors over d_z covariates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    d_z: usize,
    terms: Vec<Vec<u32>>,
}

impl BasisSpec {
    /// Builds a spec from raw exponent vectors, enforcing the structural
    /// invariants: consistent arity, a leading constant term, no duplicates.
    pub fn from_terms(d_z: usize, terms: Vec<Vec<u32>>) -> Result<Self> {
        if d_z == 0 {
            return Err(Error::Config("basis needs at least one covariate".into()));
        }
        if terms.is_empty() {
            return Err(Error::Config("basis spec has no terms".into()));
        }
        if terms.iter().any(|t| t.len() != d_z) {
            return Err(Error::Config(format!(
                "every exponent vector must have length {d_z}"
            )));
        }
        if terms[0].iter().any(|&e| e != 0) {
            return Err(Error::Config(
                "the first basis term must be the constant (all-zero exponents)".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if !seen.insert(t.clone()) {
                return Err(Error::Config(format!("duplicate basis term {t:?}")));
            }
        }
        Ok(Self { d_z, terms })
    }

    pub fn d_z(&self) -> usize {
        self.d_z
    }

    /// Number of basis columns K.
    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[Vec<u32>] {
        &self.terms
    }

    /// The spec made of the first k terms. Valid for any 1 <= k <= K because
    /// the term order is graded and starts at the constant.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.terms.len() {
            return Err(Error::Config(format!(
                "prefix length {k} outside 1..={}",
                self.terms.len()
            )));
        }
        Ok(Self {
            d_z: self.d_z,
            terms: self.terms[..k].to_vec(),
        })
    }

    /// Text form: one term per line, space-separated exponents.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            let line: Vec<String> = t.iter().map(|e| e.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text form produced by [`BasisSpec::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut d_z = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut term = Vec::new();
            for tok in line.split_whitespace() {
                let e: u32 = tok.parse().map_err(|_| {
                    Error::Config(format!("line {}: bad exponent {tok:?}", lineno + 1))
                })?;
                term.push(e);
            }
            match d_z {
                None => d_z = Some(term.len()),
                Some(d) if d != term.len() => {
                    return Err(Error::Config(format!(
                        "line {}: expected {d} exponents, found {}",
                        lineno + 1,
                        term.len()
                    )))
                }
                _ => {}
            }
            terms.push(term);
        }
        let d_z = d_z.ok_or_else(|| Error::Config("empty basis spec text".into()))?;
        Self::from_terms(d_z, terms)
    }
}

/// All exponent vectors over `d_z` variables with the given total degree, in
/// descending lexicographic order (so z_1-heavy terms come first, matching
/// the conventional display order).
fn degree_block(d_z: usize, total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; d_z];
    fn rec(pos: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == current.len() {
            current[pos] = remaining;
            out.push(current.clone());
            current[pos] = 0;
            return;
        }
        for e in (0..=remaining).rev() {
            current[pos] = e;
            rec(pos + 1, remaining - e, current, out);
        }
        current[pos] = 0;
    }
    rec(0, total, &mut current, &mut out);
    out
}

fn nonzero_count(term: &[u32]) -> usize {
    term.iter().filter(|&&e| e != 0).count()
}

/// The nested ladder of basis specs: constant plus linear terms, then per
/// degree d = 2..=max_degree a pure-powers step and, while d stays at or
/// below [`MIXED_DEGREE_CAP`], a mixed-monomials step. Panics if `d_z` or
/// `max_degree` is zero (documented preconditions).
pub fn ladder(d_z: usize, max_degree: usize) -> Vec<BasisSpec> {
    assert!(d_z >= 1, "ladder requires d_z >= 1");
    assert!(max_degree >= 1, "ladder requires max_degree >= 1");
    let mut terms: Vec<Vec<u32>> = Vec::new();
    terms.push(vec![0; d_z]);
    terms.extend(degree_block(d_z, 1));
    let mut specs = vec![BasisSpec {
        d_z,
        terms: terms.clone(),
    }];
    for d in 2..=max_degree as u32 {
        // Pure powers z_l^d for every variable.
        for l in 0..d_z {
            let mut t = vec![0u32; d_z];
            t[l] = d;
            terms.push(t);
        }
        specs.push(BasisSpec {
            d_z,
            terms: terms.clone(),
        });
        if d <= MIXED_DEGREE_CAP && d_z >= 2 {
            let mixed: Vec<Vec<u32>> = degree_block(d_z, d)
                .into_iter()
                .filter(|t| nonzero_count(t) >= 2)
                .collect();
            if !mixed.is_empty() {
                terms.extend(mixed);
                specs.push(BasisSpec {
                    d_z,
                    terms: terms.clone(),
                });
            }
        }
    }
    specs
}

/// An evaluated basis: column j holds term j evaluated on the rows of Z.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub values: Array2<f64>,
    pub spec: BasisSpec,
}

/// Evaluates the basis on an n x d_z design. Each entry is the left-to-right
/// product of z_l repeated e_l times with l ascending, so output bits are a
/// pure function of the input bits (no transcendental calls, no reordering).
pub fn build_basis(z: ArrayView2<f64>, spec: &BasisSpec) -> Result<BasisMatrix> {
    if z.ncols() != spec.d_z() {
        return Err(Error::Dimension(format!(
            "Z has {} columns but the spec expects {}",
            z.ncols(),
            spec.d_z()
        )));
    }
    let n = z.nrows();
    let k = spec.k();
    let mut values = Array2::<f64>::zeros((n, k));
    for i in 0..n {
        let row = z.row(i);
        for (j, term) in spec.terms().iter().enumerate() {
            let mut acc = 1.0f64;
            for (l, &e) in term.iter().enumerate() {
                for _ in 0..e {
                    acc *= row[l];
                }
            }
            values[[i, j]] = acc;
        }
    }
    Ok(BasisMatrix {
        values,
        spec: spec.clone(),
    })
}
