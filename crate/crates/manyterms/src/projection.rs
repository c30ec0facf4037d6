//! Factorization of the basis matrix and matrix-free application of the
//! annihilator M = I - P(P'P)^{-1}P'.
//!
//! Columns are scaled to unit Euclidean norm before factorization; M is
//! invariant to column scaling and raw high-degree monomials on (-1,1) are
//! badly scaled. The factorization is Householder QR with column pivoting,
//! so the numerical rank decision is made on the best remaining column at
//! each step (relative to that column's own original norm, because of the
//! scaling). The workspace keeps only the orthonormal factor Q: every
//! downstream quantity is computed from products with Q, never from a dense
//! n x n matrix.

use crate::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Default relative rank tolerance for the factorization.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Default floor for the leverage-complement diagnostic: minimum M_ii below
/// this flags a design where some observation is numerically interpolated.
pub const DEFAULT_LEVERAGE_FLOOR: f64 = 1e-3;

/// What to do when the numerical rank falls short of the column count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    /// Fail with [`Error::RankDeficient`].
    Strict,
    /// Keep the detected-rank subspace and report the dropped columns.
    Permissive,
}

/// Householder reflectors from one QR sweep. `vectors[j]` has length n - j
/// and acts on rows j..n; `norms2[j]` holds its squared norm (zero marks an
/// identity step).
struct Reflectors {
    vectors: Vec<Vec<f64>>,
    norms2: Vec<f64>,
}

impl Reflectors {
    /// Applies H_j = I - 2 v v'/(v'v) to the trailing slice of one column.
    /// `tail` must be the column's rows j..n.
    fn apply(&self, j: usize, tail: &mut [f64]) {
        let vn2 = self.norms2[j];
        if vn2 <= 0.0 {
            return;
        }
        let v = &self.vectors[j];
        let mut dot = 0.0;
        for (vt, ct) in v.iter().zip(tail.iter()) {
            dot += vt * ct;
        }
        let coef = 2.0 * dot / vn2;
        for (vt, ct) in v.iter().zip(tail.iter_mut()) {
            *ct -= coef * vt;
        }
    }

    /// Builds the reflector that maps rows j..n of `tail` onto a multiple of
    /// e_1, records it, and returns the new leading entry (the R diagonal).
    fn push_from(&mut self, tail: &[f64]) -> f64 {
        let mut v = tail.to_vec();
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let alpha = if v[0] >= 0.0 { -nrm } else { nrm };
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|x| x * x).sum();
        self.vectors.push(v);
        self.norms2.push(vn2);
        alpha
    }
}

/// The factorized projection: an orthonormal basis of the retained column
/// span, sufficient to apply M and read off its diagonal.
#[derive(Debug, Clone)]
pub struct ProjectionWorkspace {
    ortho: Array2<f64>,
    dropped: Vec<usize>,
    tol: f64,
}

/// Leverage complements M_ii = 1 - sum_k Q_ik^2, with the diagnostic flag
/// raised when the minimum falls below the requested floor.
#[derive(Debug, Clone)]
pub struct LeverageComplements {
    pub m_diag: Array1<f64>,
    pub min: f64,
    pub floor: f64,
    pub flagged: bool,
}

impl ProjectionWorkspace {
    pub fn n(&self) -> usize {
        self.ortho.nrows()
    }

    /// Retained rank (the K of the annihilator when the design is full rank).
    pub fn k(&self) -> usize {
        self.ortho.ncols()
    }

    /// Orthonormal factor spanning the retained columns.
    pub fn ortho(&self) -> ArrayView2<'_, f64> {
        self.ortho.view()
    }

    /// Original indices of columns dropped by a permissive factorization.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// MA = A - Q(Q'A), never forming M densely.
    pub fn apply_annihilator(&self, a: ArrayView2<f64>) -> Result<Array2<f64>> {
        if a.nrows() != self.n() {
            return Err(Error::Dimension(format!(
                "annihilator expects {} rows, got {}",
                self.n(),
                a.nrows()
            )));
        }
        let qta = self.ortho.t().dot(&a);
        Ok(&a - &self.ortho.dot(&qta))
    }

    /// Vector form of [`ProjectionWorkspace::apply_annihilator`].
    pub fn apply_annihilator_vec(&self, a: ArrayView1<f64>) -> Result<Array1<f64>> {
        if a.len() != self.n() {
            return Err(Error::Dimension(format!(
                "annihilator expects length {}, got {}",
                self.n(),
                a.len()
            )));
        }
        let qta = self.ortho.t().dot(&a);
        Ok(&a - &self.ortho.dot(&qta))
    }

    /// Leverage complements with the default diagnostic floor.
    pub fn leverage_complements(&self) -> LeverageComplements {
        self.leverage_complements_with_floor(DEFAULT_LEVERAGE_FLOOR)
    }

    /// M_ii = 1 - row sum of squares of Q, clamped at zero against round-off.
    pub fn leverage_complements_with_floor(&self, floor: f64) -> LeverageComplements {
        let n = self.n();
        let mut m_diag = Array1::<f64>::zeros(n);
        for i in 0..n {
            let s: f64 = self.ortho.row(i).iter().map(|q| q * q).sum();
            m_diag[i] = (1.0 - s).max(0.0);
        }
        let min = m_diag.iter().cloned().fold(f64::INFINITY, f64::min);
        LeverageComplements {
            m_diag,
            min,
            floor,
            flagged: min < floor,
        }
    }

    /// The off-diagonal bilinear form sum_{i != j} M_ij a_i b_j, computed as
    /// a'(Mb) - sum_i M_ii a_i b_i.
    pub fn offdiag_cross(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
        if a.len() != self.n() || b.len() != self.n() {
            return Err(Error::Dimension(format!(
                "offdiag_cross expects two length-{} vectors",
                self.n()
            )));
        }
        let mb = self.apply_annihilator_vec(b)?;
        let full = a.dot(&mb);
        let lev = self.leverage_complements_with_floor(0.0);
        let mut diag = 0.0;
        for i in 0..self.n() {
            diag += lev.m_diag[i] * a[i] * b[i];
        }
        Ok(full - diag)
    }
}

/// Copies a matrix into per-column contiguous storage, scaling each column
/// to unit Euclidean norm. Zero columns are left as they are; the sweep then
/// classifies them as dependent.
fn scaled_columns(p: ArrayView2<f64>, kmax: usize) -> Vec<Vec<f64>> {
    let n = p.nrows();
    (0..kmax)
        .map(|c| {
            let mut col: Vec<f64> = Vec::with_capacity(n);
            col.extend(p.column(c).iter());
            let nrm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 0.0 {
                for x in col.iter_mut() {
                    *x /= nrm;
                }
            }
            col
        })
        .collect()
}

/// Rank-revealing factorization of P with column pivoting.
///
/// `tol` is the relative rank tolerance (default [`DEFAULT_RANK_TOL`]): a
/// column is declared dependent when its residual against the span of the
/// columns accepted so far drops below `tol` times its own norm. In strict
/// mode any deficiency is an error; in permissive mode the workspace keeps
/// the detected-rank subspace and records which columns were dropped.
pub fn factorize(
    p: ArrayView2<f64>,
    tol: Option<f64>,
    mode: RankMode,
) -> Result<ProjectionWorkspace> {
    let n = p.nrows();
    let k = p.ncols();
    if k == 0 {
        return Err(Error::Dimension("basis has no columns".into()));
    }
    if n <= k {
        return Err(Error::Dimension(format!(
            "need more rows than basis columns: n={n}, K={k}"
        )));
    }
    let tol = tol.unwrap_or(DEFAULT_RANK_TOL);
    let mut cols = scaled_columns(p, k);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut reflectors = Reflectors {
        vectors: Vec::with_capacity(k),
        norms2: Vec::with_capacity(k),
    };
    let mut rank = k;
    for j in 0..k {
        // Exact trailing-column norms each step: the cost is of the same
        // order as the reflector applications and avoids downdating drift.
        let mut best = j;
        let mut best_norm2 = -1.0;
        for (c, col) in cols.iter().enumerate().skip(j) {
            let norm2: f64 = col[j..].iter().map(|x| x * x).sum();
            if norm2 > best_norm2 {
                best_norm2 = norm2;
                best = c;
            }
        }
        if best_norm2.sqrt() < tol {
            rank = j;
            break;
        }
        if best != j {
            cols.swap(j, best);
            perm.swap(j, best);
        }
        let (head, tail) = cols.split_at_mut(j + 1);
        let pivot = &mut head[j];
        let alpha = reflectors.push_from(&pivot[j..]);
        pivot[j] = alpha;
        for x in pivot[j + 1..].iter_mut() {
            *x = 0.0;
        }
        for col in tail.iter_mut() {
            reflectors.apply(j, &mut col[j..]);
        }
    }

    let dropped: Vec<usize> = {
        let mut d: Vec<usize> = perm[rank..].to_vec();
        d.sort_unstable();
        d
    };
    if rank < k && mode == RankMode::Strict {
        return Err(Error::RankDeficient {
            rank,
            cols: k,
            dropped,
        });
    }
    if rank == 0 {
        return Err(Error::RankDeficient {
            rank: 0,
            cols: k,
            dropped,
        });
    }
    let ortho = accumulate_q(n, rank, &reflectors);
    Ok(ProjectionWorkspace {
        ortho,
        dropped,
        tol,
    })
}

/// Unpivoted factorization of the leading columns, returning one workspace
/// per requested prefix length. Because Householder QR processes columns
/// left to right, the first k columns of the accumulated Q span the first k
/// input columns for every k, so a single sweep serves a whole nested
/// ladder. Any rank deficiency is an error; the ladder path is strict.
pub fn factorize_prefixes(
    p: ArrayView2<f64>,
    ks: &[usize],
    tol: Option<f64>,
) -> Result<Vec<ProjectionWorkspace>> {
    let n = p.nrows();
    if ks.is_empty() {
        return Err(Error::Config("no prefix lengths requested".into()));
    }
    if ks[0] == 0 {
        return Err(Error::Config("prefix lengths start at 1".into()));
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "prefix lengths must be strictly increasing".into(),
        ));
    }
    let kmax = *ks.last().unwrap();
    if kmax > p.ncols() {
        return Err(Error::Dimension(format!(
            "prefix length {kmax} exceeds {} columns",
            p.ncols()
        )));
    }
    if n <= kmax {
        return Err(Error::Dimension(format!(
            "need more rows than basis columns: n={n}, K={kmax}"
        )));
    }
    let tol = tol.unwrap_or(DEFAULT_RANK_TOL);
    let mut cols = scaled_columns(p, kmax);
    let mut reflectors = Reflectors {
        vectors: Vec::with_capacity(kmax),
        norms2: Vec::with_capacity(kmax),
    };
    for j in 0..kmax {
        let (head, tail) = cols.split_at_mut(j + 1);
        let pivot = &mut head[j];
        let nrm = pivot[j..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm < tol {
            return Err(Error::RankDeficient {
                rank: j,
                cols: kmax,
                dropped: vec![j],
            });
        }
        let alpha = reflectors.push_from(&pivot[j..]);
        pivot[j] = alpha;
        for x in pivot[j + 1..].iter_mut() {
            *x = 0.0;
        }
        for col in tail.iter_mut() {
            reflectors.apply(j, &mut col[j..]);
        }
    }
    let q = accumulate_q(n, kmax, &reflectors);
    let out = ks
        .iter()
        .map(|&kk| ProjectionWorkspace {
            ortho: q.slice(ndarray::s![.., ..kk]).to_owned(),
            dropped: Vec::new(),
            tol,
        })
        .collect();
    Ok(out)
}

/// Backward accumulation of the first `rank` columns of Q from the reflector
/// sweep: Q equals H_0 H_1 ... H_{rank-1} applied to the leading identity
/// block, and H_j only needs to touch columns j and beyond.
fn accumulate_q(n: usize, rank: usize, reflectors: &Reflectors) -> Array2<f64> {
    let mut qcols: Vec<Vec<f64>> = (0..rank)
        .map(|c| {
            let mut col = vec![0.0; n];
            col[c] = 1.0;
            col
        })
        .collect();
    for j in (0..rank).rev() {
        for col in qcols.iter_mut().skip(j) {
            reflectors.apply(j, &mut col[j..]);
        }
    }
    let mut q = Array2::<f64>::zeros((n, rank));
    for (c, col) in qcols.iter().enumerate() {
        for (i, &val) in col.iter().enumerate() {
            q[[i, c]] = val;
        }
    }
    q
}
