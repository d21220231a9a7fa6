//! Exact diagonalization in a truncated Fock basis.
//!
//! Independent of every G-function code path: the Hamiltonian is assembled in
//! the rotated qubit basis `|1,1⟩, |1,−1⟩, |−1,1⟩, |−1,−1⟩` (index `4n + s`)
//! and diagonalized with a Householder tridiagonalization followed by
//! implicit QL.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Parity};

/// Largest dense dimension accepted.
pub const MAX_DIM: usize = 4096;
/// Default photon truncation.
pub const DEFAULT_N: usize = 200;

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "row {i} has the wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.set(i, j, v);
        self.set(j, i, v);
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max(libm::fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// The rotated Hamiltonian truncated at `n_photon_max` photons.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedHamiltonian {
    pub dim: usize,
    pub matrix: Matrix,
    pub n_photon_max: usize,
    pub params: ModelParams,
}

/// Even and odd blocks in the interleaved `(a_0, b_0, a_1, b_1, …)` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ParityBlocks {
    pub even: Matrix,
    pub odd: Matrix,
    /// Largest matrix element between the two sectors.
    pub cross_max: f64,
}

impl ParityBlocks {
    pub fn block(&self, parity: Parity) -> &Matrix {
        match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        return Err(Error::TooLarge { dim, max: MAX_DIM });
    }
    Ok(())
}

pub fn build_hamiltonian(p: &ModelParams, n: usize) -> Result<TruncatedHamiltonian> {
    if n < 1 {
        return Err(Error::Truncation("oracle needs at least one photon"));
    }
    let dim = 4 * (n + 1);
    check_dim(dim)?;
    let cp = p.couplings();
    let (g, gp) = (cp.g_sum, cp.g_diff);
    let photon = [g, gp, -gp, -g];
    let mut m = Matrix::zeros(dim);
    for k in 0..=n {
        let o = 4 * k;
        for s in 0..4 {
            m.set(o + s, o + s, k as f64);
        }
        m.set_sym(o, o + 1, -p.delta2);
        m.set_sym(o, o + 2, -p.delta1);
        m.set_sym(o + 1, o + 3, -p.delta1);
        m.set_sym(o + 2, o + 3, -p.delta2);
        if k < n {
            let r = libm::sqrt((k + 1) as f64);
            for (s, c) in photon.iter().enumerate() {
                m.set_sym(o + s, o + 4 + s, c * r);
            }
        }
    }
    Ok(TruncatedHamiltonian {
        dim,
        matrix: m,
        n_photon_max: n,
        params: *p,
    })
}

/// Parity-adapted vectors `(x + p(−1)^n y)/√2` as `(row, coeff)` pairs:
/// `a_n` lives on `(s0, s3)`, `b_n` on `(s1, s2)`.
fn basis(n: usize, parity: Parity) -> Vec<[(usize, f64); 2]> {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(2 * (n + 1));
    for k in 0..=n {
        let sign = parity.sign() * if k % 2 == 0 { 1.0 } else { -1.0 };
        let o = 4 * k;
        out.push([(o, h), (o + 3, sign * h)]);
        out.push([(o + 1, h), (o + 2, sign * h)]);
    }
    out
}

fn project(m: &Matrix, left: &[[(usize, f64); 2]], right: &[[(usize, f64); 2]]) -> Matrix {
    // Only square blocks are needed; `right` may belong to the other sector.
    let mut out = Matrix::zeros(left.len());
    for (i, u) in left.iter().enumerate() {
        for (j, v) in right.iter().enumerate() {
            let mut s = 0.0;
            for &(r, cu) in u {
                for &(c, cv) in v {
                    s += cu * cv * m.get(r, c);
                }
            }
            out.set(i, j, s);
        }
    }
    out
}

/// Change of basis to the parity-adapted combinations.
pub fn parity_blocks(h: &TruncatedHamiltonian) -> ParityBlocks {
    let n = h.n_photon_max;
    let be = basis(n, Parity::Even);
    let bo = basis(n, Parity::Odd);
    let mut even = project(&h.matrix, &be, &be);
    let mut odd = project(&h.matrix, &bo, &bo);
    let cross = project(&h.matrix, &be, &bo);
    let cross_max = cross.data.iter().fold(0.0f64, |a, x| a.max(libm::fabs(*x)));
    // Remove rounding asymmetry from the projection.
    for b in [&mut even, &mut odd] {
        for i in 0..b.n {
            for j in 0..i {
                let v = 0.5 * (b.get(i, j) + b.get(j, i));
                b.set_sym(i, j, v);
            }
        }
    }
    ParityBlocks { even, odd, cross_max }
}

/// The parity block written down directly:
/// `[[n + gX, −c_n], [−c_n, n + g′X]]` with `c_n = Δ2 ± Δ1(−1)^n`.
pub fn parity_block(p: &ModelParams, parity: Parity, n: usize) -> Result<Matrix> {
    if n < 1 {
        return Err(Error::Truncation("oracle needs at least one photon"));
    }
    let dim = 2 * (n + 1);
    check_dim(dim)?;
    let cp = p.couplings();
    let mut m = Matrix::zeros(dim);
    for k in 0..=n {
        let (a, b) = (2 * k, 2 * k + 1);
        m.set(a, a, k as f64);
        m.set(b, b, k as f64);
        m.set_sym(a, b, -parity.bracket(p, k));
        if k < n {
            let r = libm::sqrt((k + 1) as f64);
            m.set_sym(a, a + 2, cp.g_sum * r);
            m.set_sym(b, b + 2, cp.g_diff * r);
        }
    }
    Ok(m)
}

/// Eigenvalues in ascending order.
pub fn eigen_spectrum(m: &Matrix) -> Result<Vec<f64>> {
    symmetric_eigen(m, false).map(|(d, _)| d)
}

/// Eigenvalues ascending, with eigenvectors as the columns of the returned
/// matrix.
pub fn eigen_decomposition(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    symmetric_eigen(m, true)
}

/// `‖Mv − λv‖` for column `k` of `vectors`.
pub fn residual(m: &Matrix, lambda: f64, vectors: &Matrix, k: usize) -> f64 {
    let v: Vec<f64> = (0..m.n).map(|i| vectors.get(i, k)).collect();
    let mv = m.mul_vec(&v);
    libm::sqrt(mv.iter().zip(&v).map(|(a, b)| (a - lambda * b) * (a - lambda * b)).sum())
}

fn symmetric_eigen(m: &Matrix, vectors: bool) -> Result<(Vec<f64>, Matrix)> {
    let scale = m.data.iter().fold(0.0f64, |a, x| a.max(libm::fabs(*x)));
    let asym = m.max_asymmetry();
    if asym > 0.0 && asym > 1e-14 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let n = m.n;
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0)));
    }
    let mut v = m.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e, vectors);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let mut vecs = Matrix::zeros(if vectors { n } else { 0 });
    if vectors {
        for (new, &old) in order.iter().enumerate() {
            for r in 0..n {
                vecs.set(r, new, v.get(r, old));
            }
        }
    }
    Ok((vals, vecs))
}

/// Householder reduction to tridiagonal form, accumulating the transform in
/// `v`. On exit `d` is the diagonal and `e[1..]` the subdiagonal.
fn tred2(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = v.n;
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for x in d.iter().take(i) {
            scale += libm::fabs(*x);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for x in d.iter_mut().take(i) {
                *x /= scale;
                h += *x * *x;
            }
            let f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for x in e.iter_mut().take(i) {
                *x = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v.set(j, i, f);
                let mut g = e[j] + v.get(j, j) * f;
                for k in j + 1..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let (f, g) = (d[j], e[j]);
                for k in j..i {
                    let x = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, x);
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for k in 0..=i {
                    let x = v.get(k, j) - g * d[k];
                    v.set(k, j, x);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`; rotations are applied to `v`
/// only when `vectors` is set.
fn tql2(v: &mut Matrix, d: &mut [f64], e: &mut [f64], vectors: bool) {
    let n = v.n;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n - 1 && libm::fabs(e[m]) > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for x in d.iter_mut().skip(l + 2) {
                    *x -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if vectors {
                        for k in 0..n {
                            let h = v.get(k, i + 1);
                            let vi = v.get(k, i);
                            v.set(k, i + 1, s * vi + c * h);
                            v.set(k, i, c * vi - s * h);
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

/// Both parity sectors of one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpectrum {
    pub n: usize,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl OracleSpectrum {
    pub fn levels(&self, parity: Parity) -> &[f64] {
        match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }

    pub fn in_window(&self, parity: Parity, lo: f64, hi: f64) -> Vec<f64> {
        self.levels(parity).iter().copied().filter(|&e| e > lo && e < hi).collect()
    }

    /// Nearest level of `parity` to `e`.
    pub fn nearest(&self, parity: Parity, e: f64) -> Option<f64> {
        self.levels(parity)
            .iter()
            .copied()
            .min_by(|a, b| libm::fabs(a - e).total_cmp(&libm::fabs(b - e)))
    }
}

pub fn oracle_levels(p: &ModelParams, parity: Parity, n: usize) -> Result<Vec<f64>> {
    eigen_spectrum(&parity_block(p, parity, n)?)
}

pub fn oracle_spectrum(p: &ModelParams, n: usize) -> Result<OracleSpectrum> {
    Ok(OracleSpectrum {
        n,
        even: oracle_levels(p, Parity::Even, n)?,
        odd: oracle_levels(p, Parity::Odd, n)?,
    })
}

/// Levels below `e_max` at truncation `n`, with the largest change against
/// truncation `⌈1.3 n⌉`.
pub fn converged_levels(p: &ModelParams, parity: Parity, n: usize, e_max: f64) -> Result<(Vec<f64>, f64)> {
    let lo = oracle_levels(p, parity, n)?;
    let hi = oracle_levels(p, parity, (13 * n).div_ceil(10))?;
    let keep: Vec<f64> = lo.iter().copied().filter(|&e| e < e_max).collect();
    let drift = keep.iter().zip(&hi).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max);
    Ok((keep, drift))
}

/// One matched pair of the comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Match {
    pub parity: Parity,
    pub computed: f64,
    pub reference: f64,
}

impl Match {
    pub fn gap(&self) -> f64 {
        libm::fabs(self.computed - self.reference)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComparisonReport {
    pub matches: Vec<Match>,
    pub unmatched_computed: Vec<(Parity, f64)>,
    pub unmatched_oracle: Vec<(Parity, f64)>,
    pub max_residual: f64,
    pub mean_residual: f64,
}

impl ComparisonReport {
    pub fn is_clean(&self) -> bool {
        self.unmatched_computed.is_empty() && self.unmatched_oracle.is_empty()
    }

    /// The match with the largest gap.
    pub fn worst(&self) -> Option<Match> {
        self.matches.iter().copied().max_by(|a, b| a.gap().total_cmp(&b.gap()))
    }
}

/// Greedy nearest matching per parity: the globally closest pair is matched
/// first, and pairs further apart than `match_tol` stay unmatched.
pub fn compare_spectra(computed: &[(Parity, f64)], oracle: &[(Parity, f64)], match_tol: f64) -> ComparisonReport {
    let mut pairs = Vec::new();
    for (i, &(pc, c)) in computed.iter().enumerate() {
        for (j, &(po, o)) in oracle.iter().enumerate() {
            let gap = libm::fabs(c - o);
            if pc == po && gap <= match_tol {
                pairs.push((gap, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_c = vec![false; computed.len()];
    let mut used_o = vec![false; oracle.len()];
    let mut report = ComparisonReport::default();
    for (_, i, j) in pairs {
        if used_c[i] || used_o[j] {
            continue;
        }
        used_c[i] = true;
        used_o[j] = true;
        report.matches.push(Match {
            parity: computed[i].0,
            computed: computed[i].1,
            reference: oracle[j].1,
        });
    }
    report
        .matches
        .sort_by(|a, b| a.parity.cmp(&b.parity).then(a.computed.total_cmp(&b.computed)));
    report.unmatched_computed = computed.iter().zip(&used_c).filter(|(_, u)| !**u).map(|(x, _)| *x).collect();
    report.unmatched_oracle = oracle.iter().zip(&used_o).filter(|(_, u)| !**u).map(|(x, _)| *x).collect();
    let gaps: Vec<f64> = report.matches.iter().map(Match::gap).collect();
    report.max_residual = gaps.iter().copied().fold(0.0, f64::max);
    report.mean_residual = if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 };
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> ModelParams {
        ModelParams::new(0.7, 0.4, 0.8, 0.4).unwrap()
    }

    #[test]
    fn free_field_is_diagonal() {
        let h = build_hamiltonian(&ModelParams::new(0.0, 0.0, 0.0, 0.0).unwrap(), 3).unwrap();
        for i in 0..h.dim {
            for j in 0..h.dim {
                let want = if i == j { (i / 4) as f64 } else { 0.0 };
                assert_eq!(h.matrix.get(i, j), want);
            }
        }
    }

    #[test]
    fn one_photon_matrix_entries() {
        let h = build_hamiltonian(&fig1(), 1).unwrap();
        let m = &h.matrix;
        assert_eq!(h.dim, 8);
        assert_eq!(m.get(0, 1), -0.4);
        assert_eq!(m.get(0, 2), -0.7);
        assert_eq!(m.get(1, 3), -0.7);
        assert_eq!(m.get(2, 3), -0.4);
        assert_eq!(m.get(0, 3), 0.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert!((m.get(0, 4) - 1.2).abs() < 1e-15);
        assert!((m.get(1, 5) - 0.4).abs() < 1e-15);
        assert!((m.get(2, 6) + 0.4).abs() < 1e-15);
        assert!((m.get(3, 7) + 1.2).abs() < 1e-15);
        assert_eq!(m.get(0, 5), 0.0);
        assert_eq!(m.get(4, 4), 1.0);
        assert_eq!(m.max_asymmetry(), 0.0);
    }

    #[test]
    fn size_limit() {
        assert!(matches!(build_hamiltonian(&fig1(), 2000), Err(Error::TooLarge { .. })));
        assert!(build_hamiltonian(&fig1(), 0).is_err());
    }

    #[test]
    fn two_by_two_closed_form() {
        let delta = 0.37;
        let ev = eigen_spectrum(&Matrix::from_rows(&[&[0.0, -delta], &[-delta, 1.0]])).unwrap();
        let r = libm::sqrt(1.0 + 4.0 * delta * delta);
        assert!((ev[0] - (1.0 - r) / 2.0).abs() < 1e-15);
        assert!((ev[1] - (1.0 + r) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[0.5, 1.0]]);
        assert!(matches!(eigen_spectrum(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn projected_and_direct_blocks_agree() {
        let p = fig1();
        let h = build_hamiltonian(&p, 12).unwrap();
        let b = parity_blocks(&h);
        assert!(b.cross_max < 1e-14 * h.matrix.norm());
        for parity in Parity::BOTH {
            let direct = parity_block(&p, parity, 12).unwrap();
            let proj = b.block(parity);
            for (x, y) in direct.data.iter().zip(&proj.data) {
                assert!((x - y).abs() < 1e-14, "{parity}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn eigenvectors_have_small_residuals() {
        let m = parity_block(&fig1(), Parity::Even, 60).unwrap();
        let (vals, vecs) = eigen_decomposition(&m).unwrap();
        let norm = m.norm();
        for k in 0..20 {
            assert!(residual(&m, vals[k], &vecs, k) <= 1e-9 * norm);
        }
    }

    #[test]
    fn comparison_reports_unmatched() {
        use Parity::*;
        let c = [(Even, 0.1), (Even, 1.0), (Odd, 0.5)];
        let o = [(Even, 0.1 + 1e-9), (Odd, 0.5), (Odd, 2.0)];
        let r = compare_spectra(&c, &o, 1e-6);
        assert_eq!(r.matches.len(), 2);
        assert_eq!(r.unmatched_computed, alloc::vec![(Even, 1.0)]);
        assert_eq!(r.unmatched_oracle, alloc::vec![(Odd, 2.0)]);
        assert!((r.max_residual - 1e-9).abs() < 1e-15);
        let same = compare_spectra(&c, &c, 1e-6);
        assert!(same.is_clean() && same.max_residual == 0.0);
    }
}
