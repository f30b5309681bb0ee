//! Single quantum Rabi system: Hamiltonian, dressed basis, parity and
//! selection-rule matrix elements.
//!
//! The product basis is `qubit ⊗ Fock` with the qubit ordered
//! `(excited, ground)`, so basis index `q * n_fock + k` is qubit state `q`
//! with `k` photons. Units: ħ = 1 and every frequency is a multiple of the
//! reference frequency (the cavity frequency unless stated otherwise).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{annihilation, commutator_norm, kron, quadrature, sigma_x, sigma_z, symmetric_eigen, RMatrix, C64};

/// Default Fock cutoff for single-system work (g ≤ 1).
pub const DEFAULT_FOCK_CUTOFF: usize = 30;

/// Parameters of one quantum Rabi system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    pub omega_c: f64,
    pub omega_a: f64,
    pub g: f64,
    pub n_fock: usize,
}

impl RabiParams {
    pub fn new(omega_a: f64, g: f64) -> Self {
        RabiParams { omega_c: 1.0, omega_a, g, n_fock: DEFAULT_FOCK_CUTOFF }
    }

    pub fn with_cutoff(mut self, n_fock: usize) -> Self {
        self.n_fock = n_fock;
        self
    }

    /// The single-qubit gate working point: ω_a = 0.8 ω_c, g = 0.3 ω_c.
    pub fn working_point() -> Self {
        RabiParams::new(0.8, 0.3)
    }

    pub fn dim(&self) -> usize {
        2 * self.n_fock
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("omega_c", self.omega_c)?;
        ensure_finite("omega_a", self.omega_a)?;
        ensure_finite("g", self.g)?;
        if self.omega_c <= 0.0 {
            return Err(Error::invalid("omega_c", "must be > 0"));
        }
        if self.omega_a < 0.0 {
            return Err(Error::invalid("omega_a", "must be >= 0"));
        }
        if self.g < 0.0 {
            return Err(Error::invalid("g", "must be >= 0"));
        }
        if self.n_fock < 2 {
            return Err(Error::invalid("n_fock", format!("must be >= 2, got {}", self.n_fock)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParityLabel {
    Even,
    Odd,
}

impl ParityLabel {
    pub fn sign(self) -> f64 {
        match self {
            ParityLabel::Even => 1.0,
            ParityLabel::Odd => -1.0,
        }
    }

    pub fn code(self) -> char {
        match self {
            ParityLabel::Even => 'e',
            ParityLabel::Odd => 'o',
        }
    }
}

/// Operators whose dressed-basis matrix elements are exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    SigmaX,
    SigmaZ,
    /// `a + a†`
    Quadrature,
    /// `(a + a†)²`
    QuadratureSquared,
}

impl OperatorKind {
    pub fn parity(self) -> ParityLabel {
        match self {
            OperatorKind::SigmaX | OperatorKind::Quadrature => ParityLabel::Odd,
            OperatorKind::SigmaZ | OperatorKind::QuadratureSquared => ParityLabel::Even,
        }
    }

    /// The operator on the full `qubit ⊗ Fock` space.
    pub fn matrix(self, n_fock: usize) -> RMatrix {
        let id_q = RMatrix::identity(2, 2);
        let id_f = RMatrix::identity(n_fock, n_fock);
        match self {
            OperatorKind::SigmaX => kron(&sigma_x(), &id_f),
            OperatorKind::SigmaZ => kron(&sigma_z(), &id_f),
            OperatorKind::Quadrature => kron(&id_q, &quadrature(n_fock)),
            OperatorKind::QuadratureSquared => kron(&id_q, &quadrature_squared(n_fock)),
        }
    }
}

/// `(a + a†)² = a² + a†² + 2a†a + 1`, restricted to `n` Fock levels.
///
/// Building it term by term keeps the top diagonal entry at `2n - 1`,
/// which squaring the truncated quadrature would not.
pub fn quadrature_squared(n: usize) -> RMatrix {
    let a = annihilation(n);
    let ad = a.transpose();
    &a * &a + &ad * &ad + (&ad * &a) * 2.0 + RMatrix::identity(n, n)
}

/// Diagonal of `P = exp(iπ(a†a + σ₊σ₋))` in the product basis.
pub fn parity_diagonal(n_fock: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(2 * n_fock);
    for q in 0..2 {
        let excited = usize::from(q == 0);
        for k in 0..n_fock {
            d.push(if (k + excited) % 2 == 0 { 1.0 } else { -1.0 });
        }
    }
    d
}

pub fn parity_operator(n_fock: usize) -> RMatrix {
    RMatrix::from_diagonal(&nalgebra::DVector::from_vec(parity_diagonal(n_fock)))
}

/// `H_p = ω_c a†a + (ω_a/2) σ_z + g σ_x (a† + a)`.
pub fn build_rabi_hamiltonian(params: &RabiParams) -> Result<RMatrix> {
    params.validate()?;
    let n = params.n_fock;
    let a = annihilation(n);
    let number = a.transpose() * &a;
    let id_q = RMatrix::identity(2, 2);
    let id_f = RMatrix::identity(n, n);
    let h = kron(&id_q, &number) * params.omega_c
        + kron(&sigma_z(), &id_f) * (0.5 * params.omega_a)
        + kron(&sigma_x(), &quadrature(n)) * params.g;
    Ok(h)
}

/// Eigenstates of a parity-symmetric Hamiltonian, ground level at zero.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    /// Ascending, `energies[0] == 0`.
    pub energies: Vec<f64>,
    /// Column `s` is the dressed state `|s⟩` in the product basis.
    pub vectors: RMatrix,
    pub parities: Vec<ParityLabel>,
    /// Ground-state energy subtracted from the raw eigenvalues.
    pub ground_energy: f64,
    pub n_fock: usize,
}

impl DressedBasis {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `ω_ts = ω_t − ω_s`.
    pub fn transition(&self, t: usize, s: usize) -> f64 {
        self.energies[t] - self.energies[s]
    }

    pub fn state(&self, s: usize) -> nalgebra::DVectorView<'_, f64> {
        self.vectors.column(s)
    }

    /// Projection of `kind` onto the lowest `k` dressed states.
    pub fn operator_block(&self, kind: OperatorKind, k: usize) -> Result<RMatrix> {
        if k > self.dim() {
            return Err(Error::IndexOutOfRange { index: k, dim: self.dim() });
        }
        let op = kind.matrix(self.n_fock);
        let v = self.vectors.columns(0, k);
        Ok(v.transpose() * op * v)
    }

    /// Dressed energies of the lowest `k` levels as a diagonal matrix.
    pub fn energy_block(&self, k: usize) -> RMatrix {
        RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, self.energies[..k].iter().copied()))
    }
}

fn parity_sector_indices(n_fock: usize) -> (Vec<usize>, Vec<usize>) {
    let diag = parity_diagonal(n_fock);
    let even = diag.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i).collect();
    let odd = diag.iter().enumerate().filter(|(_, &p)| p < 0.0).map(|(i, _)| i).collect();
    (even, odd)
}

/// Diagonalizes a parity-conserving Hamiltonian on the `qubit ⊗ Fock`
/// space. Each parity sector is solved separately, which keeps
/// eigenvectors parity-pure even at level crossings.
pub fn diagonalize(h: &RMatrix, n_fock: usize) -> Result<DressedBasis> {
    let dim = 2 * n_fock;
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: h.nrows() });
    }
    let p = parity_operator(n_fock);
    let norm = commutator_norm(&p, h);
    if norm > 1e-10 * h.norm().max(1.0) {
        return Err(Error::ParityBroken { norm });
    }

    let (even, odd) = parity_sector_indices(n_fock);
    let mut levels: Vec<(f64, ParityLabel, usize, nalgebra::DVector<f64>)> = Vec::with_capacity(dim);
    for (label, idx) in [(ParityLabel::Even, &even), (ParityLabel::Odd, &odd)] {
        let block = RMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
        let (values, vectors) = symmetric_eigen(&block).map_err(|e| match e {
            Error::EigenFailure { .. } => Error::EigenFailure { dim },
            other => other,
        })?;
        for (k, e) in values.into_iter().enumerate() {
            let mut full = nalgebra::DVector::zeros(dim);
            for (i, &row) in idx.iter().enumerate() {
                full[row] = vectors[(i, k)];
            }
            levels.push((e, label, k, full));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1 as u8).cmp(&(b.1 as u8))).then(a.2.cmp(&b.2)));

    let ground = levels[0].0;
    let mut vectors = RMatrix::zeros(dim, dim);
    let mut energies = Vec::with_capacity(dim);
    let mut parities = Vec::with_capacity(dim);
    for (s, (e, _, _, v)) in levels.into_iter().enumerate() {
        energies.push(e - ground);
        parities.push(parity_of(v.as_slice(), n_fock)?);
        vectors.set_column(s, &v);
    }
    energies[0] = 0.0;
    Ok(DressedBasis { energies, vectors, parities, ground_energy: ground, n_fock })
}

/// Builds and diagonalizes `H_p` in one go.
pub fn dressed_basis(params: &RabiParams) -> Result<DressedBasis> {
    let h = build_rabi_hamiltonian(params)?;
    diagonalize(&h, params.n_fock)
}

/// Parity expectation `⟨ψ|P|ψ⟩` of a real product-basis state.
pub fn parity_expectation(vector: &[f64], n_fock: usize) -> Result<f64> {
    if vector.len() != 2 * n_fock {
        return Err(Error::DimensionMismatch { expected: 2 * n_fock, actual: vector.len() });
    }
    let diag = parity_diagonal(n_fock);
    Ok(vector.iter().zip(&diag).map(|(v, p)| p * v * v).sum())
}

pub fn parity_of(vector: &[f64], n_fock: usize) -> Result<ParityLabel> {
    let expectation = parity_expectation(vector, n_fock)?;
    if expectation > 0.9 {
        Ok(ParityLabel::Even)
    } else if expectation < -0.9 {
        Ok(ParityLabel::Odd)
    } else {
        Err(Error::MixedParity { expectation })
    }
}

/// `⟨s|O|t⟩` in the dressed basis.
pub fn matrix_element(kind: OperatorKind, basis: &DressedBasis, s: usize, t: usize) -> Result<C64> {
    let dim = basis.dim();
    for idx in [s, t] {
        if idx >= dim {
            return Err(Error::IndexOutOfRange { index: idx, dim });
        }
    }
    let op = kind.matrix(basis.n_fock);
    let value = basis.state(s).dot(&(op * basis.state(t)));
    Ok(C64::new(value, 0.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub g: f64,
    pub energies: Vec<f64>,
    pub parities: Vec<ParityLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSweep {
    pub omega_a: f64,
    pub n_fock: usize,
    pub rows: Vec<SpectrumRow>,
    /// `tracks[i][c]` is the ascending index, at grid point `i`, of the
    /// level curve that starts as level `c` at the first grid point;
    /// `None` once the curve has left the emitted window.
    pub tracks: Vec<Vec<Option<usize>>>,
}

impl SpectrumSweep {
    pub fn n_levels(&self) -> usize {
        self.rows.first().map_or(0, |r| r.energies.len())
    }

    /// Energy and parity of tracked curve `c` along the grid.
    pub fn curve(&self, c: usize) -> Vec<Option<(f64, ParityLabel)>> {
        self.rows
            .iter()
            .zip(&self.tracks)
            .map(|(row, tr)| tr[c].map(|j| (row.energies[j], row.parities[j])))
            .collect()
    }
}

/// Evenly spaced grid with both endpoints exact.
pub fn linear_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        n => (0..n)
            .map(|i| if i == n - 1 { max } else { min + (max - min) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Dressed spectrum as a function of `g` (with ω_c = 1).
///
/// Rows keep the ascending order; `tracks` follows each of the initial
/// `n_levels` curves by maximal eigenvector overlap with the previous
/// grid point.
pub fn spectrum_sweep(omega_a: f64, g_grid: &[f64], n_levels: usize, n_fock: usize) -> Result<SpectrumSweep> {
    if g_grid.is_empty() {
        return Err(Error::invalid("g_grid", "must not be empty"));
    }
    if g_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("g_grid", "must be strictly ascending"));
    }
    if n_levels == 0 || n_levels > 2 * n_fock {
        return Err(Error::invalid("n_levels", format!("must be in 1..={}", 2 * n_fock)));
    }
    // extra candidates let a curve be followed after it leaves the window
    let n_track = (n_levels + 4).min(2 * n_fock);
    let bases: Vec<(SpectrumRow, RMatrix)> = g_grid
        .par_iter()
        .map(|&g| {
            let params = RabiParams { omega_c: 1.0, omega_a, g, n_fock };
            let basis = dressed_basis(&params).map_err(|e| Error::AtCoupling { g, source: Box::new(e) })?;
            let row = SpectrumRow {
                g,
                energies: basis.energies[..n_levels].to_vec(),
                parities: basis.parities[..n_levels].to_vec(),
            };
            Ok((row, basis.vectors.columns(0, n_track).into_owned()))
        })
        .collect::<Result<_>>()?;

    let mut positions: Vec<Vec<Option<usize>>> = Vec::with_capacity(bases.len());
    positions.push((0..n_levels).map(Some).collect());
    for i in 1..bases.len() {
        let overlaps = bases[i - 1].1.transpose() * &bases[i].1;
        let prev = &positions[i - 1];
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (c, pi) in prev.iter().enumerate() {
            if let Some(pi) = *pi {
                for j in 0..n_track {
                    candidates.push((overlaps[(pi, j)].abs(), c, j));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut assigned: Vec<Option<usize>> = vec![None; n_levels];
        let mut taken = vec![false; n_track];
        for (_, c, j) in candidates {
            if assigned[c].is_none() && !taken[j] {
                assigned[c] = Some(j);
                taken[j] = true;
            }
        }
        positions.push(assigned);
    }
    let rows: Vec<SpectrumRow> = bases.into_iter().map(|(r, _)| r).collect();
    let tracks = positions
        .into_iter()
        .map(|p| p.into_iter().map(|j| j.filter(|&j| j < n_levels)).collect())
        .collect();
    Ok(SpectrumSweep { omega_a, n_fock, rows, tracks })
}

/// Spectrum CSV: `g,E0,...,E{n-1},p0,...,p{n-1}`.
pub fn spectrum_csv(sweep: &SpectrumSweep) -> String {
    let n = sweep.n_levels();
    let mut out = String::from("g");
    for k in 0..n {
        out.push_str(&format!(",E{k}"));
    }
    for k in 0..n {
        out.push_str(&format!(",p{k}"));
    }
    out.push('\n');
    for row in &sweep.rows {
        out.push_str(&crate::output::fmt_g12(row.g));
        for e in &row.energies {
            out.push(',');
            out.push_str(&crate::output::fmt_g12(*e));
        }
        for p in &row.parities {
            out.push(',');
            out.push(p.code());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(excited: bool, photons: usize, n: usize) -> usize {
        if excited {
            photons
        } else {
            n + photons
        }
    }

    #[test]
    fn uncoupled_two_level_cutoff() {
        let params = RabiParams { omega_c: 1.0, omega_a: 0.8, g: 0.0, n_fock: 2 };
        let h = build_rabi_hamiltonian(&params).unwrap();
        let mut diag: Vec<f64> = (0..4).map(|i| h[(i, i)]).collect();
        diag.sort_by(f64::total_cmp);
        let expect = [-0.4, 0.4, 0.6, 1.4];
        for (d, e) in diag.iter().zip(expect) {
            assert!((d - e).abs() < 1e-15);
        }
        assert!(h.iter().enumerate().all(|(k, &x)| k % 5 == 0 || x == 0.0));
    }

    #[test]
    fn hamiltonian_is_symmetric_and_has_g_element() {
        let params = RabiParams { omega_c: 1.0, omega_a: 0.7, g: 0.37, n_fock: 8 };
        let h = build_rabi_hamiltonian(&params).unwrap();
        assert_eq!(h, h.transpose());
        let n = params.n_fock;
        assert!((h[(idx(true, 0, n), idx(false, 1, n))] - 0.37).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = RabiParams::working_point();
        p.n_fock = 1;
        assert!(matches!(build_rabi_hamiltonian(&p), Err(Error::InvalidParameter { name: "n_fock", .. })));
        let mut p = RabiParams::working_point();
        p.g = f64::NAN;
        assert!(build_rabi_hamiltonian(&p).is_err());
        let mut p = RabiParams::working_point();
        p.omega_c = 0.0;
        assert!(build_rabi_hamiltonian(&p).is_err());
    }

    #[test]
    fn uncoupled_rescaled_spectrum() {
        let basis = dressed_basis(&RabiParams::new(0.8, 0.0).with_cutoff(10)).unwrap();
        let expect = [0.0, 0.8, 1.0, 1.8, 2.0, 2.8];
        for (e, x) in basis.energies.iter().zip(expect) {
            assert!((e - x).abs() < 1e-12, "{e} vs {x}");
        }
        assert_eq!(basis.energies[0], 0.0);
    }

    #[test]
    fn working_point_lowest_parities() {
        let basis = dressed_basis(&RabiParams::working_point()).unwrap();
        assert_eq!(&basis.parities[..3], &[ParityLabel::Even, ParityLabel::Odd, ParityLabel::Odd]);
    }

    #[test]
    fn bare_state_parities() {
        let n = 5;
        let mut v = vec![0.0; 2 * n];
        v[idx(false, 0, n)] = 1.0;
        assert_eq!(parity_of(&v, n).unwrap(), ParityLabel::Even);
        let mut v = vec![0.0; 2 * n];
        v[idx(true, 0, n)] = 1.0;
        assert_eq!(parity_of(&v, n).unwrap(), ParityLabel::Odd);
        let mut v = vec![0.0; 2 * n];
        v[idx(true, 0, n)] = 0.5_f64.sqrt();
        v[idx(false, 0, n)] = 0.5_f64.sqrt();
        assert!(matches!(parity_of(&v, n), Err(Error::MixedParity { .. })));
    }

    #[test]
    fn diagonalize_rejects_parity_breaking_input() {
        let n = 3;
        let mut h = build_rabi_hamiltonian(&RabiParams::new(0.5, 0.2).with_cutoff(n)).unwrap();
        h[(0, n)] += 0.1;
        h[(n, 0)] += 0.1;
        assert!(matches!(diagonalize(&h, n), Err(Error::ParityBroken { .. })));
    }

    #[test]
    fn matrix_element_index_check() {
        let basis = dressed_basis(&RabiParams::working_point().with_cutoff(4)).unwrap();
        assert!(matches!(
            matrix_element(OperatorKind::SigmaX, &basis, 8, 0),
            Err(Error::IndexOutOfRange { index: 8, dim: 8 })
        ));
    }

    #[test]
    fn quadrature_squared_top_entry() {
        let x2 = quadrature_squared(4);
        assert!((x2[(3, 3)] - 7.0).abs() < 1e-14);
        assert_eq!(x2[(0, 2)], 2.0_f64.sqrt());
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = linear_grid(0.0, 1.0, 101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert_eq!(linear_grid(0.3, 0.3, 1), vec![0.3]);
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        assert!(spectrum_sweep(0.8, &[0.2, 0.1], 4, 10).is_err());
        assert!(spectrum_sweep(0.8, &[0.1], 30, 10).is_err());
    }
}
