//! Clifford algebra `Cl(p, q)` arithmetic and gamma-matrix sets.
//!
//! Multivectors are sparse tables keyed by blade bitmask: bit `k − 1` set
//! means generator `e_k` is a factor of the blade. Generators `e_1..e_p`
//! square to `+1`, `e_{p+1}..e_n` square to `−1`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{CMatrix, MatrixError};

pub const MAX_GENERATORS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliffordError {
    #[error("signature ({p},{q_neg}) must have between 1 and {MAX_GENERATORS} generators")]
    InvalidSignature { p: usize, q_neg: usize },
    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch { left: Signature, right: Signature },
    #[error("generator index {index} out of range for {sig}")]
    GeneratorOutOfRange { index: usize, sig: Signature },
    #[error("gamma index {0} out of range 0..3")]
    GammaOutOfRange(usize),
    #[error("gamma set `{label}` violates {{γ_{mu}, γ_{nu}}} = 2η_{mu}{nu}·I (defect {defect:e})")]
    AnticommutatorViolated {
        label: String,
        mu: usize,
        nu: usize,
        defect: f64,
    },
    #[error("gamma set `{0}` must hold four 4x4 matrices")]
    GammaShape(String),
    #[error("unknown gamma representation `{0}` (expected `dirac` or `chiral`)")]
    UnknownRepresentation(String),
    #[error("multivector is not invertible")]
    NotInvertible,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSignature")]
pub struct Signature {
    p: usize,
    q_neg: usize,
}

#[derive(Deserialize)]
struct RawSignature {
    p: usize,
    q_neg: usize,
}

impl TryFrom<RawSignature> for Signature {
    type Error = CliffordError;

    fn try_from(raw: RawSignature) -> Result<Self, Self::Error> {
        Signature::new(raw.p, raw.q_neg)
    }
}

impl Signature {
    pub fn new(p: usize, q_neg: usize) -> Result<Self, CliffordError> {
        let n = p.saturating_add(q_neg);
        if n == 0 || n > MAX_GENERATORS {
            return Err(CliffordError::InvalidSignature { p, q_neg });
        }
        Ok(Signature { p, q_neg })
    }

    /// `Cl(0, n)`: every generator squares to `−1`.
    pub fn negative(n: usize) -> Result<Self, CliffordError> {
        Self::new(0, n)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q_neg(&self) -> usize {
        self.q_neg
    }

    pub fn dim(&self) -> usize {
        self.p + self.q_neg
    }

    pub fn blade_count(&self) -> usize {
        1 << self.dim()
    }

    /// `e_k²` for 1-based `k`.
    pub fn square(&self, k: usize) -> Result<f64, CliffordError> {
        self.check_index(k)?;
        Ok(if k <= self.p { 1.0 } else { -1.0 })
    }

    fn check_index(&self, k: usize) -> Result<(), CliffordError> {
        if k == 0 || k > self.dim() {
            Err(CliffordError::GeneratorOutOfRange {
                index: k,
                sig: *self,
            })
        } else {
            Ok(())
        }
    }

    /// Sign of the product of two basis blades: reordering swaps times the
    /// squares of shared generators.
    pub fn blade_product_sign(&self, a: u16, b: u16) -> f64 {
        let mut swaps = 0u32;
        let mut shifted = a >> 1;
        while shifted != 0 {
            swaps += (shifted & b).count_ones();
            shifted >>= 1;
        }
        let mut sign = if swaps.is_multiple_of(2) { 1.0 } else { -1.0 };
        let common = a & b;
        // bits >= p square to -1
        let neg_mask: u16 = !((1u16 << self.p) - 1);
        if (common & neg_mask).count_ones() % 2 == 1 {
            sign = -sign;
        }
        sign
    }
}

impl Default for Signature {
    fn default() -> Self {
        Signature { p: 0, q_neg: 4 }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cl({},{})", self.p, self.q_neg)
    }
}

/// Element of `Cl(p, q)` with complex coefficients. Absent blades are zero.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Multivector {
    sig: Signature,
    coeffs: BTreeMap<u16, Complex64>,
}

impl Multivector {
    pub fn zero(sig: Signature) -> Self {
        Multivector {
            sig,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(sig: Signature, c: Complex64) -> Self {
        Self::blade(sig, 0, c)
    }

    pub fn blade(sig: Signature, mask: u16, c: Complex64) -> Self {
        let mut mv = Self::zero(sig);
        if c != Complex64::new(0.0, 0.0) {
            mv.coeffs.insert(mask & ((1u16 << sig.dim()) - 1), c);
        }
        mv
    }

    /// The generator `e_k`, 1-based.
    pub fn generator(sig: Signature, k: usize) -> Result<Self, CliffordError> {
        sig.check_index(k)?;
        Ok(Self::blade(sig, 1 << (k - 1), Complex64::new(1.0, 0.0)))
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn get(&self, mask: u16) -> Complex64 {
        self.coeffs
            .get(&mask)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.get(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u16, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// True when only the scalar blade is present.
    pub fn is_scalar(&self) -> bool {
        self.coeffs.keys().all(|&m| m == 0)
    }

    /// If this is `1·e_k`, returns `k`.
    pub fn as_unit_generator(&self) -> Option<usize> {
        if self.coeffs.len() != 1 {
            return None;
        }
        let (&mask, &c) = self.coeffs.iter().next()?;
        if mask.count_ones() == 1 && c == Complex64::new(1.0, 0.0) {
            Some(mask.trailing_zeros() as usize + 1)
        } else {
            None
        }
    }

    fn check_sig(&self, other: &Multivector) -> Result<(), CliffordError> {
        if self.sig != other.sig {
            Err(CliffordError::SignatureMismatch {
                left: self.sig,
                right: other.sig,
            })
        } else {
            Ok(())
        }
    }

    fn insert_add(&mut self, mask: u16, c: Complex64) {
        let entry = self.coeffs.entry(mask).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&mask);
        }
    }

    pub fn add(&self, other: &Multivector) -> Result<Multivector, CliffordError> {
        self.check_sig(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.insert_add(m, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Multivector) -> Result<Multivector, CliffordError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Multivector {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Multivector {
        let mut out = Multivector::zero(self.sig);
        for (m, v) in self.terms() {
            out.insert_add(m, v * c);
        }
        out
    }

    pub fn add_scalar(&self, c: Complex64) -> Multivector {
        let mut out = self.clone();
        out.insert_add(0, c);
        out
    }

    /// Reversion: reverses the order of generators in each blade.
    pub fn reverse(&self) -> Multivector {
        let mut out = Multivector::zero(self.sig);
        for (m, c) in self.terms() {
            let k = m.count_ones();
            let sign = if (k * k.saturating_sub(1) / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            out.insert_add(m, c * sign);
        }
        out
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        crate::matrix::nan_max(self.coeffs.values().map(|c| c.norm()))
    }

    pub fn max_diff(&self, other: &Multivector) -> Result<f64, CliffordError> {
        Ok(self.sub(other)?.max_norm())
    }

    /// Inverse for elements whose product with their reverse is a nonzero
    /// scalar (versors, scalars, single blades). Anything else goes through
    /// the faithful matrix representation.
    pub fn inverse(&self) -> Result<Multivector, CliffordError> {
        let rev = self.reverse();
        let norm = geometric_product(self, &rev)?;
        if norm.is_scalar() {
            let s = norm.scalar_part();
            if s.norm() < 1e-300 {
                return Err(CliffordError::NotInvertible);
            }
            return Ok(rev.scale(s.inv()));
        }
        let m = self.to_matrix()?;
        let inv = m.inverse().map_err(|_| CliffordError::NotInvertible)?;
        Multivector::from_matrix(self.sig, &inv)
    }

    /// Image under the faithful representation of dimension `2^⌈n/2⌉`.
    pub fn to_matrix(&self) -> Result<CMatrix, CliffordError> {
        let rep = Representation::new(self.sig);
        let mut out = CMatrix::zeros(rep.dim());
        for (m, c) in self.terms() {
            out = out.add(&rep.blade_matrix(m)?.scale(c))?;
        }
        Ok(out)
    }

    /// Inverse of [`Multivector::to_matrix`] by trace projection onto blade
    /// images. Components outside the image of the algebra are discarded.
    pub fn from_matrix(sig: Signature, m: &CMatrix) -> Result<Multivector, CliffordError> {
        let rep = Representation::new(sig);
        if m.dim() != rep.dim() {
            return Err(MatrixError::DimensionMismatch {
                left: m.dim(),
                right: rep.dim(),
            }
            .into());
        }
        let d = rep.dim() as f64;
        let mut out = Multivector::zero(sig);
        for mask in 0..sig.blade_count() as u16 {
            let b = rep.blade_matrix(mask)?;
            let binv = b.inverse()?;
            let c = binv.mul(m)?.trace() / d;
            if c.norm() > 1e-15 {
                out.insert_add(mask, c);
            }
        }
        Ok(out)
    }
}

/// Geometric product of two multivectors of the same signature.
pub fn geometric_product(a: &Multivector, b: &Multivector) -> Result<Multivector, CliffordError> {
    a.check_sig(b)?;
    let mut out = Multivector::zero(a.sig);
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            let sign = a.sig.blade_product_sign(ma, mb);
            out.insert_add(ma ^ mb, ca * cb * sign);
        }
    }
    Ok(out)
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.sig)?;
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for k in 0..16 {
                if m & (1 << k) != 0 {
                    write!(f, "e{}", k + 1)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Faithful complex matrix representation of `Cl(p, q)` of dimension
/// `2^⌈n/2⌉`, built from Jordan–Wigner strings of Pauli matrices.
///
/// Generator `e_k` maps to `Γ_k` when it squares to `+1` and to `−i·Γ_k`
/// when it squares to `−1`, where the `Γ_k` are pairwise anticommuting
/// Hermitian involutions. In one dimension `e_1 ↦ [[0, −1], [1, 0]]`.
#[derive(Debug, Clone)]
pub struct Representation {
    sig: Signature,
    generators: Vec<CMatrix>,
}

impl Representation {
    pub fn new(sig: Signature) -> Self {
        let n = sig.dim();
        let qubits = n.div_ceil(2);
        let mut generators = Vec::with_capacity(n);
        for k in 0..n {
            let gamma = majorana(qubits, k);
            let m = if k < sig.p() {
                gamma
            } else {
                gamma.scale(Complex64::new(0.0, -1.0))
            };
            generators.push(m);
        }
        Representation { sig, generators }
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    /// Matrix of `e_k`, 1-based.
    pub fn generator(&self, k: usize) -> Result<&CMatrix, CliffordError> {
        self.sig.check_index(k)?;
        Ok(&self.generators[k - 1])
    }

    /// Matrix of the basis blade with the given mask (generators multiplied
    /// in increasing index order).
    pub fn blade_matrix(&self, mask: u16) -> Result<CMatrix, CliffordError> {
        let mut out = CMatrix::identity(self.dim());
        for k in 0..self.sig.dim() {
            if mask & (1 << k) != 0 {
                out = out.mul(&self.generators[k])?;
            }
        }
        Ok(out)
    }
}

fn pauli(which: u8) -> CMatrix {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let rows = match which {
        b'X' => vec![vec![z, one], vec![one, z]],
        b'Y' => vec![vec![z, -i], vec![i, z]],
        b'Z' => vec![vec![one, z], vec![z, -one]],
        _ => vec![vec![one, z], vec![z, one]],
    };
    CMatrix::from_rows(&rows).expect("2x2 Pauli matrix")
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let mut out = CMatrix::zeros(na * nb);
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            for k in 0..nb {
                for l in 0..nb {
                    out.set(i * nb + k, j * nb + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// k-th Jordan–Wigner Majorana operator on `qubits` qubits:
/// `Z ⊗ … ⊗ Z ⊗ (Y or X) ⊗ I ⊗ … ⊗ I`.
fn majorana(qubits: usize, k: usize) -> CMatrix {
    let site = k / 2;
    let op = if k.is_multiple_of(2) { b'Y' } else { b'X' };
    let mut out = CMatrix::identity(1);
    for s in 0..qubits {
        let factor = if s < site {
            pauli(b'Z')
        } else if s == site {
            pauli(op)
        } else {
            pauli(b'I')
        };
        out = kron(&out, &factor);
    }
    out
}

/// Four 4×4 matrices `γ_0..γ_3` with `{γ_μ, γ_ν} = 2η_{μν}·I`,
/// `η = diag(+1, −1, −1, −1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGammaSet")]
pub struct GammaSet {
    matrices: Vec<CMatrix>,
    label: String,
}

#[derive(Deserialize)]
struct RawGammaSet {
    matrices: Vec<CMatrix>,
    label: String,
}

impl TryFrom<RawGammaSet> for GammaSet {
    type Error = CliffordError;

    fn try_from(raw: RawGammaSet) -> Result<Self, Self::Error> {
        GammaSet::new(raw.matrices, raw.label)
    }
}

/// Minkowski metric diagonal.
pub const MINKOWSKI: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

impl GammaSet {
    /// Validates the anticommutator relations before accepting the set.
    pub fn new(matrices: Vec<CMatrix>, label: impl Into<String>) -> Result<Self, CliffordError> {
        let label = label.into();
        if matrices.len() != 4 || matrices.iter().any(|m| m.dim() != 4) {
            return Err(CliffordError::GammaShape(label));
        }
        let set = GammaSet { matrices, label };
        if let Some((mu, nu, defect)) = set.worst_anticommutator(0.0) {
            return Err(CliffordError::AnticommutatorViolated {
                label: set.label,
                mu,
                nu,
                defect,
            });
        }
        Ok(set)
    }

    /// Dirac representation: `γ⁰ = diag(I, −I)`, `γ^k = [[0, σ_k], [−σ_k, 0]]`.
    pub fn dirac() -> Self {
        let i2 = CMatrix::identity(2);
        let g0 = block(&i2, &CMatrix::zeros(2), &CMatrix::zeros(2), &i2.neg());
        let mut matrices = vec![g0];
        for s in *b"XYZ" {
            let sigma = pauli(s);
            matrices.push(block(&CMatrix::zeros(2), &sigma, &sigma.neg(), &CMatrix::zeros(2)));
        }
        GammaSet {
            matrices,
            label: "dirac".into(),
        }
    }

    /// Chiral (Weyl) representation: `γ⁰ = [[0, I], [I, 0]]`,
    /// `γ^k = [[0, σ_k], [−σ_k, 0]]`.
    pub fn chiral() -> Self {
        let i2 = CMatrix::identity(2);
        let g0 = block(&CMatrix::zeros(2), &i2, &i2, &CMatrix::zeros(2));
        let mut matrices = vec![g0];
        for s in *b"XYZ" {
            let sigma = pauli(s);
            matrices.push(block(&CMatrix::zeros(2), &sigma, &sigma.neg(), &CMatrix::zeros(2)));
        }
        GammaSet {
            matrices,
            label: "chiral".into(),
        }
    }

    pub fn by_label(label: &str) -> Result<Self, CliffordError> {
        match label {
            "dirac" => Ok(Self::dirac()),
            "chiral" | "weyl" => Ok(Self::chiral()),
            other => Err(CliffordError::UnknownRepresentation(other.to_string())),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn gamma(&self, mu: usize) -> Result<&CMatrix, CliffordError> {
        self.matrices
            .get(mu)
            .ok_or(CliffordError::GammaOutOfRange(mu))
    }

    /// `γ^μ = η^{μμ} γ_μ`.
    pub fn gamma_upper(&self, mu: usize) -> Result<CMatrix, CliffordError> {
        Ok(self.gamma(mu)?.scale(Complex64::new(MINKOWSKI[mu], 0.0)))
    }

    /// `γ_μγ_ν + γ_νγ_μ`.
    pub fn anticommutator(&self, mu: usize, nu: usize) -> Result<CMatrix, CliffordError> {
        let a = self.gamma(mu)?;
        let b = self.gamma(nu)?;
        Ok(a.mul(b)?.add(&b.mul(a)?)?)
    }

    /// First `(μ, ν, defect)` whose anticommutator misses `2η_{μν}I` by more
    /// than `tol`.
    pub fn worst_anticommutator(&self, tol: f64) -> Option<(usize, usize, f64)> {
        for mu in 0..4 {
            for nu in 0..4 {
                let expected = if mu == nu {
                    CMatrix::scalar(4, Complex64::new(2.0 * MINKOWSKI[mu], 0.0))
                } else {
                    CMatrix::zeros(4)
                };
                let defect = self
                    .anticommutator(mu, nu)
                    .and_then(|m| Ok(m.max_diff(&expected)?))
                    .unwrap_or(f64::INFINITY);
                if !(defect <= tol) {
                    return Some((mu, nu, defect));
                }
            }
        }
        None
    }
}

impl Default for GammaSet {
    fn default() -> Self {
        Self::dirac()
    }
}

/// The default gamma set: the Dirac representation.
pub fn gamma_default() -> GammaSet {
    GammaSet::dirac()
}

fn block(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> CMatrix {
    let n = a.dim();
    let mut out = CMatrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, a.get(i, j));
            out.set(i, j + n, b.get(i, j));
            out.set(i + n, j, c.get(i, j));
            out.set(i + n, j + n, d.get(i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn sig(p: usize, q: usize) -> Signature {
        Signature::new(p, q).unwrap()
    }

    #[test]
    fn generator_squares_to_minus_one() {
        let s = sig(0, 2);
        let e1 = Multivector::generator(s, 1).unwrap();
        let sq = geometric_product(&e1, &e1).unwrap();
        assert_eq!(sq, Multivector::scalar(s, -one()));
    }

    #[test]
    fn distinct_generators_anticommute() {
        let s = sig(0, 2);
        let e1 = Multivector::generator(s, 1).unwrap();
        let e2 = Multivector::generator(s, 2).unwrap();
        let sum = geometric_product(&e1, &e2)
            .unwrap()
            .add(&geometric_product(&e2, &e1).unwrap())
            .unwrap();
        assert!(sum.is_zero());
    }

    #[test]
    fn bivector_squares_to_minus_one() {
        // (e1e2)(e1e2) = e1 e2 e1 e2 = −e1 e1 e2 e2 = −(−1)(−1) = −1
        let s = sig(0, 2);
        let e12 = Multivector::blade(s, 0b11, one());
        let sq = geometric_product(&e12, &e12).unwrap();
        assert_eq!(sq, Multivector::scalar(s, -one()));
    }

    #[test]
    fn mixed_signature_squares() {
        let s = sig(1, 1);
        let e1 = Multivector::generator(s, 1).unwrap();
        let e2 = Multivector::generator(s, 2).unwrap();
        assert_eq!(
            geometric_product(&e1, &e1).unwrap(),
            Multivector::scalar(s, one())
        );
        assert_eq!(
            geometric_product(&e2, &e2).unwrap(),
            Multivector::scalar(s, -one())
        );
    }

    #[test]
    fn signature_mismatch_is_error() {
        let a = Multivector::generator(sig(0, 2), 1).unwrap();
        let b = Multivector::generator(sig(0, 3), 1).unwrap();
        assert!(matches!(
            geometric_product(&a, &b),
            Err(CliffordError::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn signature_bounds() {
        assert!(Signature::new(0, 0).is_err());
        assert!(Signature::new(4, 5).is_err());
        assert!(Signature::new(3, 5).is_ok());
        assert!(Multivector::generator(sig(0, 2), 3).is_err());
        assert!(Multivector::generator(sig(0, 2), 0).is_err());
    }

    #[test]
    fn default_gamma_relations() {
        let g = gamma_default();
        let g0 = g.gamma(0).unwrap();
        assert_eq!(g0.mul(g0).unwrap(), CMatrix::identity(4));
        assert_eq!(g.anticommutator(1, 2).unwrap(), CMatrix::zeros(4));
        assert_eq!(
            g.anticommutator(0, 0).unwrap(),
            CMatrix::scalar(4, Complex64::new(2.0, 0.0))
        );
        assert!(g.worst_anticommutator(0.0).is_none());
        assert!(GammaSet::chiral().worst_anticommutator(0.0).is_none());
    }

    #[test]
    fn invalid_gamma_set_rejected() {
        let mut ms = gamma_default().matrices().to_vec();
        ms[2] = ms[1].clone();
        assert!(matches!(
            GammaSet::new(ms, "broken"),
            Err(CliffordError::AnticommutatorViolated { .. })
        ));
        assert!(matches!(
            GammaSet::new(vec![CMatrix::identity(4)], "short"),
            Err(CliffordError::GammaShape(_))
        ));
    }

    #[test]
    fn one_generator_representation_is_rotation() {
        let rep = Representation::new(sig(0, 1));
        let expected = CMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(rep.generator(1).unwrap(), &expected);
    }

    #[test]
    fn representation_satisfies_relations() {
        for (p, q) in [(0, 1), (0, 2), (1, 3), (2, 1), (0, 5), (3, 3)] {
            let s = sig(p, q);
            let rep = Representation::new(s);
            assert_eq!(rep.dim(), 1 << s.dim().div_ceil(2));
            for a in 1..=s.dim() {
                for b in 1..=s.dim() {
                    let ea = rep.generator(a).unwrap();
                    let eb = rep.generator(b).unwrap();
                    let ac = ea.mul(eb).unwrap().add(&eb.mul(ea).unwrap()).unwrap();
                    let expected = if a == b {
                        CMatrix::scalar(rep.dim(), Complex64::new(2.0 * s.square(a).unwrap(), 0.0))
                    } else {
                        CMatrix::zeros(rep.dim())
                    };
                    assert_eq!(ac, expected, "{s} e{a} e{b}");
                }
            }
        }
    }

    #[test]
    fn matrix_round_trip() {
        let s = sig(1, 2);
        let mut mv = Multivector::zero(s);
        for mask in 0..8u16 {
            mv = mv
                .add(&Multivector::blade(
                    s,
                    mask,
                    Complex64::new(mask as f64 + 0.5, -(mask as f64)),
                ))
                .unwrap();
        }
        let back = Multivector::from_matrix(s, &mv.to_matrix().unwrap()).unwrap();
        assert!(back.max_diff(&mv).unwrap() < 1e-12);
    }

    #[test]
    fn representation_is_a_homomorphism() {
        let s = sig(0, 3);
        let a = Multivector::blade(s, 0b011, Complex64::new(0.5, 1.0))
            .add(&Multivector::scalar(s, one()))
            .unwrap();
        let b = Multivector::blade(s, 0b110, Complex64::new(-2.0, 0.0))
            .add(&Multivector::blade(s, 0b100, one()))
            .unwrap();
        let ab = geometric_product(&a, &b).unwrap().to_matrix().unwrap();
        let ma_mb = a.to_matrix().unwrap().mul(&b.to_matrix().unwrap()).unwrap();
        assert!(ab.max_diff(&ma_mb).unwrap() < 1e-14);
    }

    #[test]
    fn inverse_of_versor_and_general_element() {
        let s = sig(0, 2);
        let e1 = Multivector::generator(s, 1).unwrap();
        let inv = e1.inverse().unwrap();
        assert_eq!(inv, e1.neg());
        let x = Multivector::scalar(s, one())
            .add(&e1.scale(Complex64::new(0.4, 0.0)))
            .unwrap();
        let prod = geometric_product(&x, &x.inverse().unwrap()).unwrap();
        assert!(prod.max_diff(&Multivector::scalar(s, one())).unwrap() < 1e-14);
        assert!(Multivector::zero(s).inverse().is_err());
    }

    #[test]
    fn gamma_set_deserialization_validates() {
        let json = serde_json::to_string(&GammaSet::chiral()).unwrap();
        let back: GammaSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, GammaSet::chiral());
        let mut bad = GammaSet::dirac().matrices().to_vec();
        bad[1] = CMatrix::identity(4);
        let raw = serde_json::json!({ "matrices": bad, "label": "bad" });
        assert!(serde_json::from_value::<GammaSet>(raw).is_err());
    }

    #[test]
    fn signature_deserialization_validates() {
        let ok: Signature = serde_json::from_str(r#"{"p":1,"q_neg":3}"#).unwrap();
        assert_eq!(ok, Signature::new(1, 3).unwrap());
        assert!(serde_json::from_str::<Signature>(r#"{"p":40,"q_neg":0}"#).is_err());
        assert!(serde_json::from_str::<Signature>(r#"{"p":0,"q_neg":0}"#).is_err());
        assert!(Signature::new(usize::MAX, 1).is_err());
    }

    #[test]
    fn gamma_set_rejects_nan() {
        let mut m = GammaSet::dirac().matrices().to_vec();
        m[2] = m[2].scale(Complex64::new(f64::NAN, 0.0));
        assert!(GammaSet::new(m, "nan").is_err());
    }
}
