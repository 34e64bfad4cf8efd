//! Fourier transform, power spectrum and bispectrum on a finite group.
//!
//! A group is given by its multiplication table; its Fourier transform is
//! defined by a complete set of unitary irreducible representations,
//! `f̂(ρ) = Σ_x f(x) ρ(x)`. Clebsch–Gordan matrices for tensor products of
//! irreps are computed numerically by group averaging (see
//! [`clebsch_gordan_matrix`]).
//!
//! Convention: the decomposition matrix `C` satisfies
//! `C (ρ₁ ⊗ ρ₂)(g) C† = ⊕ ρ(g)`, and the bispectrum is
//! `b(ρ₁, ρ₂) = C (f̂(ρ₁) ⊗ f̂(ρ₂))† C† ⊕ f̂(ρ)`, which is invariant under
//! left translation `f^z(x) = f(z⁻¹x)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::cmat::CMatrix;
use crate::error::Axiom;
use crate::{Error, Result, C64};

const REP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroupSpec {
    order: usize,
    mult: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroupSpec {
    /// `mult[x * order + y]` is the index of `x·y`.
    pub fn new(order: usize, mult: Vec<usize>, identity: usize, inverse: Vec<usize>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("group order must be positive"));
        }
        if mult.len() != order * order {
            return Err(Error::DimensionMismatch {
                expected: order * order,
                actual: mult.len(),
            });
        }
        if inverse.len() != order {
            return Err(Error::DimensionMismatch {
                expected: order,
                actual: inverse.len(),
            });
        }
        if identity >= order {
            return Err(Error::Domain("identity index out of range"));
        }
        Ok(FiniteGroupSpec {
            order,
            mult,
            identity,
            inverse,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.mult[x * self.order + y]
    }

    pub fn inv(&self, x: usize) -> usize {
        self.inverse[x]
    }

    pub fn table(&self) -> &[usize] {
        &self.mult
    }

    /// Returns a copy with the table entry for `x·y` replaced.
    pub fn with_entry(&self, x: usize, y: usize, value: usize) -> Self {
        let mut g = self.clone();
        g.mult[x * self.order + y] = value;
        g
    }
}

/// Checks closure, associativity, identity and inverse over the whole table.
/// Reports the first violation found together with its witnesses.
pub fn validate_group(group: &FiniteGroupSpec) -> Result<()> {
    let n = group.order;
    for x in 0..n {
        for y in 0..n {
            if group.mul(x, y) >= n {
                return Err(Error::AxiomViolation {
                    axiom: Axiom::Closure,
                    x,
                    y,
                    z: group.mul(x, y),
                });
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            let xy = group.mul(x, y);
            for z in 0..n {
                if group.mul(xy, z) != group.mul(x, group.mul(y, z)) {
                    return Err(Error::AxiomViolation {
                        axiom: Axiom::Associativity,
                        x,
                        y,
                        z,
                    });
                }
            }
        }
    }
    let e = group.identity;
    for x in 0..n {
        if group.mul(e, x) != x || group.mul(x, e) != x {
            return Err(Error::AxiomViolation {
                axiom: Axiom::Identity,
                x,
                y: e,
                z: e,
            });
        }
    }
    for x in 0..n {
        let xi = group.inv(x);
        if xi >= n || group.mul(x, xi) != e || group.mul(xi, x) != e {
            return Err(Error::AxiomViolation {
                axiom: Axiom::Inverse,
                x,
                y: xi,
                z: e,
            });
        }
    }
    Ok(())
}

/// One irreducible representation: a unitary matrix per group element.
#[derive(Debug, Clone, PartialEq)]
pub struct Irrep {
    mats: Vec<CMatrix>,
}

impl Irrep {
    pub fn new(mats: Vec<CMatrix>) -> Result<Self> {
        let d = mats.first().map(CMatrix::rows).unwrap_or(0);
        if d == 0 || mats.iter().any(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::InvalidRepresentation("matrices must be square and of a common size"));
        }
        Ok(Irrep { mats })
    }

    pub fn dim(&self) -> usize {
        self.mats[0].rows()
    }

    pub fn at(&self, g: usize) -> &CMatrix {
        &self.mats[g]
    }

    pub fn character(&self, g: usize) -> C64 {
        self.mats[g].trace()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrrepSet {
    irreps: Vec<Irrep>,
}

impl IrrepSet {
    pub fn new(irreps: Vec<Irrep>) -> Self {
        IrrepSet { irreps }
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub fn get(&self, r: usize) -> &Irrep {
        &self.irreps[r]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Irrep> {
        self.irreps.iter()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.irreps.iter().map(Irrep::dim).collect()
    }

    /// Largest homomorphism, identity or unitarity defect over all irreps.
    pub fn max_defect(&self, group: &FiniteGroupSpec) -> f64 {
        let mut worst: f64 = 0.0;
        for rep in &self.irreps {
            let id = CMatrix::identity(rep.dim());
            worst = worst.max(rep.at(group.identity()).distance(&id));
            for x in 0..group.order() {
                worst = worst.max(rep.at(group.inv(x)).distance(&rep.at(x).adjoint()));
                for y in 0..group.order() {
                    let prod = rep.at(x) * rep.at(y);
                    worst = worst.max(rep.at(group.mul(x, y)).distance(&prod));
                }
            }
        }
        worst
    }

    /// Checks that every irrep is a unitary homomorphism and that
    /// `Σ d_ρ² = |G|`.
    pub fn validate(&self, group: &FiniteGroupSpec) -> Result<()> {
        if self.irreps.iter().any(|r| r.mats.len() != group.order()) {
            return Err(Error::InvalidRepresentation("one matrix per group element required"));
        }
        if self.max_defect(group) > REP_TOL {
            return Err(Error::InvalidRepresentation("not a unitary homomorphism"));
        }
        let total: usize = self.irreps.iter().map(|r| r.dim() * r.dim()).sum();
        if total != group.order() {
            return Err(Error::InvalidRepresentation("sum of squared dimensions differs from |G|"));
        }
        Ok(())
    }
}

/// `Z_n` with the characters `ρ_k(x) = exp(-2πi·xk/n)`, so the group
/// Fourier transform coincides with [`crate::cyclic::dft`].
pub fn cyclic_group(n: usize) -> Result<(FiniteGroupSpec, IrrepSet)> {
    if n == 0 || n > 64 {
        return Err(Error::Domain("built-in cyclic groups cover 1 <= n <= 64"));
    }
    let mult = (0..n * n).map(|i| (i / n + i % n) % n).collect();
    let inverse = (0..n).map(|x| (n - x) % n).collect();
    let group = FiniteGroupSpec::new(n, mult, 0, inverse)?;
    let irreps = (0..n)
        .map(|k| {
            let mats = (0..n)
                .map(|x| {
                    let ang = -2.0 * PI * ((x * k) % n) as f64 / n as f64;
                    CMatrix::scalar(C64::from_polar(1.0, ang))
                })
                .collect();
            Irrep { mats }
        })
        .collect();
    Ok((group, IrrepSet::new(irreps)))
}

/// Permutations of `{0, 1, 2}` in lexicographic order; index 0 is the identity.
pub const S3_ELEMENTS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// The symmetric group S3 with composition `(xy)(i) = x(y(i))` and its
/// trivial, sign and 2-dimensional standard irreps (in that order).
pub fn symmetric_group_3() -> (FiniteGroupSpec, IrrepSet) {
    let index_of = |p: [usize; 3]| S3_ELEMENTS.iter().position(|q| *q == p).unwrap();
    let mut mult = Vec::with_capacity(36);
    for x in &S3_ELEMENTS {
        for y in &S3_ELEMENTS {
            mult.push(index_of([x[y[0]], x[y[1]], x[y[2]]]));
        }
    }
    let inverse = S3_ELEMENTS
        .iter()
        .map(|p| {
            let mut q = [0; 3];
            for i in 0..3 {
                q[p[i]] = i;
            }
            index_of(q)
        })
        .collect();
    let group = FiniteGroupSpec::new(6, mult, 0, inverse).expect("static table");

    let parity = |p: &[usize; 3]| {
        let mut inversions = 0;
        for i in 0..3 {
            for j in i + 1..3 {
                if p[i] > p[j] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    // Orthonormal basis of the sum-zero plane in R^3.
    let s2 = 1.0 / 2.0f64.sqrt();
    let s6 = 1.0 / 6.0f64.sqrt();
    let basis = [[s2, -s2, 0.0], [s6, s6, -2.0 * s6]];
    let standard = |p: &[usize; 3]| {
        // P e_i = e_{p(i)}, so (B^T P B)_{ab} = Σ_i B[a][p(i)] B[b][i].
        CMatrix::from_fn(2, 2, |a, b| {
            let v: f64 = (0..3).map(|i| basis[a][p[i]] * basis[b][i]).sum();
            C64::new(v, 0.0)
        })
    };
    let trivial = Irrep {
        mats: vec![CMatrix::scalar(C64::new(1.0, 0.0)); 6],
    };
    let sign = Irrep {
        mats: S3_ELEMENTS
            .iter()
            .map(|p| CMatrix::scalar(C64::new(parity(p), 0.0)))
            .collect(),
    };
    let std2 = Irrep {
        mats: S3_ELEMENTS.iter().map(standard).collect(),
    };
    (group, IrrepSet::new(vec![trivial, sign, std2]))
}

/// Fourier components `f̂(ρ)`, one per irrep.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFourier {
    components: Vec<CMatrix>,
}

impl GroupFourier {
    pub fn components(&self) -> &[CMatrix] {
        &self.components
    }

    pub fn get(&self, r: usize) -> &CMatrix {
        &self.components[r]
    }
}

pub fn group_fourier(f: &[C64], irreps: &IrrepSet) -> Result<GroupFourier> {
    let mut components = Vec::with_capacity(irreps.len());
    for rep in irreps.iter() {
        if rep.mats.len() != f.len() {
            return Err(Error::DimensionMismatch {
                expected: rep.mats.len(),
                actual: f.len(),
            });
        }
        let d = rep.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (x, &fx) in f.iter().enumerate() {
            acc = &acc + &rep.mats[x].scale(fx);
        }
        components.push(acc);
    }
    Ok(GroupFourier { components })
}

/// `f^z(x) = f(z⁻¹ x)`.
pub fn left_translate(f: &[C64], z: usize, group: &FiniteGroupSpec) -> Vec<C64> {
    let zi = group.inv(z);
    (0..group.order()).map(|x| f[group.mul(zi, x)]).collect()
}

/// `q(ρ) = f̂(ρ)† f̂(ρ)` for every irrep.
pub fn group_power_spectrum(fourier: &GroupFourier) -> Vec<CMatrix> {
    fourier.components.iter().map(|c| &c.adjoint() * c).collect()
}

/// Unitary `C` with `C (ρ₁ ⊗ ρ₂)(g) C† = ⊕_k ρ_{blocks[k]}(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCGDecomposition {
    c: CMatrix,
    blocks: Vec<usize>,
}

impl GroupCGDecomposition {
    pub fn matrix(&self) -> &CMatrix {
        &self.c
    }

    /// Irrep index of each diagonal block, repeated by multiplicity.
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Largest Frobenius residual of the block-diagonalisation over all `g`.
    pub fn residual(&self, r1: usize, r2: usize, irreps: &IrrepSet, group: &FiniteGroupSpec) -> f64 {
        let (a, b) = (irreps.get(r1), irreps.get(r2));
        let cd = self.c.adjoint();
        (0..group.order())
            .map(|g| {
                let t = a.at(g).kron(b.at(g));
                let lhs = &(&self.c * &t) * &cd;
                let rhs = CMatrix::direct_sum(self.blocks.iter().map(|&r| irreps.get(r).at(g)));
                lhs.distance(&rhs)
            })
            .fold(0.0, f64::max)
    }
}

/// Multiplicity of irrep `r` in `ρ₁ ⊗ ρ₂` from the character inner product.
pub fn tensor_multiplicity(r1: usize, r2: usize, r: usize, irreps: &IrrepSet, order: usize) -> usize {
    let (a, b, c) = (irreps.get(r1), irreps.get(r2), irreps.get(r));
    let s: C64 = (0..order)
        .map(|g| a.character(g) * b.character(g) * c.character(g).conj())
        .sum();
    (s.re / order as f64).round().max(0.0) as usize
}

/// Decomposes `ρ₁ ⊗ ρ₂` into irreps.
///
/// For each irrep `ρ` the intertwiners `X` with `(ρ₁⊗ρ₂)(g) X = X ρ(g)` are
/// obtained by averaging `(ρ₁⊗ρ₂)(g) S ρ(g)†` over the group, seeding `S`
/// with every matrix unit. By Schur's lemma `Y†X` is a multiple of the
/// identity for any two intertwiners, which makes Gram–Schmidt on the
/// averaged seeds produce orthonormal copies. The rows of `C` are the
/// adjoints of those copies.
pub fn clebsch_gordan_matrix(
    r1: usize,
    r2: usize,
    irreps: &IrrepSet,
    group: &FiniteGroupSpec,
) -> Result<GroupCGDecomposition> {
    let order = group.order();
    let (a, b) = (irreps.get(r1), irreps.get(r2));
    let dim = a.dim() * b.dim();
    let tensor: Vec<CMatrix> = (0..order).map(|g| a.at(g).kron(b.at(g))).collect();

    let mut rows: Vec<CMatrix> = Vec::new();
    let mut blocks = Vec::new();
    for (r, rep) in irreps.iter().enumerate() {
        let mult = tensor_multiplicity(r1, r2, r, irreps, order);
        if mult == 0 {
            continue;
        }
        let d = rep.dim();
        let weight = C64::new(d as f64 / order as f64, 0.0);
        let mut found: Vec<CMatrix> = Vec::new();
        'seeds: for sa in 0..dim {
            for sb in 0..d {
                // X[i][j] = (d/|G|) Σ_g T(g)[i][sa] · conj(ρ(g)[j][sb])
                let mut x = CMatrix::zeros(dim, d);
                for g in 0..order {
                    let (t, p) = (&tensor[g], rep.at(g));
                    for i in 0..dim {
                        let ti = t[(i, sa)];
                        for j in 0..d {
                            x[(i, j)] += ti * p[(j, sb)].conj();
                        }
                    }
                }
                let mut x = x.scale(weight);
                for _ in 0..2 {
                    for y in &found {
                        let overlap = (&y.adjoint() * &x).trace() / d as f64;
                        x = &x - &y.scale(overlap);
                    }
                }
                let norm2 = (&x.adjoint() * &x).trace().re / d as f64;
                if norm2 > 1e-8 {
                    found.push(x.scale(C64::new(1.0 / norm2.sqrt(), 0.0)));
                    if found.len() == mult {
                        break 'seeds;
                    }
                }
            }
        }
        if found.len() != mult {
            return Err(Error::DecompositionFailure {
                residual: f64::INFINITY,
            });
        }
        for y in found {
            rows.push(y.adjoint());
            blocks.push(r);
        }
    }

    let total: usize = rows.iter().map(CMatrix::rows).sum();
    if total != dim {
        return Err(Error::DecompositionFailure {
            residual: f64::INFINITY,
        });
    }
    let mut c = CMatrix::zeros(dim, dim);
    let mut r0 = 0;
    for block in &rows {
        for i in 0..block.rows() {
            for j in 0..dim {
                c[(r0 + i, j)] = block[(i, j)];
            }
        }
        r0 += block.rows();
    }
    let decomposition = GroupCGDecomposition { c, blocks };
    let unitarity = (&decomposition.c * &decomposition.c.adjoint()).distance(&CMatrix::identity(dim));
    let residual = decomposition.residual(r1, r2, irreps, group).max(unitarity);
    if !(residual <= REP_TOL) {
        return Err(Error::DecompositionFailure { residual });
    }
    Ok(decomposition)
}

/// Decompositions for every ordered irrep pair, computed once.
#[derive(Debug, Clone)]
pub struct GroupCGTable {
    count: usize,
    pairs: Vec<GroupCGDecomposition>,
}

impl GroupCGTable {
    pub fn build(irreps: &IrrepSet, group: &FiniteGroupSpec) -> Result<Self> {
        let count = irreps.len();
        let mut pairs = Vec::with_capacity(count * count);
        for r1 in 0..count {
            for r2 in 0..count {
                pairs.push(clebsch_gordan_matrix(r1, r2, irreps, group)?);
            }
        }
        Ok(GroupCGTable { count, pairs })
    }

    pub fn irrep_count(&self) -> usize {
        self.count
    }

    pub fn get(&self, r1: usize, r2: usize) -> &GroupCGDecomposition {
        &self.pairs[r1 * self.count + r2]
    }
}

/// `b(ρ₁, ρ₂)` for all ordered pairs, laid out as `r1 * count + r2`.
pub fn group_bispectrum(fourier: &GroupFourier, table: &GroupCGTable) -> Result<Vec<CMatrix>> {
    let count = table.irrep_count();
    if fourier.components.len() != count {
        return Err(Error::DimensionMismatch {
            expected: count,
            actual: fourier.components.len(),
        });
    }
    let mut out = Vec::with_capacity(count * count);
    for r1 in 0..count {
        for r2 in 0..count {
            let cg = table.get(r1, r2);
            let coupled = fourier.get(r1).kron(fourier.get(r2)).adjoint();
            if coupled.rows() != cg.c.rows() {
                return Err(Error::DimensionMismatch {
                    expected: cg.c.rows(),
                    actual: coupled.rows(),
                });
            }
            let sum = CMatrix::direct_sum(cg.blocks.iter().map(|&r| fourier.get(r)));
            let left = &(&cg.c * &coupled) * &cg.c.adjoint();
            out.push(&left * &sum);
        }
    }
    Ok(out)
}
