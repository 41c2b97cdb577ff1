//! F_q-linear maps of F_{q^n} in q-polynomial form: x ↦ Σ a_i x^{q^i}.
//!
//! Every F_q-linear map has a unique such representation with q-degree
//! below n, so equality is coefficient equality. Inversion goes through the
//! F_p-matrix of the map (images of the power basis, Gaussian elimination)
//! followed by re-interpolation, which keeps every step exactly checkable.

use crate::error::{Error, Result};
use crate::ffield::{FieldCtx, FqnElem};
use std::fmt;
use std::sync::Arc;

/// A q-polynomial Σ a_i x^{q^i} with coefficient vector of length n.
#[derive(Clone)]
pub struct LinearizedPoly {
    ctx: Arc<FieldCtx>,
    coeffs: Vec<FqnElem>,
}

impl fmt::Debug for LinearizedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

impl PartialEq for LinearizedPoly {
    fn eq(&self, other: &Self) -> bool {
        *self.ctx == *other.ctx && self.coeffs == other.coeffs
    }
}
impl Eq for LinearizedPoly {}

impl LinearizedPoly {
    pub fn new(ctx: &Arc<FieldCtx>, coeffs: Vec<FqnElem>) -> Result<Self> {
        if coeffs.len() != ctx.n() as usize {
            return Err(Error::Invalid(format!(
                "expected {} coefficients, got {}",
                ctx.n(),
                coeffs.len()
            )));
        }
        Ok(LinearizedPoly {
            ctx: Arc::clone(ctx),
            coeffs,
        })
    }

    pub fn zero(ctx: &Arc<FieldCtx>) -> Self {
        LinearizedPoly {
            ctx: Arc::clone(ctx),
            coeffs: vec![FqnElem::ZERO; ctx.n() as usize],
        }
    }

    pub fn identity(ctx: &Arc<FieldCtx>) -> Self {
        Self::monomial(ctx, FqnElem::ONE, 0)
    }

    /// c · x^{q^i} (the exponent is reduced mod n).
    pub fn monomial(ctx: &Arc<FieldCtx>, c: FqnElem, i: i64) -> Self {
        let n = ctx.n() as i64;
        let mut coeffs = vec![FqnElem::ZERO; n as usize];
        coeffs[i.rem_euclid(n) as usize] = c;
        LinearizedPoly {
            ctx: Arc::clone(ctx),
            coeffs,
        }
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[FqnElem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_ctx(&self, other: &Self) -> Result<()> {
        if *self.ctx == *other.ctx {
            Ok(())
        } else {
            Err(Error::CtxMismatch)
        }
    }

    pub fn eval(&self, x: FqnElem) -> FqnElem {
        let f = &self.ctx;
        let mut acc = FqnElem::ZERO;
        let mut xqi = x;
        for &c in &self.coeffs {
            if !c.is_zero() {
                acc = f.add(acc, f.mul(c, xqi));
            }
            xqi = f.frobenius(xqi, 1);
        }
        acc
    }

    /// Full value table indexed by element index; used by the scan loops.
    pub fn value_table(&self) -> Vec<FqnElem> {
        self.ctx.all_elements().map(|x| self.eval(x)).collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| self.ctx.add(a, b))
            .collect();
        Ok(LinearizedPoly {
            ctx: Arc::clone(&self.ctx),
            coeffs,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| self.ctx.sub(a, b))
            .collect();
        Ok(LinearizedPoly {
            ctx: Arc::clone(&self.ctx),
            coeffs,
        })
    }

    /// c · f, for c ∈ F_{q^n} (left scalar multiple of the values).
    pub fn scale(&self, c: FqnElem) -> Self {
        LinearizedPoly {
            ctx: Arc::clone(&self.ctx),
            coeffs: self.coeffs.iter().map(|&a| self.ctx.mul(c, a)).collect(),
        }
    }

    /// Composition f∘g reduced mod x^{q^n} - x:
    /// c_k = Σ_{i+j ≡ k (mod n)} f_i · g_j^{q^i}.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        self.check_ctx(g)?;
        let f = &self.ctx;
        let n = f.n() as usize;
        let mut out = vec![FqnElem::ZERO; n];
        for (i, &fi) in self.coeffs.iter().enumerate() {
            if fi.is_zero() {
                continue;
            }
            for (j, &gj) in g.coeffs.iter().enumerate() {
                if gj.is_zero() {
                    continue;
                }
                let k = (i + j) % n;
                out[k] = f.add(out[k], f.mul(fi, f.frobenius(gj, i as i64)));
            }
        }
        Ok(LinearizedPoly {
            ctx: Arc::clone(&self.ctx),
            coeffs: out,
        })
    }

    /// Adjoint with respect to the trace form: Tr(x·f(y)) = Tr(f̂(x)·y),
    /// given by f̂(x) = Σ a_i^{q^{n-i}} x^{q^{n-i}}.
    pub fn adjoint(&self) -> Self {
        let f = &self.ctx;
        let n = f.n() as usize;
        let mut out = vec![FqnElem::ZERO; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let k = (n - i) % n;
            out[k] = f.frobenius(c, k as i64);
        }
        LinearizedPoly {
            ctx: Arc::clone(&self.ctx),
            coeffs: out,
        }
    }

    /// F_p-matrix of the map in the power basis 1, x, ..., x^{hn-1}.
    pub fn fp_matrix(&self) -> FpMatrix {
        FpMatrix::from_map(&self.ctx, |x| self.eval(x))
    }

    /// Rank as an F_q-linear map together with an F_q-basis of the kernel.
    pub fn rank(&self) -> (u32, Vec<FqnElem>) {
        let m = self.fp_matrix();
        let h = self.ctx.h();
        let rank_p = m.rank() as u32;
        debug_assert_eq!(rank_p % h, 0);
        let kernel_p = m.kernel_basis();
        // The kernel is an F_q-space; extract an F_q-basis greedily.
        let mut basis: Vec<FqnElem> = Vec::new();
        let mut span = FpSpan::new(&self.ctx);
        for v in kernel_p {
            let e = self.ctx.from_coeffs(&v).expect("kernel vector in range");
            if span.insert_with_fq_closure(e) {
                basis.push(e);
            }
        }
        (rank_p / h, basis)
    }

    pub fn is_bijective(&self) -> bool {
        self.rank().0 == self.ctx.n()
    }

    /// Two-sided compositional inverse.
    pub fn inverse(&self) -> Result<Self> {
        let m = self.fp_matrix();
        let inv = m.inverse().ok_or_else(|| {
            let (r, _) = self.rank();
            Error::SingularMap {
                kernel_dim: self.ctx.n() - r,
            }
        })?;
        // Tabulate the inverse on an F_q-basis and re-interpolate.
        let f = &self.ctx;
        let pairs: Vec<(FqnElem, FqnElem)> = (0..f.n())
            .map(|j| {
                let b = f.g_pow(j as u64);
                let digits = f.coeffs(b);
                let img = inv.apply(&digits);
                (b, f.from_coeffs(&img).expect("in range"))
            })
            .collect();
        let poly = interpolate_basis(&self.ctx, &pairs)?;
        Ok(poly)
    }

    /// Text form "a_0·X^[0] + a_1·X^[1] + ...", omitting zero terms.
    pub fn text(&self) -> String {
        let mut parts = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("{}*X^[{}]", self.ctx.format_element(c), i));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }

    /// JSON form: array of element strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs
            .iter()
            .map(|&c| self.ctx.format_element(c))
            .collect()
    }
}

/// Interpolate the unique q-polynomial from a full value table. The table
/// must describe an F_q-linear map; this is verified by a full scan.
pub fn interpolate(ctx: &Arc<FieldCtx>, table: &[FqnElem]) -> Result<LinearizedPoly> {
    if table.len() != ctx.order() as usize {
        return Err(Error::Invalid(format!(
            "value table has {} entries, field has {}",
            table.len(),
            ctx.order()
        )));
    }
    let pairs: Vec<(FqnElem, FqnElem)> = (0..ctx.n())
        .map(|j| {
            let b = ctx.g_pow(j as u64);
            (b, table[b.index() as usize])
        })
        .collect();
    let poly = interpolate_basis(ctx, &pairs)?;
    for x in ctx.all_elements() {
        if poly.eval(x) != table[x.index() as usize] {
            return Err(Error::NonLinearTable {
                at: x.index() as u64,
            });
        }
    }
    Ok(poly)
}

/// Solve the Moore system Σ_i a_i b_j^{q^i} = v_j for the coefficients,
/// given n pairs (b_j, v_j) whose first components form an F_q-basis.
pub fn interpolate_basis(
    ctx: &Arc<FieldCtx>,
    pairs: &[(FqnElem, FqnElem)],
) -> Result<LinearizedPoly> {
    let n = ctx.n() as usize;
    if pairs.len() != n {
        return Err(Error::Invalid(format!(
            "need {} interpolation pairs, got {}",
            n,
            pairs.len()
        )));
    }
    // basis check
    let mut span = FpSpan::new(ctx);
    for &(b, _) in pairs {
        if !span.insert_with_fq_closure(b) {
            return Err(Error::Invalid(
                "interpolation points are not F_q-independent".into(),
            ));
        }
    }
    // Moore matrix rows: [b_j^{q^0}, ..., b_j^{q^{n-1}} | v_j]
    let mut rows: Vec<Vec<FqnElem>> = pairs
        .iter()
        .map(|&(b, v)| {
            let mut row: Vec<FqnElem> = (0..n).map(|i| ctx.frobenius(b, i as i64)).collect();
            row.push(v);
            row
        })
        .collect();
    // Gaussian elimination over F_{q^n}.
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !rows[r][col].is_zero())
            .ok_or_else(|| Error::Invalid("singular Moore system".into()))?;
        rows.swap(col, piv);
        let inv = ctx.inv(rows[col][col])?;
        for c in col..=n {
            rows[col][c] = ctx.mul(rows[col][c], inv);
        }
        for r in 0..n {
            if r != col && !rows[r][col].is_zero() {
                let factor = rows[r][col];
                for c in col..=n {
                    let sub = ctx.mul(factor, rows[col][c]);
                    rows[r][c] = ctx.sub(rows[r][c], sub);
                }
            }
        }
    }
    let coeffs = rows.into_iter().map(|r| r[n]).collect();
    LinearizedPoly::new(ctx, coeffs)
}

// ---------------------------------------------------------------------------
// Named families.
// ---------------------------------------------------------------------------

/// A_{a,r}(x) = x^{q^r} - a·x^{q^{-r}}.
pub fn family_a(ctx: &Arc<FieldCtx>, a: FqnElem, r: i64) -> LinearizedPoly {
    let plus = LinearizedPoly::monomial(ctx, FqnElem::ONE, r);
    let minus = LinearizedPoly::monomial(ctx, ctx.neg(a), -r);
    plus.add(&minus).expect("same ctx")
}

/// H_{b,r}(x) = x - b·x^{q^r}.
pub fn family_h(ctx: &Arc<FieldCtx>, b: FqnElem, r: i64) -> LinearizedPoly {
    let id = LinearizedPoly::identity(ctx);
    let tw = LinearizedPoly::monomial(ctx, ctx.neg(b), r);
    id.add(&tw).expect("same ctx")
}

/// B_{b,r}(x) = 2·H_{b,r}^{-1}(x) - x. Undefined in characteristic 2 (the
/// scalar 2 degenerates) and when H_{b,r} is singular, i.e. N(b) = 1.
pub fn family_b(ctx: &Arc<FieldCtx>, b: FqnElem, r: i64) -> Result<LinearizedPoly> {
    if ctx.p() == 2 {
        return Err(Error::EvenCharacteristic(2));
    }
    let h = family_h(ctx, b, r);
    let hinv = h.inverse()?;
    let two = ctx.add(FqnElem::ONE, FqnElem::ONE);
    let id = LinearizedPoly::identity(ctx);
    hinv.scale(two).sub(&id)
}

/// Constraint check for A_{a,r} as used in the spread constructions:
/// gcd(r, n) = 1 and N(a) ≠ 1.
pub fn validate_family_a(ctx: &Arc<FieldCtx>, a: FqnElem, r: i64) -> Result<()> {
    validate_twist_exponent(ctx, r)?;
    if a.is_zero() {
        return Err(Error::FamilyConstraint {
            family: "A".into(),
            reason: "a must be nonzero".into(),
        });
    }
    if ctx.norm_q(a) == FqnElem::ONE {
        return Err(Error::FamilyConstraint {
            family: "A".into(),
            reason: format!("N_q(a) = 1 for a = {}", ctx.format_element(a)),
        });
    }
    Ok(())
}

/// Constraint check for B_{b,r}: gcd(r, n) = 1 and N(b) ≠ ±1.
pub fn validate_family_b(ctx: &Arc<FieldCtx>, b: FqnElem, r: i64) -> Result<()> {
    validate_twist_exponent(ctx, r)?;
    if b.is_zero() {
        return Err(Error::FamilyConstraint {
            family: "B".into(),
            reason: "b must be nonzero".into(),
        });
    }
    let nb = ctx.norm_q(b);
    if nb == FqnElem::ONE || nb == ctx.neg(FqnElem::ONE) {
        return Err(Error::FamilyConstraint {
            family: "B".into(),
            reason: format!(
                "N_q(b) ∈ {{1, -1}} for b = {} (N_q(b) = {})",
                ctx.format_element(b),
                ctx.format_element(nb)
            ),
        });
    }
    Ok(())
}

fn validate_twist_exponent(ctx: &Arc<FieldCtx>, r: i64) -> Result<()> {
    let n = ctx.n() as i64;
    let rr = r.rem_euclid(n) as u64;
    if rr == 0 || gcd(rr, n as u64) != 1 {
        return Err(Error::FamilyConstraint {
            family: "twist".into(),
            reason: format!("gcd(r, n) must be 1 (r = {r}, n = {n})"),
        });
    }
    Ok(())
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// F_p-matrix machinery (rank, kernel, inverse of F_q-linear maps).
// ---------------------------------------------------------------------------

/// A square matrix over F_p acting on packed coefficient vectors; realizes
/// an F_p-linear endomorphism of F_{q^n} in the power basis.
#[derive(Clone, Debug)]
pub struct FpMatrix {
    p: u64,
    dim: usize,
    /// data[r][c], row-major.
    data: Vec<u8>,
}

impl FpMatrix {
    /// Build from explicit columns (each of length `dim`).
    pub fn from_columns(p: u64, dim: usize, cols: &[Vec<u8>]) -> Self {
        debug_assert_eq!(cols.len(), dim);
        let mut data = vec![0u8; dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * dim + j] = v;
            }
        }
        FpMatrix { p, dim, data }
    }

    pub fn from_map(ctx: &Arc<FieldCtx>, f: impl Fn(FqnElem) -> FqnElem) -> Self {
        let dim = (ctx.h() * ctx.n()) as usize;
        let p = ctx.p();
        let mut data = vec![0u8; dim * dim];
        for j in 0..dim {
            let e_j = ctx
                .from_coeffs(&(0..dim).map(|i| u8::from(i == j)).collect::<Vec<_>>())
                .expect("basis vector");
            let img = ctx.coeffs(f(e_j));
            for i in 0..dim {
                data[i * dim + j] = img[i];
            }
        }
        FpMatrix { p, dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &[u8]) -> Vec<u8> {
        let p = self.p;
        (0..self.dim)
            .map(|i| {
                let mut acc = 0u64;
                for j in 0..self.dim {
                    acc += self.data[i * self.dim + j] as u64 * v[j] as u64;
                }
                (acc % p) as u8
            })
            .collect()
    }

    fn inv_mod_p(&self, a: u64) -> u64 {
        // p is prime and tiny; Fermat works fine.
        let mut acc = 1u64;
        let mut b = a % self.p;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % self.p;
            }
            b = b * b % self.p;
            e >>= 1;
        }
        acc
    }

    /// Row-reduce a copy; returns (rank, reduced matrix, pivot columns).
    fn echelon(&self) -> (usize, Vec<u8>, Vec<usize>) {
        let p = self.p;
        let dim = self.dim;
        let mut m = self.data.clone();
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..dim {
            let Some(pr) = (row..dim).find(|&r| m[r * dim + col] != 0) else {
                continue;
            };
            for c in 0..dim {
                m.swap(row * dim + c, pr * dim + c);
            }
            let inv = self.inv_mod_p(m[row * dim + col] as u64);
            for c in 0..dim {
                m[row * dim + c] = (m[row * dim + c] as u64 * inv % p) as u8;
            }
            for r in 0..dim {
                if r != row {
                    let f = m[r * dim + col] as u64;
                    if f != 0 {
                        for c in 0..dim {
                            let sub = f * m[row * dim + c] as u64 % p;
                            m[r * dim + c] = ((m[r * dim + c] as u64 + p - sub) % p) as u8;
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
            if row == dim {
                break;
            }
        }
        (row, m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.echelon().0
    }

    /// A basis of the right kernel, as coefficient vectors.
    pub fn kernel_basis(&self) -> Vec<Vec<u8>> {
        let (rank, m, pivots) = self.echelon();
        let dim = self.dim;
        let p = self.p;
        let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
        let mut out = Vec::with_capacity(dim - rank);
        for &fc in &free {
            let mut v = vec![0u8; dim];
            v[fc] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                let coeff = m[r * dim + fc] as u64;
                v[pc] = ((p - coeff) % p) as u8;
            }
            out.push(v);
        }
        out
    }

    pub fn inverse(&self) -> Option<FpMatrix> {
        let p = self.p;
        let dim = self.dim;
        // augmented [M | I]
        let width = 2 * dim;
        let mut m = vec![0u8; dim * width];
        for r in 0..dim {
            for c in 0..dim {
                m[r * width + c] = self.data[r * dim + c];
            }
            m[r * width + dim + r] = 1;
        }
        for col in 0..dim {
            let pr = (col..dim).find(|&r| m[r * width + col] != 0)?;
            for c in 0..width {
                m.swap(col * width + c, pr * width + c);
            }
            let inv = self.inv_mod_p(m[col * width + col] as u64);
            for c in 0..width {
                m[col * width + c] = (m[col * width + c] as u64 * inv % p) as u8;
            }
            for r in 0..dim {
                if r != col {
                    let f = m[r * width + col] as u64;
                    if f != 0 {
                        for c in 0..width {
                            let sub = f * m[col * width + c] as u64 % p;
                            m[r * width + c] = ((m[r * width + c] as u64 + p - sub) % p) as u8;
                        }
                    }
                }
            }
        }
        let mut data = vec![0u8; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = m[r * width + dim + c];
            }
        }
        Some(FpMatrix { p, dim, data })
    }
}

/// Incremental F_p-span of field elements, with optional F_q-closure
/// (inserting e also inserts λe for an F_q-spanning set of λ).
pub struct FpSpan {
    ctx: Arc<FieldCtx>,
    rows: Vec<Vec<u8>>, // reduced echelon rows over F_p
}

impl FpSpan {
    pub fn new(ctx: &Arc<FieldCtx>) -> Self {
        FpSpan {
            ctx: Arc::clone(ctx),
            rows: Vec::new(),
        }
    }

    pub fn fp_dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, mut v: Vec<u8>) -> Vec<u8> {
        let p = self.ctx.p();
        for row in &self.rows {
            let lead = row.iter().position(|&c| c != 0).unwrap();
            let f = v[lead] as u64;
            if f != 0 {
                for (vi, &ri) in v.iter_mut().zip(row.iter()) {
                    *vi = ((*vi as u64 + p - f * ri as u64 % p) % p) as u8;
                }
            }
        }
        v
    }

    /// Insert a single F_p-vector; true if it enlarged the span.
    pub fn insert(&mut self, e: FqnElem) -> bool {
        let v = self.reduce(self.ctx.coeffs(e));
        let Some(lead) = v.iter().position(|&c| c != 0) else {
            return false;
        };
        // normalize leading entry to 1
        let p = self.ctx.p();
        let inv = {
            let mut acc = 1u64;
            let mut b = v[lead] as u64;
            let mut e = p - 2;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * b % p;
                }
                b = b * b % p;
                e >>= 1;
            }
            acc
        };
        let mut v: Vec<u8> = v.iter().map(|&c| (c as u64 * inv % p) as u8).collect();
        // keep rows fully reduced against each other
        for row in &mut self.rows {
            let f = row[lead] as u64;
            if f != 0 {
                for (ri, &vi) in row.iter_mut().zip(v.iter()) {
                    *ri = ((*ri as u64 + p - f * vi as u64 % p) % p) as u8;
                }
            }
        }
        v = self.reduce(v);
        let lead = v.iter().position(|&c| c != 0).unwrap();
        let pos = self
            .rows
            .iter()
            .position(|r| r.iter().position(|&c| c != 0).unwrap() > lead)
            .unwrap_or(self.rows.len());
        self.rows.insert(pos, v);
        true
    }

    /// Insert the F_q-line through e: e, g_q·e, g_q^2·e, ... for a spanning
    /// set of F_q over F_p. Returns true if e was new.
    pub fn insert_with_fq_closure(&mut self, e: FqnElem) -> bool {
        if e.is_zero() {
            return false;
        }
        let fresh = self.insert(e);
        if fresh && self.ctx.h() > 1 {
            // multiply by a power basis of F_q over F_p
            let q_gen_pows: Vec<FqnElem> = {
                // F_q = fixed field of Frobenius; its elements are x with
                // x^q = x. A generator of F_q^* is g^{(q^n-1)/(q-1)}.
                let k = self.ctx.group_order() / (self.ctx.q() - 1);
                let gq = self.ctx.g_pow(k);
                (0..self.ctx.h()).map(|i| self.ctx.pow(gq, i as i64)).collect()
            };
            for w in q_gen_pows {
                self.insert(self.ctx.mul(w, e));
            }
        }
        fresh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::make_field;
    use proptest::prelude::*;

    #[test]
    fn eval_basics() {
        let f = make_field(3, 1, 3).unwrap();
        let id = LinearizedPoly::identity(&f);
        let frob = LinearizedPoly::monomial(&f, FqnElem::ONE, 1);
        for x in f.all_elements() {
            assert_eq!(id.eval(x), x);
            assert_eq!(frob.eval(x), f.frobenius(x, 1));
        }
        // A_{a,r} restricted to F_q is multiplication by (1 - a)
        let a = f.g_pow(7);
        let pa = family_a(&f, a, 1);
        for x in f.all_elements().filter(|&x| f.in_base_subfield(x)) {
            assert_eq!(pa.eval(x), f.mul(x, f.sub(FqnElem::ONE, a)));
        }
    }

    #[test]
    fn interpolation_round_trips() {
        let f = make_field(3, 1, 3).unwrap();
        let frob_table: Vec<FqnElem> = f.all_elements().map(|x| f.frobenius(x, 1)).collect();
        let p = interpolate(&f, &frob_table).unwrap();
        assert_eq!(p, LinearizedPoly::monomial(&f, FqnElem::ONE, 1));

        let c = f.g_pow(11);
        let scal_table: Vec<FqnElem> = f.all_elements().map(|x| f.mul(c, x)).collect();
        let p = interpolate(&f, &scal_table).unwrap();
        assert_eq!(p, LinearizedPoly::monomial(&f, c, 0));

        // a non-linear table is rejected
        let mut bad = frob_table;
        bad[5] = f.add(bad[5], FqnElem::ONE);
        assert!(interpolate(&f, &bad).is_err());
    }

    #[test]
    fn inverse_of_h_family() {
        // H_{b,1} over GF(27), b = g: N(g) = -1 ≠ 1 so H is invertible.
        let f = make_field(3, 1, 3).unwrap();
        let h = family_h(&f, f.generator(), 1);
        let hinv = h.inverse().unwrap();
        let id = LinearizedPoly::identity(&f);
        assert_eq!(h.compose(&hinv).unwrap(), id);
        assert_eq!(hinv.compose(&h).unwrap(), id);
        for x in f.all_elements() {
            assert_eq!(h.eval(hinv.eval(x)), x);
        }
        // interpolating the tabulated inverse gives the same polynomial
        let table: Vec<FqnElem> = {
            let mut t = vec![FqnElem::ZERO; f.order() as usize];
            for x in f.all_elements() {
                t[h.eval(x).index() as usize] = x;
            }
            t
        };
        assert_eq!(interpolate(&f, &table).unwrap(), hinv);

        // q = 5 case
        let f5 = make_field(5, 1, 3).unwrap();
        let h5 = family_h(&f5, f5.generator(), 1);
        let h5inv = h5.inverse().unwrap();
        for x in f5.all_elements() {
            assert_eq!(h5.eval(h5inv.eval(x)), x);
        }
    }

    #[test]
    fn compose_cases() {
        let f = make_field(3, 1, 3).unwrap();
        let frob = LinearizedPoly::monomial(&f, FqnElem::ONE, 1);
        let frob2 = frob.compose(&frob).unwrap();
        assert_eq!(frob2, LinearizedPoly::monomial(&f, FqnElem::ONE, 2));
        let id = LinearizedPoly::identity(&f);
        let g = family_a(&f, f.g_pow(3), 1);
        assert_eq!(id.compose(&g).unwrap(), g);
        // pointwise agreement on the whole field
        let comp = g.compose(&frob).unwrap();
        for x in f.all_elements() {
            assert_eq!(comp.eval(x), g.eval(frob.eval(x)));
        }
    }

    #[test]
    fn inverse_simple_cases() {
        let f = make_field(3, 1, 3).unwrap();
        let id = LinearizedPoly::identity(&f);
        assert_eq!(id.inverse().unwrap(), id);
        let c = f.g_pow(9);
        let sc = LinearizedPoly::monomial(&f, c, 0);
        assert_eq!(
            sc.inverse().unwrap(),
            LinearizedPoly::monomial(&f, f.inv(c).unwrap(), 0)
        );
        let zero = LinearizedPoly::zero(&f);
        assert!(matches!(
            zero.inverse(),
            Err(Error::SingularMap { kernel_dim: 3 })
        ));
    }

    #[test]
    fn adjoint_duality_and_involution() {
        let f = make_field(3, 1, 3).unwrap();
        let poly = LinearizedPoly::new(
            &f,
            vec![f.g_pow(4), f.g_pow(17), f.neg(FqnElem::ONE)],
        )
        .unwrap();
        let adj = poly.adjoint();
        assert_eq!(adj.adjoint(), poly);
        for x in f.all_elements() {
            for y in f.all_elements() {
                assert_eq!(
                    f.trace_q(f.mul(x, poly.eval(y))),
                    f.trace_q(f.mul(adj.eval(x), y))
                );
            }
        }
        let id = LinearizedPoly::identity(&f);
        assert_eq!(id.adjoint(), id);
    }

    #[test]
    fn adjoint_of_named_families() {
        // Coefficient-level identities: Â_{a,r} = A_{a^{q^r}, -r} and
        // B̂_{b,r} = B_{b^{q^{-r}}, -r}.
        let f = make_field(5, 1, 3).unwrap();
        for (ai, r) in [(1u64, 1i64), (7, 1), (12, 2), (30, 2)] {
            let a = f.g_pow(ai);
            if f.norm_q(a) == FqnElem::ONE {
                continue;
            }
            let lhs = family_a(&f, a, r).adjoint();
            let rhs = family_a(&f, f.frobenius(a, r), -r);
            assert_eq!(lhs, rhs);
        }
        for (bi, r) in [(1u64, 1i64), (2, 1), (9, 2)] {
            let b = f.g_pow(bi);
            if validate_family_b(&f, b, r).is_err() {
                continue;
            }
            let lhs = family_b(&f, b, r).unwrap().adjoint();
            let rhs = family_b(&f, f.frobenius(b, -r), -r).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn rank_and_kernels() {
        let f = make_field(3, 1, 3).unwrap();
        assert_eq!(LinearizedPoly::identity(&f).rank().0, 3);
        assert_eq!(LinearizedPoly::zero(&f).rank().0, 0);
        // H_{b,1} is singular exactly for the 13 values with N(b) = 1
        let mut singular = 0u32;
        for b in f.all_elements().filter(|b| !b.is_zero()) {
            let h = family_h(&f, b, 1);
            let (r, kernel) = h.rank();
            if r < 3 {
                singular += 1;
                assert_eq!(f.norm_q(b), FqnElem::ONE);
                for k in kernel {
                    assert_eq!(h.eval(k), FqnElem::ZERO);
                }
            } else {
                assert_ne!(f.norm_q(b), FqnElem::ONE);
            }
        }
        assert_eq!(singular, 13);
    }

    #[test]
    fn family_b_properties() {
        let f = make_field(5, 1, 3).unwrap();
        // b = 0 degenerates to the identity
        assert_eq!(
            family_b(&f, FqnElem::ZERO, 1).unwrap(),
            LinearizedPoly::identity(&f)
        );
        // b = g at q = 5 is valid and bijective
        let b = f.generator();
        validate_family_b(&f, b, 1).unwrap();
        let pb = family_b(&f, b, 1).unwrap();
        assert!(pb.is_bijective());
        // even characteristic is rejected
        let f2 = make_field(2, 1, 3).unwrap();
        assert!(family_b(&f2, f2.generator(), 1).is_err());
    }

    #[test]
    fn validators() {
        let f3 = make_field(3, 1, 3).unwrap();
        // at q = 3 every nonzero b has N(b) ∈ {1, -1}
        for b in f3.all_elements().filter(|b| !b.is_zero()) {
            assert!(validate_family_b(&f3, b, 1).is_err());
        }
        assert!(validate_family_a(&f3, f3.generator(), 3).is_err()); // gcd(3,3) ≠ 1
        let f5 = make_field(5, 1, 3).unwrap();
        assert!(validate_family_b(&f5, f5.generator(), 1).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn adjoint_involution_random(c0 in 0u32..27, c1 in 0u32..27, c2 in 0u32..27) {
            let f = make_field(3, 1, 3).unwrap();
            let poly = LinearizedPoly::new(&f, vec![FqnElem(c0), FqnElem(c1), FqnElem(c2)]).unwrap();
            prop_assert_eq!(poly.adjoint().adjoint(), poly.clone());
            // duality on a few sample points
            for (xi, yi) in [(3u32, 5u32), (11, 20), (26, 1)] {
                let x = FqnElem(xi);
                let y = FqnElem(yi);
                prop_assert_eq!(
                    f.trace_q(f.mul(x, poly.eval(y))),
                    f.trace_q(f.mul(poly.adjoint().eval(x), y))
                );
            }
        }

        #[test]
        fn compose_matches_pointwise(a0 in 0u32..27, a1 in 0u32..27, b0 in 0u32..27, b1 in 0u32..27) {
            let f = make_field(3, 1, 3).unwrap();
            let pa = LinearizedPoly::new(&f, vec![FqnElem(a0), FqnElem(a1), FqnElem::ZERO]).unwrap();
            let pb = LinearizedPoly::new(&f, vec![FqnElem(b0), FqnElem::ZERO, FqnElem(b1)]).unwrap();
            let comp = pa.compose(&pb).unwrap();
            for x in f.all_elements() {
                prop_assert_eq!(comp.eval(x), pa.eval(pb.eval(x)));
            }
        }
    }
}
