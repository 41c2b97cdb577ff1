//! Exact arithmetic in the tower F_p ⊂ F_q ⊂ F_{q^n} (q = p^h) and in the
//! quadratic extension F_{q^{2n}}.
//!
//! A field context is a deterministic function of (p, h, n): the modulus is
//! the first monic primitive polynomial of degree h·n over F_p in increasing
//! order of its coefficient vector (constant term least significant), and the
//! generator g is the residue class of the indeterminate. Elements are stored
//! as packed base-p coefficient vectors; multiplication goes through discrete
//! log/exp tables, so the whole field must fit under a table cap.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Default cap on q^n for table-backed fields.
pub const DEFAULT_TABLE_CAP: u64 = 1 << 20;

/// Sentinel stored in the log table at index 0.
const LOG_ZERO: u32 = u32::MAX;

/// An element of F_{q^n}, stored as its base-p packed coefficient vector
/// with respect to the polynomial basis 1, x, ..., x^{hn-1}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct FqnElem(pub u32);

impl FqnElem {
    pub const ZERO: FqnElem = FqnElem(0);
    pub const ONE: FqnElem = FqnElem(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

/// The field F_{q^n} with q = p^h, realized as F_p[x]/(modulus).
///
/// Immutable after construction; all operations are pure table lookups plus
/// small digit loops, safe to share across threads.
pub struct FieldCtx {
    p: u64,
    h: u32,
    n: u32,
    hn: u32,
    q: u64,
    order: u64,
    modulus: Vec<u8>,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldCtx(p={}, h={}, n={})", self.p, self.h, self.n)
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.h == other.h && self.n == other.n
    }
}
impl Eq for FieldCtx {}

/// Multiply a residue (as digit vector) by x modulo `modulus`, in place.
fn mul_by_x(digits: &mut [u8], modulus: &[u8], p: u64) {
    let d = digits.len();
    let top = digits[d - 1] as u64;
    for i in (1..d).rev() {
        digits[i] = digits[i - 1];
    }
    digits[0] = 0;
    if top != 0 {
        for i in 0..d {
            let m = modulus[i] as u64;
            if m != 0 {
                let cur = digits[i] as u64;
                digits[i] = ((cur + p - (top * m) % p) % p) as u8;
            }
        }
    }
}

fn digits_to_index(digits: &[u8], p: u64) -> u64 {
    let mut acc = 0u64;
    for &d in digits.iter().rev() {
        acc = acc * p + d as u64;
    }
    acc
}

fn index_to_digits(mut idx: u64, p: u64, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut() {
        *slot = (idx % p) as u8;
        idx /= p;
    }
    out
}

fn is_prime(v: u64) -> bool {
    if v < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= v {
        if v % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Build the field F_{p^{h·n}} with the deterministic modulus and generator.
pub fn make_field(p: u64, h: u32, n: u32) -> Result<Arc<FieldCtx>> {
    make_field_with_cap(p, h, n, DEFAULT_TABLE_CAP)
}

/// Same as [`make_field`] with an explicit cap on q^n for the log/exp tables.
pub fn make_field_with_cap(p: u64, h: u32, n: u32, cap: u64) -> Result<Arc<FieldCtx>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if h == 0 || n == 0 {
        return Err(Error::BadDegree { h, n });
    }
    let hn = h * n;
    let mut order: u128 = 1;
    for _ in 0..hn {
        order *= p as u128;
    }
    if order > cap as u128 {
        return Err(Error::SizeCapExceeded { order, cap });
    }
    let order = order as u64;
    let q = {
        let mut v = 1u64;
        for _ in 0..h {
            v *= p;
        }
        v
    };

    // Scan monic candidates by increasing coefficient-vector encoding and
    // keep the first one for which x has multiplicative order q^n - 1.
    // Hitting that order forces the quotient ring to be a field, so no
    // separate irreducibility test is needed.
    let nonzero = (order - 1) as usize;
    let mut exp = vec![0u32; nonzero];
    let mut modulus = None;
    'search: for code in 0..order {
        let mut m = index_to_digits(code, p, hn as usize);
        if m[0] == 0 {
            continue; // x would divide the modulus
        }
        m.push(1); // monic leading coefficient
        let mut digits = vec![0u8; hn as usize];
        digits[0] = 1; // the element 1
        exp[0] = 1;
        let mut ok = true;
        for k in 1..nonzero {
            mul_by_x(&mut digits, &m, p);
            let idx = digits_to_index(&digits, p);
            if idx == 1 {
                ok = false; // returned to 1 too early
                break;
            }
            exp[k] = idx as u32;
        }
        if ok {
            mul_by_x(&mut digits, &m, p);
            if digits_to_index(&digits, p) == 1 {
                modulus = Some(m);
                break 'search;
            }
        }
    }
    let modulus = modulus.ok_or(Error::NoPrimitivePolynomial)?;

    let mut log = vec![LOG_ZERO; order as usize];
    for (k, &vi) in exp.iter().enumerate() {
        log[vi as usize] = k as u32;
    }

    Ok(Arc::new(FieldCtx {
        p,
        h,
        n,
        hn,
        q,
        order,
        modulus,
        exp,
        log,
    }))
}

impl FieldCtx {
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn h(&self) -> u32 {
        self.h
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    /// q = p^h.
    pub fn q(&self) -> u64 {
        self.q
    }
    /// q^n, the number of field elements.
    pub fn order(&self) -> u64 {
        self.order
    }
    /// q^n - 1, the order of the multiplicative group.
    pub fn group_order(&self) -> u64 {
        self.order - 1
    }
    /// Coefficients of the modulus, constant term first (monic, length hn+1).
    pub fn modulus(&self) -> &[u8] {
        &self.modulus
    }
    /// The fixed generator: the residue class of the indeterminate.
    pub fn generator(&self) -> FqnElem {
        debug_assert!(self.order > 2);
        FqnElem(self.exp[1])
    }

    pub fn coeffs(&self, a: FqnElem) -> Vec<u8> {
        index_to_digits(a.0 as u64, self.p, self.hn as usize)
    }

    pub fn from_coeffs(&self, coeffs: &[u8]) -> Result<FqnElem> {
        if coeffs.len() > self.hn as usize {
            return Err(Error::ParseElement {
                input: format!("{coeffs:?}"),
                reason: format!("more than h*n = {} coefficients", self.hn),
            });
        }
        let mut acc = 0u64;
        for &c in coeffs.iter().rev() {
            if c as u64 >= self.p {
                return Err(Error::ParseElement {
                    input: format!("{coeffs:?}"),
                    reason: format!("coefficient {c} out of range mod {}", self.p),
                });
            }
            acc = acc * self.p + c as u64;
        }
        Ok(FqnElem(acc as u32))
    }

    pub fn add(&self, a: FqnElem, b: FqnElem) -> FqnElem {
        if self.p == 2 {
            return FqnElem(a.0 ^ b.0);
        }
        let p = self.p as u32;
        let mut x = a.0;
        let mut y = b.0;
        let mut acc = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.hn {
            let s = (x % p + y % p) % p;
            acc += s * scale;
            scale *= p;
            x /= p;
            y /= p;
        }
        FqnElem(acc)
    }

    pub fn neg(&self, a: FqnElem) -> FqnElem {
        if self.p == 2 {
            return a;
        }
        let p = self.p as u32;
        let mut x = a.0;
        let mut acc = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.hn {
            let d = x % p;
            if d != 0 {
                acc += (p - d) * scale;
            }
            scale *= p;
            x /= p;
        }
        FqnElem(acc)
    }

    pub fn sub(&self, a: FqnElem, b: FqnElem) -> FqnElem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FqnElem, b: FqnElem) -> FqnElem {
        if a.is_zero() || b.is_zero() {
            return FqnElem::ZERO;
        }
        let ka = self.log[a.0 as usize] as u64;
        let kb = self.log[b.0 as usize] as u64;
        FqnElem(self.exp[((ka + kb) % self.group_order()) as usize])
    }

    pub fn inv(&self, a: FqnElem) -> Result<FqnElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let k = self.log[a.0 as usize] as u64;
        let g = self.group_order();
        Ok(FqnElem(self.exp[((g - k) % g) as usize]))
    }

    /// x^e for a (possibly negative) integer exponent.
    pub fn pow(&self, a: FqnElem, e: i64) -> FqnElem {
        if a.is_zero() {
            return if e == 0 { FqnElem::ONE } else { FqnElem::ZERO };
        }
        let g = self.group_order() as i128;
        let k = self.log[a.0 as usize] as i128;
        let e = (e as i128).rem_euclid(g);
        FqnElem(self.exp[((k * e) % g) as usize])
    }

    /// Discrete log with respect to the fixed generator.
    pub fn dlog(&self, a: FqnElem) -> Result<u64> {
        if a.is_zero() {
            return Err(Error::DlogOfZero);
        }
        Ok(self.log[a.0 as usize] as u64)
    }

    /// g^k.
    pub fn g_pow(&self, k: u64) -> FqnElem {
        FqnElem(self.exp[(k % self.group_order()) as usize])
    }

    /// x ↦ x^{q^r}; negative r is reduced mod n, so r = -1 means x^{q^{n-1}}.
    pub fn frobenius(&self, a: FqnElem, r: i64) -> FqnElem {
        if a.is_zero() {
            return FqnElem::ZERO;
        }
        let r = (r.rem_euclid(self.n as i64)) as u32;
        let g = self.group_order();
        let mut e = 1u64;
        for _ in 0..r {
            e = (e * (self.q % g)) % g;
        }
        let k = self.log[a.0 as usize] as u64;
        FqnElem(self.exp[((k as u128 * e as u128) % g as u128) as usize])
    }

    /// Trace of F_{q^n} over F_q: x + x^q + ... + x^{q^{n-1}}.
    pub fn trace_q(&self, a: FqnElem) -> FqnElem {
        let mut acc = FqnElem::ZERO;
        let mut cur = a;
        for _ in 0..self.n {
            acc = self.add(acc, cur);
            cur = self.frobenius(cur, 1);
        }
        acc
    }

    /// Norm of F_{q^n} over F_q: x^{(q^n-1)/(q-1)}.
    pub fn norm_q(&self, a: FqnElem) -> FqnElem {
        if a.is_zero() {
            return FqnElem::ZERO;
        }
        let e = self.group_order() / (self.q - 1);
        let k = self.log[a.0 as usize] as u64;
        FqnElem(self.exp[((k as u128 * e as u128) % self.group_order() as u128) as usize])
    }

    /// Deterministic enumeration: 0 first, then g^0, g^1, ..., g^{q^n-2}.
    pub fn enumerate(&self) -> impl Iterator<Item = FqnElem> + '_ {
        std::iter::once(FqnElem::ZERO).chain(self.exp.iter().map(|&vi| FqnElem(vi)))
    }

    /// All q^n elements in packed-index order (0, 1, 2, ...).
    pub fn all_elements(&self) -> impl Iterator<Item = FqnElem> {
        (0..self.order as u32).map(FqnElem)
    }

    /// x ∈ F_{q^level}? The level must divide n.
    pub fn subfield_test(&self, a: FqnElem, level: u32) -> Result<bool> {
        if level == 0 || self.n % level != 0 {
            return Err(Error::BadSubfieldLevel { level, n: self.n });
        }
        Ok(self.frobenius(a, level as i64) == a)
    }

    /// x ∈ F_q (shorthand for level 1).
    pub fn in_base_subfield(&self, a: FqnElem) -> bool {
        self.frobenius(a, 1) == a
    }

    /// Is x a nonzero square of F_{q^n}?
    pub fn is_square(&self, a: FqnElem) -> bool {
        if a.is_zero() {
            return false;
        }
        if self.p == 2 {
            return true;
        }
        self.log[a.0 as usize] % 2 == 0
    }

    /// The least non-square of F_q (embedded in F_{q^n}), by packed index.
    /// Requires q odd.
    pub fn least_base_nonsquare(&self) -> Result<FqnElem> {
        if self.p == 2 {
            return Err(Error::EvenCharacteristic(2));
        }
        // Non-squares of F_q stay non-square in F_{q^n} exactly when n is
        // odd; here we only ask for a non-square of the subfield F_q.
        let e = (self.q - 1) / 2;
        for idx in 2..self.order as u32 {
            let a = FqnElem(idx);
            if self.in_base_subfield(a) && self.pow(a, e as i64) != FqnElem::ONE {
                return Ok(a);
            }
        }
        Err(Error::Invalid("no base-field non-square found".into()))
    }

    /// Parse "0", "g^k" or "[c0,c1,...]".
    pub fn parse_element(&self, s: &str) -> Result<FqnElem> {
        let s = s.trim();
        if s == "0" {
            return Ok(FqnElem::ZERO);
        }
        if s == "1" {
            return Ok(FqnElem::ONE);
        }
        if s == "g" {
            return Ok(self.generator());
        }
        if let Some(k) = s.strip_prefix("g^") {
            let k: u64 = k.parse().map_err(|_| Error::ParseElement {
                input: s.into(),
                reason: "exponent is not a non-negative integer".into(),
            })?;
            return Ok(self.g_pow(k));
        }
        if s.starts_with('[') && s.ends_with(']') {
            let inner = &s[1..s.len() - 1];
            let coeffs: Vec<u8> = inner
                .split(',')
                .map(|t| {
                    t.trim().parse::<u8>().map_err(|_| Error::ParseElement {
                        input: s.into(),
                        reason: format!("bad coefficient {t:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            return self.from_coeffs(&coeffs);
        }
        Err(Error::ParseElement {
            input: s.into(),
            reason: "expected \"0\", \"g^k\" or \"[c0,c1,...]\"".into(),
        })
    }

    /// Canonical text form: "0" or "g^k".
    pub fn format_element(&self, a: FqnElem) -> String {
        if a.is_zero() {
            "0".into()
        } else {
            format!("g^{}", self.log[a.0 as usize])
        }
    }

    /// Coefficient-list text form: "[c0,c1,...]".
    pub fn format_coeffs(&self, a: FqnElem) -> String {
        let cs: Vec<String> = self.coeffs(a).iter().map(|c| c.to_string()).collect();
        format!("[{}]", cs.join(","))
    }

    /// Context echo for reports: {p, h, n, modulus, generator}.
    pub fn describe(&self) -> FieldDescription {
        FieldDescription {
            p: self.p,
            h: self.h,
            n: self.n,
            modulus: format!(
                "[{}]",
                self.modulus
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            generator: self.format_coeffs(self.generator()),
        }
    }
}

/// Serializable context echo.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FieldDescription {
    pub p: u64,
    pub h: u32,
    pub n: u32,
    pub modulus: String,
    pub generator: String,
}

// ---------------------------------------------------------------------------
// Quadratic extension F_{q^{2n}} = F_{q^n}(ω), ω² = s.
// ---------------------------------------------------------------------------

/// An element x0 + ω·x1 of F_{q^{2n}}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct QExtElem {
    pub a: FqnElem,
    pub b: FqnElem,
}

impl QExtElem {
    pub const ZERO: QExtElem = QExtElem {
        a: FqnElem(0),
        b: FqnElem(0),
    };
    pub fn is_zero(self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
    pub fn in_base(self) -> bool {
        self.b.is_zero()
    }
}

/// F_{q^{2n}} realized as a degree-2 extension of F_{q^n}. Keeps the
/// F_{q^n}-linear structure of right multiplications explicit, which is what
/// the twisted-field spread construction needs.
pub struct QuadExtCtx {
    pub base: Arc<FieldCtx>,
    /// A non-square of F_{q^n}; ω² = s.
    pub s: FqnElem,
    order: u64,
    gen: QExtElem,
    exp: Vec<QExtElem>,
    log: Vec<u32>,
}

impl QuadExtCtx {
    pub fn order(&self) -> u64 {
        self.order
    }
    pub fn group_order(&self) -> u64 {
        self.order - 1
    }
    pub fn generator(&self) -> QExtElem {
        self.gen
    }

    fn pack(&self, x: QExtElem) -> usize {
        (x.a.0 as u64 * self.base.order() + x.b.0 as u64) as usize
    }

    pub fn add(&self, x: QExtElem, y: QExtElem) -> QExtElem {
        QExtElem {
            a: self.base.add(x.a, y.a),
            b: self.base.add(x.b, y.b),
        }
    }

    pub fn neg(&self, x: QExtElem) -> QExtElem {
        QExtElem {
            a: self.base.neg(x.a),
            b: self.base.neg(x.b),
        }
    }

    pub fn mul(&self, x: QExtElem, y: QExtElem) -> QExtElem {
        let f = &self.base;
        QExtElem {
            a: f.add(f.mul(x.a, y.a), f.mul(self.s, f.mul(x.b, y.b))),
            b: f.add(f.mul(x.a, y.b), f.mul(x.b, y.a)),
        }
    }

    /// Scalar action of λ ∈ F_{q^n}.
    pub fn scale(&self, lambda: FqnElem, x: QExtElem) -> QExtElem {
        QExtElem {
            a: self.base.mul(lambda, x.a),
            b: self.base.mul(lambda, x.b),
        }
    }

    /// x^{q^t} for 0 <= t < 2n, via ω^{q^t} = ω · s^{(q^t-1)/2}.
    pub fn frobenius_q(&self, x: QExtElem, t: i64) -> QExtElem {
        let two_n = 2 * self.base.n() as i64;
        let t = t.rem_euclid(two_n);
        let f = &self.base;
        // (x0 + ω x1)^{q^t} = x0^{q^t} + ω^{q^t} x1^{q^t}
        let a = f.frobenius(x.a, t);
        let b = f.frobenius(x.b, t);
        // ω^{q^t} = ω · s^{(q^t-1)/2}; the exponent is taken mod q^n - 1.
        let g = f.group_order() as u128;
        let mut qt = 1u128;
        for _ in 0..t {
            qt = (qt * f.q() as u128) % (2 * g);
        }
        // (q^t - 1)/2 computed mod (q^n - 1): q odd makes q^t - 1 even.
        let e = ((qt + 2 * g - 1) / 2) % g;
        let w_factor = f.pow(self.s, e as i64);
        QExtElem {
            a,
            b: f.mul(b, w_factor),
        }
    }

    pub fn dlog(&self, x: QExtElem) -> Result<u64> {
        if x.is_zero() {
            return Err(Error::DlogOfZero);
        }
        Ok(self.log[self.pack(x)] as u64)
    }

    pub fn g_pow(&self, k: u64) -> QExtElem {
        self.exp[(k % self.group_order()) as usize]
    }

    pub fn inv(&self, x: QExtElem) -> Result<QExtElem> {
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let g = self.group_order();
        let k = self.log[self.pack(x)] as u64;
        Ok(self.exp[((g - k) % g) as usize])
    }

    /// Deterministic enumeration: zero, then powers of the generator.
    pub fn enumerate(&self) -> impl Iterator<Item = QExtElem> + '_ {
        std::iter::once(QExtElem::ZERO).chain(self.exp.iter().copied())
    }

    /// All q^{2n} elements in packed (a, b) index order.
    pub fn all_elements(&self) -> impl Iterator<Item = QExtElem> + '_ {
        let ord = self.base.order() as u32;
        (0..ord).flat_map(move |a| (0..ord).map(move |b| QExtElem {
            a: FqnElem(a),
            b: FqnElem(b),
        }))
    }

    pub fn format_element(&self, x: QExtElem) -> String {
        format!(
            "{} + w*{}",
            self.base.format_element(x.a),
            self.base.format_element(x.b)
        )
    }
}

fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= v {
        if v % d == 0 {
            out.push(d);
            while v % d == 0 {
                v /= d;
            }
        }
        d += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

/// Build F_{q^{2n}} over the given F_{q^n}. Picks the least non-square s by
/// packed index and a deterministic generator (least packed index of full
/// multiplicative order). Requires q odd.
pub fn quad_ext(base: &Arc<FieldCtx>) -> Result<Arc<QuadExtCtx>> {
    if base.p() == 2 {
        return Err(Error::EvenCharacteristic(2));
    }
    let mut s = None;
    for idx in 2..base.order() as u32 {
        let a = FqnElem(idx);
        if !base.is_square(a) {
            s = Some(a);
            break;
        }
    }
    let s = s.ok_or_else(|| Error::Invalid("no non-square in F_{q^n}".into()))?;

    let order = base.order() * base.order();
    let group = order - 1;
    let factors = prime_factors(group);

    let mut ctx = QuadExtCtx {
        base: Arc::clone(base),
        s,
        order,
        gen: QExtElem::ZERO,
        exp: Vec::new(),
        log: Vec::new(),
    };

    // Find a generator by scanning packed indices.
    let ord_base = base.order() as u32;
    let mut gen = None;
    'outer: for ai in 0..ord_base {
        for bi in 0..ord_base {
            if ai == 0 && bi == 0 {
                continue;
            }
            let z = QExtElem {
                a: FqnElem(ai),
                b: FqnElem(bi),
            };
            let mut good = true;
            for &f in &factors {
                if qext_pow(&ctx, z, group / f) == (QExtElem { a: FqnElem::ONE, b: FqnElem::ZERO })
                {
                    good = false;
                    break;
                }
            }
            if good {
                gen = Some(z);
                break 'outer;
            }
        }
    }
    let gen = gen.ok_or_else(|| Error::Invalid("no generator in F_{q^{2n}}".into()))?;
    ctx.gen = gen;

    let mut exp = Vec::with_capacity(group as usize);
    let mut log = vec![LOG_ZERO; order as usize];
    let one = QExtElem {
        a: FqnElem::ONE,
        b: FqnElem::ZERO,
    };
    let mut cur = one;
    for k in 0..group {
        exp.push(cur);
        log[ctx.pack(cur)] = k as u32;
        cur = ctx.mul(cur, gen);
    }
    debug_assert_eq!(cur, one);
    ctx.exp = exp;
    ctx.log = log;
    Ok(Arc::new(ctx))
}

fn qext_pow(ctx: &QuadExtCtx, x: QExtElem, mut e: u64) -> QExtElem {
    let mut acc = QExtElem {
        a: FqnElem::ONE,
        b: FqnElem::ZERO,
    };
    let mut base = x;
    while e > 0 {
        if e & 1 == 1 {
            acc = ctx.mul(acc, base);
        }
        base = ctx.mul(base, base);
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_field_sizes() {
        let f = make_field(3, 1, 3).unwrap();
        assert_eq!(f.order(), 27);
        assert_eq!(f.group_order(), 26);
        let f = make_field(5, 1, 3).unwrap();
        assert_eq!(f.order(), 125);
        let f = make_field(3, 1, 5).unwrap();
        assert_eq!(f.order(), 243);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_field(4, 1, 3), Err(Error::NotPrime(4))));
        assert!(matches!(make_field(3, 0, 3), Err(Error::BadDegree { .. })));
        assert!(matches!(
            make_field_with_cap(2, 1, 30, 1 << 20),
            Err(Error::SizeCapExceeded { .. })
        ));
    }

    /// Independent check that the chosen modulus is the first primitive one:
    /// every earlier monic candidate must fail to be primitive, verified with
    /// a plain square-and-multiply order computation on digit vectors.
    #[test]
    fn modulus_is_lex_first_primitive() {
        fn poly_mul_mod(a: &[u8], b: &[u8], m: &[u8], p: u64) -> Vec<u8> {
            let d = m.len() - 1;
            let mut prod = vec![0u64; a.len() + b.len()];
            for (i, &ai) in a.iter().enumerate() {
                for (j, &bj) in b.iter().enumerate() {
                    prod[i + j] += ai as u64 * bj as u64;
                }
            }
            for i in (d..prod.len()).rev() {
                let c = prod[i] % p;
                if c != 0 {
                    for k in 0..d {
                        let sub = c * m[k] as u64 % p;
                        prod[i - d + k] = (prod[i - d + k] + p - sub) % p;
                    }
                }
                prod[i] = 0;
            }
            let mut out = vec![0u8; d];
            for k in 0..d {
                out[k] = (prod[k] % p) as u8;
            }
            out
        }
        fn x_order_is_full(m: &[u8], p: u64) -> bool {
            let d = m.len() - 1;
            let group: u64 = (0..d).fold(1u64, |acc, _| acc * p) - 1;
            let xv: Vec<u8> = (0..d).map(|i| u8::from(i == 1)).collect();
            // order divides group iff x^group == 1; check maximality via
            // prime factors.
            let powmod = |e: u64| -> Vec<u8> {
                let mut acc: Vec<u8> = (0..d).map(|i| u8::from(i == 0)).collect();
                let mut b = xv.clone();
                let mut e = e;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = poly_mul_mod(&acc, &b, m, p);
                    }
                    b = poly_mul_mod(&b, &b, m, p);
                    e >>= 1;
                }
                acc
            };
            let one: Vec<u8> = (0..d).map(|i| u8::from(i == 0)).collect();
            if powmod(group) != one {
                return false;
            }
            prime_factors(group).iter().all(|&f| powmod(group / f) != one)
        }

        let f = make_field(3, 1, 5).unwrap();
        let m = f.modulus().to_vec();
        assert!(x_order_is_full(&m, 3));
        // all earlier candidates fail
        let code = digits_to_index(&m[..5], 3);
        for earlier in 0..code {
            let mut cand = index_to_digits(earlier, 3, 5);
            cand.push(1);
            assert!(!x_order_is_full(&cand, 3), "candidate {earlier} earlier");
        }
    }

    #[test]
    fn frobenius_laws() {
        let f = make_field(3, 1, 3).unwrap();
        for x in f.all_elements() {
            assert_eq!(f.frobenius(x, 0), x);
            assert_eq!(f.frobenius(f.frobenius(x, 1), (f.n() - 1) as i64), x);
            // additivity of the q-power map
            for y in f.all_elements() {
                assert_eq!(
                    f.frobenius(f.add(x, y), 1),
                    f.add(f.frobenius(x, 1), f.frobenius(y, 1))
                );
            }
            if f.in_base_subfield(x) {
                for r in 0..5 {
                    assert_eq!(f.frobenius(x, r), x);
                }
            }
        }
        // negative exponent means q^{n-r}
        let g = f.generator();
        assert_eq!(f.frobenius(g, -1), f.frobenius(g, 2));
    }

    #[test]
    fn trace_and_norm() {
        let f = make_field(3, 1, 3).unwrap();
        assert_eq!(f.norm_q(FqnElem::ONE), FqnElem::ONE);
        assert_eq!(f.trace_q(FqnElem::ZERO), FqnElem::ZERO);
        // Tr(c) = n·c on the base subfield; here n = 3 ≡ 0 mod 3
        assert_eq!(f.trace_q(FqnElem::ONE), FqnElem::ZERO);
        // N(g) = g^13 has multiplicative order 2, hence equals -1
        let g = f.generator();
        let minus_one = f.neg(FqnElem::ONE);
        assert_eq!(f.norm_q(g), minus_one);
        for x in f.all_elements() {
            assert!(f.in_base_subfield(f.norm_q(x)) || x.is_zero());
            assert!(f.in_base_subfield(f.trace_q(x)));
            for y in f.all_elements() {
                assert_eq!(f.norm_q(f.mul(x, y)), f.mul(f.norm_q(x), f.norm_q(y)));
                assert_eq!(f.trace_q(f.add(x, y)), f.add(f.trace_q(x), f.trace_q(y)));
            }
        }
    }

    #[test]
    fn base_subfield_membership() {
        let f = make_field(3, 1, 3).unwrap();
        let in_fq: Vec<_> = f.all_elements().filter(|&x| f.in_base_subfield(x)).collect();
        assert_eq!(in_fq.len(), 3);
        assert!(matches!(
            f.subfield_test(FqnElem::ONE, 2),
            Err(Error::BadSubfieldLevel { .. })
        ));
        // x ∈ F_q ⇔ x^q = x, full scan
        for x in f.all_elements() {
            assert_eq!(f.in_base_subfield(x), f.frobenius(x, 1) == x);
        }
    }

    #[test]
    fn dlog_and_enumeration() {
        let f = make_field(3, 1, 3).unwrap();
        assert_eq!(f.enumerate().count() as u64, f.order());
        assert_eq!(f.dlog(FqnElem::ONE).unwrap(), 0);
        assert_eq!(f.dlog(f.generator()).unwrap(), 1);
        assert!(f.dlog(FqnElem::ZERO).is_err());
        let a = f.g_pow(5);
        let b = f.g_pow(7);
        assert_eq!(f.dlog(f.mul(a, b)).unwrap(), 12);
    }

    #[test]
    fn deterministic_rebuild() {
        let f1 = make_field(5, 1, 3).unwrap();
        let f2 = make_field(5, 1, 3).unwrap();
        assert_eq!(f1.modulus(), f2.modulus());
        assert_eq!(f1.exp, f2.exp);
        assert_eq!(f1.log, f2.log);
    }

    #[test]
    fn parse_and_format() {
        let f = make_field(3, 1, 3).unwrap();
        for x in f.all_elements() {
            assert_eq!(f.parse_element(&f.format_element(x)).unwrap(), x);
            assert_eq!(f.parse_element(&f.format_coeffs(x)).unwrap(), x);
        }
        assert!(f.parse_element("g^x").is_err());
        assert!(f.parse_element("[3,0,0]").is_err());
    }

    #[test]
    fn quad_ext_basics() {
        let f = make_field(3, 1, 3).unwrap();
        let e = quad_ext(&f).unwrap();
        assert_eq!(e.order(), 729);
        assert!(!f.is_square(e.s));
        // ω² = s
        let w = QExtElem {
            a: FqnElem::ZERO,
            b: FqnElem::ONE,
        };
        let w2 = e.mul(w, w);
        assert_eq!(
            w2,
            QExtElem {
                a: e.s,
                b: FqnElem::ZERO
            }
        );
        // base-field membership = ω-component zero
        for x in f.all_elements() {
            assert!(QExtElem { a: x, b: FqnElem::ZERO }.in_base());
        }
        // q even is rejected
        let f2 = make_field(2, 1, 3).unwrap();
        assert!(quad_ext(&f2).is_err());
    }

    #[test]
    fn quad_ext_dlog_and_frobenius() {
        let f = make_field(3, 1, 3).unwrap();
        let e = quad_ext(&f).unwrap();
        let g = e.generator();
        assert_eq!(e.dlog(g).unwrap(), 1);
        let x = e.g_pow(100);
        // x^{q^n} is the conjugate (x0, -x1)
        let conj = e.frobenius_q(x, f.n() as i64);
        assert_eq!(conj, QExtElem { a: x.a, b: f.neg(x.b) });
        // Frobenius is multiplicative and of order 2n
        let y = e.g_pow(37);
        assert_eq!(
            e.frobenius_q(e.mul(x, y), 1),
            e.mul(e.frobenius_q(x, 1), e.frobenius_q(y, 1))
        );
        assert_eq!(e.frobenius_q(x, 2 * f.n() as i64), x);
        // dlog respects multiplication
        let k = (e.dlog(x).unwrap() + e.dlog(y).unwrap()) % e.group_order();
        assert_eq!(e.dlog(e.mul(x, y)).unwrap(), k);
    }
}
