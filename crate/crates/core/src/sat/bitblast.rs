//! Tseitin encoding of terms into CNF, one literal per bit.
//!
//! Gates are hash-consed and constant-folded, so re-encoding a shared
//! subterm or a repeated gate costs nothing.

use std::collections::HashMap;

use super::dpll::{Dpll, Lit};
use super::SatError;
use crate::term::{Kind, Op, Sort, Term};

pub type Bits = Vec<Lit>;

#[derive(Clone, Debug)]
pub struct Blaster {
    pub sat: Dpll,
    terms: HashMap<Term, Bits>,
    vars: HashMap<String, (Sort, Bits)>,
    var_order: Vec<String>,
    ands: HashMap<Vec<Lit>, Lit>,
    xors: HashMap<(Lit, Lit), Lit>,
    muxes: HashMap<(Lit, Lit, Lit), Lit>,
}

impl Blaster {
    pub fn new(learning: bool) -> Blaster {
        Blaster {
            sat: Dpll::new(learning),
            terms: HashMap::new(),
            vars: HashMap::new(),
            var_order: Vec::new(),
            ands: HashMap::new(),
            xors: HashMap::new(),
            muxes: HashMap::new(),
        }
    }

    /// Variables seen so far, in first-encoding order.
    pub fn variables(&self) -> impl Iterator<Item = (&str, Sort, &[Lit])> {
        self.var_order.iter().map(|n| {
            let (s, b) = &self.vars[n];
            (n.as_str(), *s, b.as_slice())
        })
    }

    pub fn var_bits(&self, name: &str) -> Option<(Sort, &[Lit])> {
        self.vars.get(name).map(|(s, b)| (*s, b.as_slice()))
    }

    fn fresh(&mut self) -> Lit {
        Lit::new(self.sat.new_var(), false)
    }

    pub fn and(&mut self, mut xs: Vec<Lit>) -> Lit {
        xs.sort();
        xs.dedup();
        let mut out = Vec::with_capacity(xs.len());
        for (i, &l) in xs.iter().enumerate() {
            if l == Lit::FALSE {
                return Lit::FALSE;
            }
            if l == Lit::TRUE {
                continue;
            }
            // complementary literals are adjacent after sorting
            if i + 1 < xs.len() && xs[i + 1] == !l {
                return Lit::FALSE;
            }
            out.push(l);
        }
        match out.len() {
            0 => return Lit::TRUE,
            1 => return out[0],
            _ => {}
        }
        if let Some(&g) = self.ands.get(&out) {
            return g;
        }
        let g = self.fresh();
        for &l in &out {
            self.sat.add_clause(&[!g, l]);
        }
        let mut big: Vec<Lit> = out.iter().map(|&l| !l).collect();
        big.push(g);
        self.sat.add_clause(&big);
        self.ands.insert(out, g);
        g
    }

    pub fn and2(&mut self, a: Lit, b: Lit) -> Lit {
        self.and(vec![a, b])
    }

    pub fn or(&mut self, xs: Vec<Lit>) -> Lit {
        !self.and(xs.into_iter().map(|l| !l).collect())
    }

    pub fn or2(&mut self, a: Lit, b: Lit) -> Lit {
        self.or(vec![a, b])
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        if a.is_const() {
            return if a == Lit::TRUE { !b } else { b };
        }
        if b.is_const() {
            return if b == Lit::TRUE { !a } else { a };
        }
        if a == b {
            return Lit::FALSE;
        }
        if a == !b {
            return Lit::TRUE;
        }
        // normalise to positive inputs, a < b
        let flip = a.is_neg() != b.is_neg();
        let (mut x, mut y) = (Lit::new(a.var(), false), Lit::new(b.var(), false));
        if y < x {
            std::mem::swap(&mut x, &mut y);
        }
        let g = match self.xors.get(&(x, y)) {
            Some(&g) => g,
            None => {
                let g = self.fresh();
                self.sat.add_clause(&[!g, x, y]);
                self.sat.add_clause(&[!g, !x, !y]);
                self.sat.add_clause(&[g, !x, y]);
                self.sat.add_clause(&[g, x, !y]);
                self.xors.insert((x, y), g);
                g
            }
        };
        if flip {
            !g
        } else {
            g
        }
    }

    pub fn xnor(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    /// `s ? t : e`
    pub fn mux(&mut self, s: Lit, t: Lit, e: Lit) -> Lit {
        if s == Lit::TRUE || t == e {
            return t;
        }
        if s == Lit::FALSE {
            return e;
        }
        if s.is_neg() {
            return self.mux(!s, e, t);
        }
        if t == Lit::TRUE || t == s {
            return self.or2(s, e);
        }
        if t == Lit::FALSE || t == !s {
            return self.and2(!s, e);
        }
        if e == Lit::TRUE || e == !s {
            return self.or2(!s, t);
        }
        if e == Lit::FALSE || e == s {
            return self.and2(s, t);
        }
        if t == !e {
            return self.xnor(s, t);
        }
        if let Some(&g) = self.muxes.get(&(s, t, e)) {
            return g;
        }
        let g = self.fresh();
        self.sat.add_clause(&[!s, !t, g]);
        self.sat.add_clause(&[!s, t, !g]);
        self.sat.add_clause(&[s, !e, g]);
        self.sat.add_clause(&[s, e, !g]);
        self.sat.add_clause(&[!t, !e, g]);
        self.sat.add_clause(&[t, e, !g]);
        self.muxes.insert((s, t, e), g);
        g
    }

    fn full_add(&mut self, a: Lit, b: Lit, c: Lit) -> (Lit, Lit) {
        let ab = self.xor(a, b);
        let sum = self.xor(ab, c);
        let carry = self.mux(ab, c, a);
        (sum, carry)
    }

    pub fn add(&mut self, a: &[Lit], b: &[Lit], carry_in: Lit) -> Bits {
        let mut c = carry_in;
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let (s, co) = self.full_add(a[i], b[i], c);
            out.push(s);
            c = co;
        }
        out
    }

    fn neg(&mut self, a: &[Lit]) -> Bits {
        let inv: Bits = a.iter().map(|&l| !l).collect();
        let zero = vec![Lit::FALSE; a.len()];
        self.add(&inv, &zero, Lit::TRUE)
    }

    fn sub(&mut self, a: &[Lit], b: &[Lit]) -> Bits {
        let inv: Bits = b.iter().map(|&l| !l).collect();
        self.add(a, &inv, Lit::TRUE)
    }

    fn mul(&mut self, a: &[Lit], b: &[Lit]) -> Bits {
        let w = a.len();
        let mut acc = vec![Lit::FALSE; w];
        for i in 0..w {
            if b[i] == Lit::FALSE {
                continue;
            }
            let mut row = vec![Lit::FALSE; w];
            for j in i..w {
                row[j] = self.and2(a[j - i], b[i]);
            }
            acc = self.add(&acc, &row, Lit::FALSE);
        }
        acc
    }

    /// Unsigned `a < b`, scanning from the least significant bit.
    pub fn ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = Lit::FALSE;
        for i in 0..a.len() {
            let d = self.xor(a[i], b[i]);
            lt = self.mux(d, b[i], lt);
        }
        lt
    }

    fn slt(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let w = a.len();
        let mut a2 = a.to_vec();
        let mut b2 = b.to_vec();
        a2[w - 1] = !a2[w - 1];
        b2[w - 1] = !b2[w - 1];
        self.ult(&a2, &b2)
    }

    fn eq_bits(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let xs = (0..a.len()).map(|i| self.xnor(a[i], b[i])).collect();
        self.and(xs)
    }

    fn mux_bits(&mut self, s: Lit, t: &[Lit], e: &[Lit]) -> Bits {
        (0..t.len()).map(|i| self.mux(s, t[i], e[i])).collect()
    }

    /// Restoring division; yields all-ones quotient and the dividend as
    /// remainder when the divisor is zero.
    fn udivrem(&mut self, a: &[Lit], b: &[Lit]) -> (Bits, Bits) {
        let w = a.len();
        let mut bw = b.to_vec();
        bw.push(Lit::FALSE);
        let mut r = vec![Lit::FALSE; w + 1];
        let mut q = vec![Lit::FALSE; w];
        for i in (0..w).rev() {
            r.pop();
            r.insert(0, a[i]);
            let lt = self.ult(&r, &bw);
            let d = self.sub(&r, &bw);
            q[i] = !lt;
            r = self.mux_bits(lt, &r, &d);
        }
        r.pop();
        (q, r)
    }

    fn abs(&mut self, a: &[Lit]) -> Bits {
        let n = self.neg(a);
        self.mux_bits(a[a.len() - 1], &n, a)
    }

    fn cond_neg(&mut self, s: Lit, a: &[Lit]) -> Bits {
        let n = self.neg(a);
        self.mux_bits(s, &n, a)
    }

    fn shift(&mut self, op: Op, a: &[Lit], b: &[Lit]) -> Bits {
        let w = a.len();
        let fill = if op == Op::BvAshr { a[w - 1] } else { Lit::FALSE };
        let mut cur = a.to_vec();
        let mut overflow = Vec::new();
        for (k, &bk) in b.iter().enumerate() {
            if k >= 64 || (1usize << k) >= w {
                overflow.push(bk);
                continue;
            }
            let s = 1usize << k;
            let shifted: Bits = (0..w)
                .map(|i| match op {
                    Op::BvShl => {
                        if i >= s {
                            cur[i - s]
                        } else {
                            Lit::FALSE
                        }
                    }
                    _ => {
                        if i + s < w {
                            cur[i + s]
                        } else {
                            fill
                        }
                    }
                })
                .collect();
            cur = self.mux_bits(bk, &shifted, &cur);
        }
        let o = self.or(overflow);
        let filled = vec![fill; w];
        self.mux_bits(o, &filled, &cur)
    }

    fn var(&mut self, name: &str, sort: Sort) -> Result<Bits, SatError> {
        if let Some((s, bits)) = self.vars.get(name) {
            if *s != sort {
                return Err(SatError::SortClash { name: name.to_string(), first: *s, now: sort });
            }
            return Ok(bits.clone());
        }
        let n = sort.width().unwrap_or(1);
        let bits: Bits = (0..n).map(|_| self.fresh()).collect();
        self.vars.insert(name.to_string(), (sort, bits.clone()));
        self.var_order.push(name.to_string());
        Ok(bits)
    }

    /// Literal for a Bool-sorted term.
    pub fn lit(&mut self, t: &Term) -> Result<Lit, SatError> {
        if !t.is_bool() {
            return Err(SatError::NotBool(t.sort()));
        }
        Ok(self.bits(t)?[0])
    }

    /// One literal per bit, least significant first (a single literal for
    /// Bool terms).
    pub fn bits(&mut self, t: &Term) -> Result<Bits, SatError> {
        if let Some(b) = self.terms.get(t) {
            return Ok(b.clone());
        }
        let r = match t.kind() {
            Kind::Var(n) => self.var(n, t.sort())?,
            Kind::Bool(b) => vec![if *b { Lit::TRUE } else { Lit::FALSE }],
            Kind::Bv(v) => (0..t.width()).map(|i| if v >> i & 1 == 1 { Lit::TRUE } else { Lit::FALSE }).collect(),
            Kind::App(op, args) => {
                let mut a = Vec::with_capacity(args.len());
                for x in args {
                    a.push(self.bits(x)?);
                }
                self.app(*op, &a, args)
            }
        };
        self.terms.insert(t.clone(), r.clone());
        Ok(r)
    }

    fn app(&mut self, op: Op, a: &[Bits], terms: &[Term]) -> Bits {
        let one = |l: Lit| vec![l];
        match op {
            Op::Not => one(!a[0][0]),
            Op::And => {
                let l = self.and(a.iter().map(|x| x[0]).collect());
                one(l)
            }
            Op::Or => {
                let l = self.or(a.iter().map(|x| x[0]).collect());
                one(l)
            }
            Op::Implies => one(self.or2(!a[0][0], a[1][0])),
            Op::Xor => {
                let mut l = a[0][0];
                for x in &a[1..] {
                    l = self.xor(l, x[0]);
                }
                one(l)
            }
            Op::Eq => {
                if terms[0].is_bool() {
                    one(self.xnor(a[0][0], a[1][0]))
                } else {
                    one(self.eq_bits(&a[0], &a[1]))
                }
            }
            Op::Ite => self.mux_bits(a[0][0], &a[1], &a[2]),
            Op::BvNot => a[0].iter().map(|&l| !l).collect(),
            Op::BvNeg => self.neg(&a[0]),
            Op::BvAnd => (0..a[0].len()).map(|i| self.and2(a[0][i], a[1][i])).collect(),
            Op::BvOr => (0..a[0].len()).map(|i| self.or2(a[0][i], a[1][i])).collect(),
            Op::BvXor => (0..a[0].len()).map(|i| self.xor(a[0][i], a[1][i])).collect(),
            Op::BvAdd => self.add(&a[0], &a[1], Lit::FALSE),
            Op::BvSub => self.sub(&a[0], &a[1]),
            Op::BvMul => self.mul(&a[0], &a[1]),
            Op::BvUdiv => self.udivrem(&a[0], &a[1]).0,
            Op::BvUrem => self.udivrem(&a[0], &a[1]).1,
            Op::BvSdiv | Op::BvSrem => {
                let w = a[0].len();
                let (sa, sb) = (a[0][w - 1], a[1][w - 1]);
                let x = self.abs(&a[0]);
                let y = self.abs(&a[1]);
                let (q, r) = self.udivrem(&x, &y);
                if op == Op::BvSdiv {
                    let s = self.xor(sa, sb);
                    self.cond_neg(s, &q)
                } else {
                    self.cond_neg(sa, &r)
                }
            }
            Op::BvShl | Op::BvLshr | Op::BvAshr => self.shift(op, &a[0], &a[1]),
            Op::BvUlt => one(self.ult(&a[0], &a[1])),
            Op::BvUgt => one(self.ult(&a[1], &a[0])),
            Op::BvUle => one(!self.ult(&a[1], &a[0])),
            Op::BvUge => one(!self.ult(&a[0], &a[1])),
            Op::BvSlt => one(self.slt(&a[0], &a[1])),
            Op::BvSgt => one(self.slt(&a[1], &a[0])),
            Op::BvSle => one(!self.slt(&a[1], &a[0])),
            Op::BvSge => one(!self.slt(&a[0], &a[1])),
            Op::Extract(hi, lo) => a[0][lo as usize..=hi as usize].to_vec(),
            Op::Concat => {
                let mut r = a[1].clone();
                r.extend_from_slice(&a[0]);
                r
            }
            Op::ZeroExt(k) => {
                let mut r = a[0].clone();
                r.extend(std::iter::repeat(Lit::FALSE).take(k as usize));
                r
            }
            Op::SignExt(k) => {
                let mut r = a[0].clone();
                let s = *r.last().unwrap();
                r.extend(std::iter::repeat(s).take(k as usize));
                r
            }
        }
    }
}
