//! Structure constants of finite-dimensional symmetry algebras over `Q`, and
//! recognition of `sl(2)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::diffop::LinDiffOp;
use crate::symexpr::poly::Monomial;
use crate::symexpr::{Expr, Rational};

use super::{symmetry_bracket, SymmetryError};

type Coords = BTreeMap<(usize, Monomial), Rational>;

fn coords(op: &LinDiffOp) -> Coords {
    let mut out = Coords::new();
    for (i, p) in op.polys().iter().enumerate() {
        for (m, c) in p.terms() {
            out.insert((i, m.clone()), c.clone());
        }
    }
    out
}

/// Reduced row echelon form in place; returns the pivot column of each nonzero row.
fn rref(m: &mut [Vec<Rational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = Rational::one() / m[row][col].clone();
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let k = m[r][col].clone();
                for c in 0..m[r].len() {
                    let d = &k * &m[row][c];
                    m[r][c] = &m[r][c] - d;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    pivots
}

fn rank(vectors: &[Vec<Rational>]) -> usize {
    let Some(width) = vectors.first().map(Vec::len) else {
        return 0;
    };
    let mut m = vectors.to_vec();
    rref(&mut m, width).len()
}

/// Basis of `{v : A v = 0}` for a square matrix, each normalised so that its
/// first nonzero entry is 1.
fn nullspace(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = a.first().map_or(0, Vec::len);
    let mut m = a.to_vec();
    let pivots = rref(&mut m, n);
    let mut out = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rational::zero(); n];
        v[free] = Rational::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[r][free].clone();
        }
        let lead = v.iter().find(|x| !x.is_zero()).cloned().unwrap();
        out.push(v.iter().map(|x| x / &lead).collect());
    }
    out
}

fn scale_vec(v: &[Rational], k: &Rational) -> Vec<Rational> {
    v.iter().map(|x| x * k).collect()
}

pub(crate) fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let root = |n: &BigInt| {
        let r = n.sqrt();
        (&r * &r == *n).then_some(r)
    };
    Some(Rational::new(root(q.numer())?, root(q.denom())?))
}

/// `c[i][j][m]` with `[Δi, Δj] = Σ_m c[i][j][m] Δm` modulo `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureConstants {
    pub table: Vec<Vec<Vec<Rational>>>,
}

/// Elements given by coordinates in the basis: `[h,e] = 2e`, `[h,f] = −2f`, `[e,f] = h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sl2Triple {
    pub h: Vec<Rational>,
    pub e: Vec<Rational>,
    pub f: Vec<Rational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LieType {
    Abelian,
    /// Split simple three-dimensional: indefinite nondegenerate Killing form.
    Sl2,
    /// Compact simple three-dimensional: definite Killing form.
    So3,
    Other,
}

impl fmt::Display for LieType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LieType::Abelian => "abelian",
            LieType::Sl2 => "sl(2)",
            LieType::So3 => "so(3)",
            LieType::Other => "other",
        })
    }
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.table.len()
    }

    pub fn get(&self, i: usize, j: usize, m: usize) -> &Rational {
        &self.table[i][j][m]
    }

    /// Bracket of two elements in coordinates.
    pub fn bracket(&self, u: &[Rational], v: &[Rational]) -> Vec<Rational> {
        let n = self.dim();
        let mut out = vec![Rational::zero(); n];
        for i in (0..n).filter(|&i| !u[i].is_zero()) {
            for j in (0..n).filter(|&j| !v[j].is_zero()) {
                let k = &u[i] * &v[j];
                for (m, o) in out.iter_mut().enumerate() {
                    *o += &k * &self.table[i][j][m];
                }
            }
        }
        out
    }

    /// Matrix of `ad u`, acting on column coordinate vectors.
    pub fn ad(&self, u: &[Rational]) -> Vec<Vec<Rational>> {
        let n = self.dim();
        let cols: Vec<Vec<Rational>> = (0..n).map(|j| self.bracket(u, &unit(n, j))).collect();
        (0..n)
            .map(|r| (0..n).map(|c| cols[c][r].clone()).collect())
            .collect()
    }

    /// `K(ei, ej) = tr(ad ei ∘ ad ej)`.
    #[allow(clippy::needless_range_loop)]
    pub fn killing_form(&self) -> Vec<Vec<Rational>> {
        let n = self.dim();
        let ads: Vec<_> = (0..n).map(|i| self.ad(&unit(n, i))).collect();
        let mut k = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut t = Rational::zero();
                for a in 0..n {
                    for b in 0..n {
                        t += &ads[i][a][b] * &ads[j][b][a];
                    }
                }
                k[i][j] = t;
            }
        }
        k
    }

    /// `(positive, negative, zero)` counts of the Killing form's signature.
    pub fn killing_signature(&self) -> (usize, usize, usize) {
        signature(self.killing_form())
    }

    /// `[g, g] = g`.
    pub fn is_perfect(&self) -> bool {
        let n = self.dim();
        let mut all = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                all.push(self.table[i][j].clone());
            }
        }
        rank(&all) == n
    }

    pub fn classify(&self) -> LieType {
        let n = self.dim();
        if self.table.iter().flatten().flatten().all(Zero::is_zero) {
            return LieType::Abelian;
        }
        if n == 3 && self.is_perfect() {
            match self.killing_signature() {
                (_, _, z) if z > 0 => LieType::Other,
                (3, 0, 0) | (0, 3, 0) => LieType::So3,
                _ => LieType::Sl2,
            }
        } else {
            LieType::Other
        }
    }

    /// Searches basis elements and their pairwise sums and differences for a
    /// semisimple `b` whose `ad` has rational eigenvalues `0, ±μ`, and builds
    /// the triple from `h = ±(2/μ) b`. Ties prefer `e` with the earliest
    /// leading coordinate.
    pub fn find_sl2_triple(&self) -> Option<Sl2Triple> {
        let n = self.dim();
        if n != 3 {
            return None;
        }
        let mut candidates: Vec<Vec<Rational>> = (0..n).map(|i| unit(n, i)).collect();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (unit(n, i), unit(n, j));
                candidates.push(a.iter().zip(&b).map(|(x, y)| x + y).collect());
                candidates.push(a.iter().zip(&b).map(|(x, y)| x - y).collect());
            }
        }
        for b in candidates {
            let a = self.ad(&b);
            let (c1, c2, c3) = char_coeffs(&a);
            if !c1.is_zero() || !c3.is_zero() {
                continue;
            }
            let Some(mu) = rational_sqrt(&-c2).filter(|m| !m.is_zero()) else {
                continue;
            };
            let two = Rational::from_integer(2.into());
            let mut found: Vec<Sl2Triple> = [&two / &mu, -(&two / &mu)]
                .iter()
                .filter_map(|k| self.triple_from_h(scale_vec(&b, k)))
                .collect();
            found.sort_by_key(|t| t.e.iter().position(|x| !x.is_zero()));
            if let Some(t) = found.into_iter().next() {
                return Some(t);
            }
        }
        None
    }

    fn triple_from_h(&self, h: Vec<Rational>) -> Option<Sl2Triple> {
        let n = self.dim();
        let ad_h = self.ad(&h);
        let shifted = |s: i64| -> Vec<Vec<Rational>> {
            let mut m = ad_h.clone();
            for (i, row) in m.iter_mut().enumerate().take(n) {
                row[i] -= Rational::from_integer(s.into());
            }
            m
        };
        let e = single(nullspace(&shifted(2)))?;
        let f0 = single(nullspace(&shifted(-2)))?;
        let ef = self.bracket(&e, &f0);
        let i = h.iter().position(|x| !x.is_zero())?;
        let t = &ef[i] / &h[i];
        if t.is_zero() || scale_vec(&h, &t) != ef {
            return None;
        }
        let f = scale_vec(&f0, &(Rational::one() / t));
        let t = Sl2Triple { h, e, f };
        self.satisfies(&t).then_some(t)
    }

    /// Checks the three relations in coordinates.
    pub fn satisfies(&self, t: &Sl2Triple) -> bool {
        let two = Rational::from_integer(2.into());
        self.bracket(&t.h, &t.e) == scale_vec(&t.e, &two)
            && self.bracket(&t.h, &t.f) == scale_vec(&t.f, &-two)
            && self.bracket(&t.e, &t.f) == t.h
    }

    /// Nonzero brackets `[Δi, Δj]` for `i < j`, formatted with the given names.
    pub fn table_lines(&self, names: &[String]) -> Vec<String> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                out.push(format!(
                    "[{}, {}] = {}",
                    names[i],
                    names[j],
                    format_combination(&self.table[i][j], names)
                ));
            }
        }
        out
    }
}

fn single(mut v: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    (v.len() == 1).then(|| v.pop().unwrap())
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

/// `(tr A, Σ principal 2-minors, det A)` of a 3×3 matrix.
fn char_coeffs(a: &[Vec<Rational>]) -> (Rational, Rational, Rational) {
    let tr = &a[0][0] + &a[1][1] + &a[2][2];
    let minor = |i: usize, j: usize| &a[i][i] * &a[j][j] - &a[i][j] * &a[j][i];
    let m2 = minor(0, 1) + minor(0, 2) + minor(1, 2);
    let det = &a[0][0] * (&a[1][1] * &a[2][2] - &a[1][2] * &a[2][1])
        - &a[0][1] * (&a[1][0] * &a[2][2] - &a[1][2] * &a[2][0])
        + &a[0][2] * (&a[1][0] * &a[2][1] - &a[1][1] * &a[2][0]);
    (tr, m2, det)
}

/// Sylvester signature by symmetric Gaussian elimination.
#[allow(clippy::needless_range_loop)]
fn signature(mut k: Vec<Vec<Rational>>) -> (usize, usize, usize) {
    let n = k.len();
    let (mut pos, mut neg) = (0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let p = match active.iter().position(|&i| !k[i][i].is_zero()) {
            Some(p) => active[p],
            None => {
                // Zero diagonal: replace e_i by e_i + e_j for some nonzero k_ij.
                let Some((i, j)) = active
                    .iter()
                    .flat_map(|&i| active.iter().map(move |&j| (i, j)))
                    .find(|&(i, j)| i != j && !k[i][j].is_zero())
                else {
                    break;
                };
                for c in 0..n {
                    let v = k[j][c].clone();
                    k[i][c] += v;
                }
                for r in 0..n {
                    let v = k[r][j].clone();
                    k[r][i] += v;
                }
                i
            }
        };
        let d = k[p][p].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&i| i != p);
        for &r in &active {
            let f = &k[r][p] / &d;
            for c in 0..n {
                let v = &f * &k[p][c];
                k[r][c] -= v;
            }
        }
        for &c in &active {
            k[p][c] = Rational::zero();
            k[c][p] = Rational::zero();
        }
    }
    (pos, neg, n - pos - neg)
}

/// `2*Δ2`, `Δ1 - 1/2*Δ3`, or `0`.
pub fn format_combination(c: &[Rational], names: &[String]) -> String {
    let mut terms = c
        .iter()
        .zip(names)
        .filter(|(k, _)| !k.is_zero())
        .map(|(k, name)| (k.clone(), name));
    let Some(first) = terms.next() else {
        return "0".into();
    };
    let term = |k: &Rational, name: &str| {
        if k.is_one() {
            name.to_string()
        } else {
            format!("{k}*{name}")
        }
    };
    let mut out = if first.0.is_negative() {
        format!("-{}", term(&-first.0, first.1))
    } else {
        term(&first.0, first.1)
    };
    for (k, name) in terms {
        if k.is_negative() {
            out.push_str(&format!(" - {}", term(&-k, name)));
        } else {
            out.push_str(&format!(" + {}", term(&k, name)));
        }
    }
    out
}

/// `Σ c_i Δ_i`.
pub fn combine(basis: &[LinDiffOp], c: &[Rational]) -> LinDiffOp {
    basis
        .iter()
        .zip(c)
        .fold(LinDiffOp::zero(), |acc, (b, k)| acc.add(&b.scale_rational(k)))
}

/// Coordinates of `target` in `basis` over `Q`.
pub fn coordinates(
    basis: &[LinDiffOp],
    target: &LinDiffOp,
) -> Result<Vec<Rational>, SymmetryError> {
    let vecs: Vec<Coords> = basis.iter().map(coords).collect();
    let t = coords(target);
    let mut keys: Vec<&(usize, Monomial)> = vecs.iter().flat_map(|v| v.keys()).collect();
    keys.extend(t.keys());
    keys.sort();
    keys.dedup();
    let n = basis.len();
    let mut m: Vec<Vec<Rational>> = keys
        .iter()
        .map(|key| {
            let mut row: Vec<Rational> = vecs
                .iter()
                .map(|v| v.get(*key).cloned().unwrap_or_else(Rational::zero))
                .collect();
            row.push(t.get(*key).cloned().unwrap_or_else(Rational::zero));
            row
        })
        .collect();
    let pivots = rref(&mut m, n);
    if pivots.len() < n {
        return Err(SymmetryError::DependentBasis);
    }
    if m.iter().skip(n).any(|row| !row[n].is_zero()) {
        return Err(SymmetryError::NotInSpan(target.to_string()));
    }
    Ok((0..n).map(|r| m[r][n].clone()).collect())
}

/// Structure constants of the span of `basis`, with brackets taken modulo `L`.
pub fn structure_constants(
    l: &LinDiffOp,
    basis: &[LinDiffOp],
) -> Result<StructureConstants, SymmetryError> {
    let n = basis.len();
    let rows: Vec<Vec<Rational>> = {
        let vecs: Vec<Coords> = basis.iter().map(coords).collect();
        let mut keys: Vec<&(usize, Monomial)> = vecs.iter().flat_map(|v| v.keys()).collect();
        keys.sort();
        keys.dedup();
        vecs.iter()
            .map(|v| {
                keys.iter()
                    .map(|k| v.get(*k).cloned().unwrap_or_else(Rational::zero))
                    .collect()
            })
            .collect()
    };
    if rank(&rows) < n {
        return Err(SymmetryError::DependentBasis);
    }
    let mut table = vec![vec![vec![Rational::zero(); n]; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = symmetry_bracket(l, &basis[i], &basis[j])?;
            let c = coordinates(basis, &r)?;
            table[j][i] = c.iter().map(|x| -x).collect();
            table[i][j] = c;
        }
    }
    Ok(StructureConstants { table })
}

/// Checks `[h,e] = 2e`, `[h,f] = −2f`, `[e,f] = h` with exact brackets modulo `L`.
pub fn verify_sl2_triple(
    l: &LinDiffOp,
    h: &LinDiffOp,
    e: &LinDiffOp,
    f: &LinDiffOp,
) -> Result<bool, SymmetryError> {
    let two = Expr::int(2);
    Ok(symmetry_bracket(l, h, e)? == e.scale(&two)?
        && symmetry_bracket(l, h, f)? == f.scale(&two)?.neg()
        && symmetry_bracket(l, e, f)? == *h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::rat;

    fn op(s: &str) -> LinDiffOp {
        LinDiffOp::parse(s).unwrap()
    }

    fn q(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rat(x, 1)).collect()
    }

    fn free_particle() -> (LinDiffOp, Vec<LinDiffOp>) {
        (op("D^2"), vec![op("D"), op("x*D - 1/2"), op("x^2*D - x")])
    }

    #[test]
    fn sl2_table_at_zero_potential() {
        let (l, basis) = free_particle();
        let sc = structure_constants(&l, &basis).unwrap();
        assert_eq!(sc.table[0][1], q(&[1, 0, 0]));
        assert_eq!(sc.table[0][2], q(&[0, 2, 0]));
        assert_eq!(sc.table[1][2], q(&[0, 0, 1]));
        for i in 0..3 {
            assert_eq!(sc.table[i][i], q(&[0, 0, 0]));
        }
        let names: Vec<String> = (1..=3).map(|i| format!("Δ{i}")).collect();
        assert_eq!(
            sc.table_lines(&names),
            ["[Δ1, Δ2] = Δ1", "[Δ1, Δ3] = 2*Δ2", "[Δ2, Δ3] = Δ3"]
        );
        assert_eq!(sc.classify(), LieType::Sl2);
        assert_eq!(sc.killing_signature(), (2, 1, 0));
    }

    #[test]
    fn witness_matches_expected() {
        let (l, basis) = free_particle();
        let sc = structure_constants(&l, &basis).unwrap();
        let t = sc.find_sl2_triple().unwrap();
        assert_eq!(t.h, q(&[0, -2, 0]));
        assert_eq!(t.e, q(&[1, 0, 0]));
        assert_eq!(t.f, q(&[0, 0, -1]));
        let (h, e, f) = (combine(&basis, &t.h), combine(&basis, &t.e), combine(&basis, &t.f));
        assert!(verify_sl2_triple(&l, &h, &e, &f).unwrap());
    }

    #[test]
    fn trig_basis_for_unit_potential() {
        let l = op("D^2 + 1");
        let basis = vec![op("D"), op("sin(2*x)*D - cos(2*x)"), op("cos(2*x)*D + sin(2*x)")];
        let sc = structure_constants(&l, &basis).unwrap();
        assert_eq!(sc.classify(), LieType::Sl2);
        let t = sc.find_sl2_triple().unwrap();
        assert!(sc.satisfies(&t));
        let (h, e, f) = (combine(&basis, &t.h), combine(&basis, &t.e), combine(&basis, &t.f));
        assert!(verify_sl2_triple(&l, &h, &e, &f).unwrap());
    }

    #[test]
    fn exponential_basis_for_negative_potential() {
        let l = op("D^2 - 1/4");
        let basis: Vec<LinDiffOp> = crate::symmetry::constant_potential_kernel(&rat(-1, 4))
            .unwrap()
            .iter()
            .map(|w| crate::symmetry::even_symmetry_from_w(w, &Expr::zero()).unwrap())
            .collect();
        let sc = structure_constants(&l, &basis).unwrap();
        assert_eq!(sc.classify(), LieType::Sl2);
        let t = sc.find_sl2_triple().unwrap();
        let (h, e, f) = (combine(&basis, &t.h), combine(&basis, &t.e), combine(&basis, &t.f));
        assert!(verify_sl2_triple(&l, &h, &e, &f).unwrap());
    }

    #[test]
    fn errors() {
        let l = op("D^2");
        assert_eq!(
            structure_constants(&l, &[op("D"), op("2*D")]),
            Err(SymmetryError::DependentBasis)
        );
        assert!(matches!(
            structure_constants(&l, &[op("D"), op("x^2*D - x")]),
            Err(SymmetryError::NotInSpan(_))
        ));
    }

    #[test]
    fn compact_form_is_distinguished() {
        // so(3): [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e2.
        let mut table = vec![vec![vec![Rational::zero(); 3]; 3]; 3];
        for (i, j, m) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            table[i][j][m] = rat(1, 1);
            table[j][i][m] = rat(-1, 1);
        }
        let sc = StructureConstants { table };
        assert_eq!(sc.classify(), LieType::So3);
        assert_eq!(sc.find_sl2_triple(), None);
    }

    #[test]
    fn combination_format() {
        let names: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(format_combination(&[rat(-1, 2), rat(1, 1)], &names), "-1/2*a + b");
        assert_eq!(format_combination(&[rat(0, 1), rat(-1, 1)], &names), "-b");
        assert_eq!(format_combination(&q(&[0, 0]), &names), "0");
    }
}
