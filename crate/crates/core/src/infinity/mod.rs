//! Critical points at infinity: interaction matrices of tuples of critical
//! points of K, their enumeration, indices, and the two existence criteria.
//!
//! Tuples are unordered sets of distinct records, stored as sorted record
//! indices.

use serde::{Deserialize, Serialize};

use crate::domain::{green, DomainModel};
use crate::error::{Error, Result};
use crate::kmodel::{classify, ClassificationReport, KModel, PointClass};
use crate::numerics::{min_eigenvalue_sym, SymMatrix};

/// Tuples with `|ρ|` at or below this are degenerate.
pub const RHO_ZERO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TupleKind {
    /// Every member has `β = n-4`.
    Equal,
    /// Every member has `β < n-4`.
    Below,
    /// One part of each.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TauTuple {
    pub members: Vec<usize>,
    pub kind: TupleKind,
}

impl TauTuple {
    /// Sorts and checks the members against their classes.
    pub fn new(mut members: Vec<usize>, classes: &ClassificationReport) -> Result<Self> {
        members.sort_unstable();
        if members.is_empty() || members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("tuple members must be distinct and non-empty: {members:?}")));
        }
        let mut has = [false; 2];
        for &m in &members {
            let rec = classes.records.get(m).ok_or_else(|| Error::Config(format!("no record {m}")))?;
            match rec.class {
                PointClass::Equal => has[0] = true,
                PointClass::Below => has[1] = true,
                PointClass::Above => {
                    return Err(Error::Class { index: m, detail: "records with β > n-4 do not form tuples".into() });
                }
            }
        }
        let kind = match has {
            [true, false] => TupleKind::Equal,
            [false, true] => TupleKind::Below,
            _ => TupleKind::Mixed,
        };
        Ok(Self { members, kind })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub members: Vec<usize>,
    pub entries: SymMatrix<f64>,
    pub rho: f64,
}

/// `m_ii = -K(y_i)^{-n/4}(c₁Σb - c₂H(y_i,y_i))`,
/// `m_ij = -c₂ G(y_i,y_j) / (K(y_i)K(y_j))^{(n-4)/8}`, and `ρ` its least
/// eigenvalue. Every member must have `β = n-4`.
pub fn build_matrix(
    members: &[usize],
    k: &KModel,
    domain: &DomainModel,
    classes: &ClassificationReport,
) -> Result<InteractionMatrix> {
    let n = domain.n() as f64;
    let p = members.len();
    let mut m = SymMatrix::zeros(p);
    for (a, &i) in members.iter().enumerate() {
        let cls = classes.records.get(i).ok_or_else(|| Error::Config(format!("no record {i}")))?;
        if cls.class != PointClass::Equal {
            return Err(Error::Class { index: i, detail: "interaction matrices need β = n-4".into() });
        }
        let ri = &k.records[i];
        let h = match cls.h_yy {
            Some(h) => h,
            None => crate::domain::regular_part(domain, &ri.y, &ri.y)?,
        };
        m.set(a, a, -ri.value.powf(-n / 4.0) * (classes.c1 * ri.sum_b() - classes.c2 * h));
        for (b, &j) in members.iter().enumerate().skip(a + 1) {
            let rj = &k.records[j];
            let g = green(domain, &ri.y, &rj.y)?.g;
            m.set(a, b, -classes.c2 * g / (ri.value * rj.value).powf((n - 4.0) / 8.0));
        }
    }
    let rho = min_eigenvalue_sym(&m)?;
    Ok(InteractionMatrix { members: members.to_vec(), entries: m, rho })
}

/// Non-empty subsets of `items`, in order of size then lexicographically.
pub fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u64..(1u64 << items.len()))
        .map(|mask| items.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Nondegeneracy {
    pub holds: bool,
    /// Smallest `|ρ|` over all tuples, absent when there are none.
    pub worst_abs_rho: Option<f64>,
    pub offending: Option<Vec<usize>>,
}

/// `ρ ≠ 0` for every tuple of distinct records with `β = n-4`.
pub fn check_nondegeneracy(k: &KModel, domain: &DomainModel, classes: &ClassificationReport) -> Result<Nondegeneracy> {
    let equal: Vec<usize> = classes.records.iter().filter(|r| r.class == PointClass::Equal).map(|r| r.index).collect();
    let mut worst = f64::INFINITY;
    let mut offending = None;
    for tuple in subsets(&equal) {
        let rho = build_matrix(&tuple, k, domain, classes)?.rho;
        if rho.abs() < worst {
            worst = rho.abs();
            if worst <= RHO_ZERO {
                offending = Some(tuple);
            }
        }
    }
    Ok(Nondegeneracy { holds: offending.is_none(), worst_abs_rho: worst.is_finite().then_some(worst), offending })
}

/// Index of a tuple from the `ĩ` of its members, in the two conventions:
/// `p - 1 - Σ(n - ĩ)` for tuples, and `n - ĩ` for a single point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TupleIndex {
    pub tuple: i64,
    pub single: Option<i64>,
}

impl TupleIndex {
    /// `(-1)^{tuple index}`.
    pub fn sign(&self) -> i64 {
        if self.tuple.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }
}

pub fn index_of(tilde_i: &[usize], n: usize) -> TupleIndex {
    let p = tilde_i.len() as i64;
    let deficit: i64 = tilde_i.iter().map(|&t| n as i64 - t as i64).sum();
    TupleIndex { tuple: p - 1 - deficit, single: (p == 1).then_some(deficit) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CinfElement {
    pub tuple: TauTuple,
    pub index: TupleIndex,
    /// `ρ` of the `β = n-4` part, when there is one.
    pub rho: Option<f64>,
}

/// A point counted by the Euler-characteristic criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CountedPoint {
    pub record: usize,
    pub tilde_i: usize,
    pub class: PointClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Criterion {
    pub sum: i64,
    /// Value the sum must avoid.
    pub excluded: i64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct InfinityReport {
    pub n: usize,
    pub euler_characteristic: i64,
    pub classification: ClassificationReport,
    pub nondegeneracy: Nondegeneracy,
    pub equal: Vec<CinfElement>,
    pub below: Vec<CinfElement>,
    pub mixed: Vec<CinfElement>,
    pub counted_points: Vec<CountedPoint>,
    /// Absent when the nondegeneracy check fails.
    pub index_sum: Option<Criterion>,
    pub euler: Option<Criterion>,
}

impl InfinityReport {
    pub fn elements(&self) -> impl Iterator<Item = &CinfElement> {
        self.equal.iter().chain(&self.below).chain(&self.mixed)
    }
}

/// Classifies the records and lists the critical points at infinity.
pub fn enumerate_cinf(k: &KModel, domain: &DomainModel) -> Result<InfinityReport> {
    k.validate(domain)?;
    let n = domain.n();
    let classes = classify(k, domain)?;
    let nondegeneracy = check_nondegeneracy(k, domain, &classes)?;
    let counted_points = classes
        .records
        .iter()
        .filter(|r| r.plus)
        .map(|r| CountedPoint { record: r.index, tilde_i: r.tilde_i, class: r.class })
        .collect();
    let mut report = InfinityReport {
        n,
        euler_characteristic: domain.euler_characteristic(),
        classification: classes,
        nondegeneracy,
        equal: Vec::new(),
        below: Vec::new(),
        mixed: Vec::new(),
        counted_points,
        index_sum: None,
        euler: None,
    };
    if !report.nondegeneracy.holds {
        return Ok(report);
    }
    let classes = &report.classification;
    let plus_of = |c: PointClass| -> Vec<usize> { classes.records.iter().filter(|r| r.plus && r.class == c).map(|r| r.index).collect() };
    let tilde = |members: &[usize]| -> Vec<usize> { members.iter().map(|&m| classes.records[m].tilde_i).collect() };
    let mut equal = Vec::new();
    for t in subsets(&plus_of(PointClass::Equal)) {
        let rho = build_matrix(&t, k, domain, classes)?.rho;
        if rho > 0.0 {
            let index = index_of(&tilde(&t), n);
            equal.push(CinfElement { tuple: TauTuple::new(t, classes)?, index, rho: Some(rho) });
        }
    }
    let mut below = Vec::new();
    for t in subsets(&plus_of(PointClass::Below)) {
        let index = index_of(&tilde(&t), n);
        below.push(CinfElement { tuple: TauTuple::new(t, classes)?, index, rho: None });
    }
    let mut mixed = Vec::new();
    for e in &equal {
        for b in &below {
            let mut members = e.tuple.members.clone();
            members.extend(&b.tuple.members);
            let index = index_of(&tilde(&members), n);
            mixed.push(CinfElement { tuple: TauTuple::new(members, classes)?, index, rho: e.rho });
        }
    }
    report.equal = equal;
    report.below = below;
    report.mixed = mixed;
    report.index_sum = Some(index_sum_criterion(&report));
    report.euler = Some(euler_criterion(&report, report.euler_characteristic));
    Ok(report)
}

/// `Σ_{τ ∈ 𝒞^∞} (-1)^{i(τ)} ≠ 1`.
pub fn index_sum_criterion(report: &InfinityReport) -> Criterion {
    let sum = report.elements().map(|e| e.index.sign()).sum();
    Criterion { sum, excluded: 1, holds: sum != 1 }
}

/// `Σ (-1)^{n-ĩ(y)} ≠ χ(Ω)` over the counted points.
pub fn euler_criterion(report: &InfinityReport, chi: i64) -> Criterion {
    let n = report.n as i64;
    let sum = report.counted_points.iter().map(|p| if (n - p.tilde_i as i64).rem_euclid(2) == 0 { 1 } else { -1 }).sum();
    Criterion { sum, excluded: chi, holds: sum != chi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmodel::CriticalPointRecord;

    fn record(y: Vec<f64>, beta: f64, b: Vec<f64>) -> CriticalPointRecord {
        CriticalPointRecord { y, beta, b, radius: 0.1, value: 1.0 }
    }

    fn at(n: usize, x0: f64) -> Vec<f64> {
        let mut y = vec![0.0; n];
        y[0] = x0;
        y
    }

    /// ĩ negative coefficients out of n.
    fn coeffs(n: usize, negatives: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|k| if k < negatives { -scale } else { scale }).collect()
    }

    #[test]
    fn index_conventions() {
        assert_eq!(index_of(&[6], 6), TupleIndex { tuple: 0, single: Some(0) });
        assert_eq!(index_of(&[6, 6], 6).tuple, 1);
        let one = index_of(&[5], 6);
        assert_eq!((one.tuple, one.single), (-1, Some(1)));
        for tis in [vec![3usize, 5], vec![6, 2, 4], vec![1]] {
            let i = index_of(&tis, 6);
            let plus = tis.len() as i64 - 1 + tis.iter().map(|&t| 6 - t as i64).sum::<i64>();
            assert_eq!(i.sign(), if plus % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn single_equal_point_matrix_is_the_indicator() {
        let n = 6;
        let d = DomainModel::unit_ball(n).unwrap();
        let k = KModel { records: vec![record(at(n, 0.2), 2.0, coeffs(n, 6, 1.0))], ..KModel::constant(1.0) };
        let cls = classify(&k, &d).unwrap();
        let m = build_matrix(&[0], &k, &d, &cls).unwrap();
        assert!((m.rho - cls.records[0].indicator.unwrap()).abs() < 1e-12);
        assert!(m.rho > 0.0);
    }

    #[test]
    fn below_points_only() {
        let n = 6;
        let d = DomainModel::unit_ball(n).unwrap();
        let k = KModel {
            records: vec![record(at(n, 0.3), 1.5, coeffs(n, 6, 1.0)), record(at(n, -0.3), 1.5, coeffs(n, 5, 1.0))],
            ..KModel::constant(1.0)
        };
        let r = enumerate_cinf(&k, &d).unwrap();
        assert_eq!(r.below.len(), 3);
        assert!(r.equal.is_empty() && r.mixed.is_empty());
        // ĩ = 6 and ĩ = 5 singletons: indices 0 and -1; pair: 1 - 1 = 0.
        assert_eq!(r.index_sum.clone().unwrap(), Criterion { sum: 1, excluded: 1, holds: false });
        assert_eq!(r.euler.clone().unwrap().sum, 1 - 1);
    }

    #[test]
    fn negative_pair_drops_out() {
        // Two close β = n-4 points with a small positive diagonal: the
        // Green's function coupling makes the pair matrix indefinite.
        let n = 6;
        let d = DomainModel::unit_ball(n).unwrap();
        let cls0 = classify(&KModel { records: vec![record(at(n, 0.0), 2.0, coeffs(n, 6, 1.0))], ..KModel::constant(1.0) }, &d).unwrap();
        let (c1, c2) = (cls0.c1, cls0.c2);
        let (y1, y2) = (at(n, 0.15), at(n, -0.15));
        let h = crate::domain::regular_part(&d, &y1, &y1).unwrap();
        // -c₁Σb + c₂H = 0.05 c₂ H on each diagonal.
        let s = 0.95 * c2 * h / c1 / n as f64;
        let k = KModel { records: vec![record(y1, 2.0, vec![s; n]), record(y2, 2.0, vec![s; n])], ..KModel::constant(1.0) };
        let r = enumerate_cinf(&k, &d).unwrap();
        assert!(r.nondegeneracy.holds);
        assert_eq!(r.equal.len(), 2);
        assert!(r.equal.iter().all(|e| e.tuple.members.len() == 1));
    }

    #[test]
    fn criteria_examples() {
        let n = 6;
        let d = DomainModel::unit_ball(n).unwrap();
        let empty = enumerate_cinf(&KModel::constant(1.0), &d).unwrap();
        assert_eq!(empty.index_sum.clone().unwrap(), Criterion { sum: 0, excluded: 1, holds: true });
        assert_eq!(empty.euler.clone().unwrap(), Criterion { sum: 0, excluded: 1, holds: true });
        // β > n-4 with ĩ = n: counted, sum 1 = χ.
        let above = KModel { records: vec![record(at(n, 0.2), 3.0, coeffs(n, 6, 1.0))], ..KModel::constant(1.0) };
        let r = enumerate_cinf(&above, &d).unwrap();
        assert_eq!(r.euler.clone().unwrap(), Criterion { sum: 1, excluded: 1, holds: false });
        assert!(r.elements().next().is_none());
    }

    #[test]
    fn interlacing_on_triples() {
        let n = 6;
        let d = DomainModel::unit_ball(n).unwrap();
        let k = KModel {
            records: vec![
                record(at(n, 0.3), 2.0, coeffs(n, 6, 0.2)),
                record(at(n, -0.3), 2.0, coeffs(n, 4, 0.1)),
                record(vec![0.0, 0.3, 0.0, 0.0, 0.0, 0.0], 2.0, coeffs(n, 5, 0.3)),
            ],
            ..KModel::constant(1.0)
        };
        let cls = classify(&k, &d).unwrap();
        for t in subsets(&[0, 1, 2]) {
            let rho = build_matrix(&t, &k, &d, &cls).unwrap().rho;
            for s in subsets(&t) {
                assert!(build_matrix(&s, &k, &d, &cls).unwrap().rho >= rho - 1e-12);
            }
        }
    }
}
