use serde::{Deserialize, Serialize};

use super::constants::universal_constants;
use super::model::KModel;
use crate::domain::{regular_part, DomainModel};
use crate::error::Result;
use crate::numerics::QuadratureSpec;

/// Window for deciding `β = n-4`.
pub const BETA_EQUALITY_WINDOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointClass {
    /// β < n-4: the flatness term dominates the interaction.
    Below,
    /// β = n-4: flatness and self-interaction balance.
    Equal,
    /// β > n-4: the self-interaction dominates.
    Above,
}

impl PointClass {
    pub fn of(n: usize, beta: f64) -> Self {
        let d = beta - (n as f64 - 4.0);
        if d.abs() <= BETA_EQUALITY_WINDOW {
            PointClass::Equal
        } else if d < 0.0 {
            PointClass::Below
        } else {
            PointClass::Above
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RecordClassification {
    pub index: usize,
    pub tilde_i: usize,
    pub class: PointClass,
    pub plus: bool,
    /// `-Σb_k` below, `-c₁Σb_k + c₂H(y,y)` at equality, absent above.
    pub indicator: Option<f64>,
    /// H(y,y), present at equality.
    pub h_yy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ClassificationReport {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub records: Vec<RecordClassification>,
}

pub fn classify(model: &KModel, domain: &DomainModel) -> Result<ClassificationReport> {
    let n = domain.n();
    let consts = universal_constants(n, 1.5, &QuadratureSpec::default())?;
    let (c1, c2) = (consts.c1_thm.value, consts.c2_thm.value);
    let mut records = Vec::with_capacity(model.records.len());
    for (index, rec) in model.records.iter().enumerate() {
        let class = PointClass::of(n, rec.beta);
        let sum_b = rec.sum_b();
        let (indicator, h_yy) = match class {
            PointClass::Below => (Some(-sum_b), None),
            PointClass::Equal => {
                let h = regular_part(domain, &rec.y, &rec.y)?;
                (Some(-c1 * sum_b + c2 * h), Some(h))
            }
            PointClass::Above => (None, None),
        };
        records.push(RecordClassification {
            index,
            tilde_i: rec.tilde_i(),
            class,
            plus: indicator.map_or(true, |v| v > 0.0),
            indicator,
            h_yy,
        });
    }
    Ok(ClassificationReport { n, c1, c2, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmodel::CriticalPointRecord;

    fn single(n: usize, beta: f64, b: Vec<f64>) -> KModel {
        KModel {
            records: vec![CriticalPointRecord { y: vec![0.0; n], beta, b, radius: 0.4, value: 1.0 }],
            ..KModel::constant(1.0)
        }
    }

    #[test]
    fn below_class_sign_rule() {
        let d = DomainModel::unit_ball(6).unwrap();
        let b = vec![-1.0, -1.0, 1.0, 1.0, 1.0, 1.0];
        let r = classify(&single(6, 1.5, b.clone()), &d).unwrap().records[0].clone();
        assert_eq!((r.tilde_i, r.class, r.plus), (2, PointClass::Below, false));
        assert_eq!(r.indicator, Some(-2.0));
        let flipped: Vec<f64> = b.iter().map(|v| -v).collect();
        let r = classify(&single(6, 1.5, flipped), &d).unwrap().records[0].clone();
        assert_eq!((r.tilde_i, r.plus), (4, true));
    }

    #[test]
    fn equal_class_with_negative_sum_is_plus() {
        let d = DomainModel::unit_ball(6).unwrap();
        let r = classify(&single(6, 2.0, vec![-1.0; 6]), &d).unwrap().records[0].clone();
        assert_eq!(r.class, PointClass::Equal);
        assert!(r.plus && r.h_yy.unwrap() > 0.0);
    }

    #[test]
    fn above_class_is_always_plus() {
        let d = DomainModel::unit_ball(6).unwrap();
        let r = classify(&single(6, 3.0, vec![5.0; 6]), &d).unwrap().records[0].clone();
        assert_eq!((r.class, r.plus, r.indicator), (PointClass::Above, true, None));
    }

    #[test]
    fn equality_window() {
        assert_eq!(PointClass::of(6, 2.0 + 1e-13), PointClass::Equal);
        assert_eq!(PointClass::of(6, 2.0 + 1e-9), PointClass::Above);
        assert_eq!(PointClass::of(6, 2.0 - 1e-9), PointClass::Below);
    }
}
