//! Regression states for the decrease and expansion checks.

use serde::{Deserialize, Serialize};

use super::field::ReducedState;
use crate::bubble::{Configuration, DirectionKind, Mass, PairingDirection};
use crate::kmodel::{CriticalPointRecord, KModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BatteryCase {
    pub label: String,
    pub n: usize,
    pub k: KModel,
    pub state: ReducedState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExpansionCase {
    pub case: BatteryCase,
    pub direction: PairingDirection,
    pub lambdas: Vec<f64>,
}

fn axis(n: usize, k: usize, v: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[k] = v;
    x
}

fn record(y: Vec<f64>, beta: f64, b: Vec<f64>, radius: f64) -> CriticalPointRecord {
    CriticalPointRecord { y, beta, b, radius, value: 1.0 }
}

fn model(records: Vec<CriticalPointRecord>) -> KModel {
    KModel { background: 1.0, tilt: Vec::new(), curvature: 0.0, records }
}

fn shifted(y: &[f64], dir: &[f64], len: f64) -> Vec<f64> {
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    y.iter().zip(dir).map(|(y, d)| y + len * d / norm).collect()
}

fn case(label: &str, k: KModel, masses: Vec<(Vec<f64>, f64)>, records: Vec<usize>) -> BatteryCase {
    let n = masses[0].0.len();
    let config = Configuration { masses: masses.into_iter().map(|(a, lambda)| Mass { alpha: 1.0, a, lambda }).collect() };
    BatteryCase { label: label.into(), n, k, state: ReducedState { config, records } }
}

fn alternating(n: usize, v: f64) -> Vec<f64> {
    (0..n).map(|k| if k % 2 == 0 { v } else { -v }).collect()
}

/// Twelve states: every single-mass class in dimension 6 (centered and
/// off-center), one `β > n-4` state in dimension 5, and the two-mass
/// regions (distinct plus points, a shared point, mixed classes).
pub fn decrease_battery() -> Vec<BatteryCase> {
    let n = 6;
    let y = axis(n, 0, 0.3);
    let lam = 30.0;
    let r = 0.25;
    let below_plus = || record(y.clone(), 1.5, vec![-1.5; n], r);
    let mixed_plus = || record(y.clone(), 1.5, vec![-1.5, -1.0, -2.0, -1.2, -1.5, -0.8], r);
    let slant = [0.6, 0.8, 0.0, 0.0, 0.0, 0.0];
    let mut out = vec![
        case("below-plus/center", model(vec![below_plus()]), vec![(y.clone(), lam)], vec![0]),
        case("below-minus/center", model(vec![record(y.clone(), 1.5, vec![3.0; n], r)]), vec![(y.clone(), lam)], vec![0]),
        case("below-plus/moment-band", model(vec![mixed_plus()]), vec![(shifted(&y, &slant, 0.7 / lam), lam)], vec![0]),
        case("below-plus/far", model(vec![mixed_plus()]), vec![(shifted(&y, &slant, 8.0 / 60.0), 60.0)], vec![0]),
        case("equal-plus/center", model(vec![record(y.clone(), 2.0, alternating(n, 0.5), r)]), vec![(y.clone(), lam)], vec![0]),
        case("equal-minus/center", model(vec![record(y.clone(), 2.0, vec![10.0; n], r)]), vec![(y.clone(), lam)], vec![0]),
        case("above/center", model(vec![record(y.clone(), 2.5, vec![-0.5; n], r)]), vec![(y.clone(), lam)], vec![0]),
        case(
            "above/offset",
            model(vec![record(y.clone(), 2.5, vec![-0.5, 0.4, -0.6, 0.5, -0.3, 0.7], r)]),
            vec![(shifted(&y, &slant, 0.1), lam)],
            vec![0],
        ),
    ];
    let y5 = axis(5, 0, 0.3);
    out.push(case("above/center/n5", model(vec![record(y5.clone(), 1.5, vec![-0.5; 5], r)]), vec![(y5, lam)], vec![0]));

    let y2 = axis(n, 0, -0.3);
    out.push(case(
        "two-plus/distinct",
        model(vec![below_plus(), record(y2.clone(), 1.5, vec![-1.0; n], r)]),
        vec![(y.clone(), lam), (y2.clone(), 40.0)],
        vec![0, 1],
    ));
    let centre = vec![0.0; n];
    out.push(case(
        "two/shared-point",
        model(vec![record(centre.clone(), 1.5, vec![-1.5; n], 0.4)]),
        vec![(axis(n, 0, 0.08), lam), (axis(n, 0, -0.08), 36.0)],
        vec![0, 0],
    ));
    out.push(case(
        "two/mixed-classes",
        model(vec![below_plus(), record(y2.clone(), 2.0, alternating(n, 0.5), r)]),
        vec![(y.clone(), lam), (y2, lam)],
        vec![0, 1],
    ));
    out
}

/// Expansion sweeps: the dilation pairing at the critical point for each
/// class, and translation pairings off the critical point.
pub fn expansion_battery(n: usize) -> Vec<ExpansionCase> {
    let y = axis(n, 0, 0.2);
    let r = 0.25;
    let sweep = vec![20.0, 40.0, 80.0, 160.0];
    let dil = PairingDirection { mass: 0, kind: DirectionKind::Dilation };
    let tr = PairingDirection { mass: 0, kind: DirectionKind::Translation(1) };
    let nf = n as f64;
    let mut out = Vec::new();
    let mut push = |label: &str, beta: f64, b: Vec<f64>, a: Vec<f64>, direction, lambdas: Vec<f64>| {
        let k = model(vec![record(y.clone(), beta, b, r)]);
        out.push(ExpansionCase { case: case(label, k, vec![(a, lambdas[0])], vec![0]), direction, lambdas });
    };
    if n >= 6 {
        push("below/dilation", 1.5, vec![-1.5; n], y.clone(), dil, sweep.clone());
        push("equal/dilation", nf - 4.0, alternating(n, 0.5), y.clone(), dil, sweep.clone());
    }
    push("above/dilation", nf - 2.5, vec![-0.5; n], y.clone(), dil, sweep.clone());
    let off = shifted(&y, &axis(n, 1, 1.0), 0.05);
    // Off center the moment term is only reached once `λ|a-y|` is large.
    push("translation/off-center", 1.5, alternating(n, 1.0), off, tr, sweep.iter().map(|l| 2.0 * l).collect());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expected {
    /// The flow reaches a critical point at infinity at the start record.
    Reach,
    /// The flow leaves the neighbourhood.
    Exit,
}

/// One mass started on a record at the center of the unit ball in
/// dimension 6, one start per class and sign.
pub fn flow_battery() -> Vec<(BatteryCase, Expected)> {
    let n = 6;
    let y = vec![0.0; n];
    let start = |label: &str, beta: f64, b: Vec<f64>| {
        case(label, model(vec![record(y.clone(), beta, b, 0.5)]), vec![(y.clone(), 10.0)], vec![0])
    };
    vec![
        (start("below-plus", 1.5, vec![-0.5; n]), Expected::Reach),
        (start("below-minus", 1.5, vec![10.0; n]), Expected::Exit),
        (start("equal-plus", 2.0, alternating(n, 0.5)), Expected::Reach),
        (start("equal-minus", 2.0, vec![10.0; n]), Expected::Exit),
        (start("above-plus", 2.5, vec![-0.5; n]), Expected::Reach),
        (start("above-minus", 2.5, vec![0.5; n]), Expected::Reach),
    ]
}

/// One mass sitting on a single record at the center of the unit ball,
/// with `K(0) = value`.
pub fn centred_case(label: &str, n: usize, beta: f64, b: Vec<f64>, radius: f64, value: f64, lambda: f64) -> BatteryCase {
    let y = vec![0.0; n];
    let rec = CriticalPointRecord { value, ..record(y.clone(), beta, b, radius) };
    case(label, model(vec![rec]), vec![(y, lambda)], vec![0])
}
