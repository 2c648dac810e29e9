//! Property tests for the envelope and extension operators: the envelope
//! is the least majorant at its slope, and the extension is the largest
//! function at slope one.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use kr_core::{envelope, lip_constant, mcshane_extend, LipFunction, MetricSpace};

fn space_and_values() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    prop::collection::vec(
        prop::collection::vec(-4.0f64..4.0, 2),
        2..10,
    )
    .prop_flat_map(|points| {
        let n = points.len();
        (Just(points), prop::collection::vec(-3.0f64..3.0, n))
    })
}

fn max_pair_quotient(space: &MetricSpace, raw: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..raw.len() {
        for j in i + 1..raw.len() {
            let d = space.dist(i, j);
            if d > 0.0 {
                best = best.max((raw[i] - raw[j]).abs() / d);
            }
        }
    }
    best
}

fn build(points: Vec<Vec<f64>>, raw: &[f64]) -> (Arc<MetricSpace>, LipFunction) {
    let space = Arc::new(MetricSpace::euclidean(points).unwrap());
    let quotient = max_pair_quotient(&space, raw);
    let f = LipFunction::new(raw.iter().copied().enumerate().collect(), quotient).unwrap();
    (space, f)
}

proptest! {
    #[test]
    fn envelope_majorizes_and_tightens((points, raw) in space_and_values()) {
        let (space, f) = build(points, &raw);
        let mut previous: Option<LipFunction> = None;
        for n in [0.5f64, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let phi = envelope(&f, n, &space).unwrap();
            for (&i, &v) in f.values() {
                prop_assert!(phi.value(i).unwrap() >= v - 1e-12,
                    "envelope must majorize at point {i}");
                if let Some(ref p) = previous {
                    prop_assert!(p.value(i).unwrap() >= phi.value(i).unwrap() - 1e-12,
                        "envelopes must shrink as the slope grows");
                }
            }
            let slope = lip_constant(&phi, &space).unwrap();
            prop_assert!(slope <= n + 1e-9, "slope {slope} over requested {n}");
            previous = Some(phi);
        }
    }

    #[test]
    fn envelope_fixes_functions_already_at_slope((points, raw) in space_and_values()) {
        let (space, f) = build(points, &raw);
        let lip = f.lip_bound();
        for n in [lip.max(1e-6), lip * 1.5 + 0.1, lip + 3.0] {
            let phi = envelope(&f, n, &space).unwrap();
            for (&i, &v) in f.values() {
                prop_assert!((phi.value(i).unwrap() - v).abs() <= 1e-9,
                    "slope {n} is past the function's own constant {lip}");
            }
        }
    }

    #[test]
    fn lip_constant_is_achieved_by_some_pair((points, raw) in space_and_values()) {
        let (space, f) = build(points, &raw);
        let lip = lip_constant(&f, &space).unwrap();
        let best = max_pair_quotient(&space, &raw);
        prop_assert!((lip - best).abs() <= 1e-12 * (1.0 + best));
    }

    #[test]
    fn extension_is_the_largest_one_lipschitz_extension(
        (points, raw) in space_and_values(),
        keep in prop::collection::vec(any::<bool>(), 2..10),
        shrink in 0.0f64..1.0,
    ) {
        let space = Arc::new(MetricSpace::euclidean(points).unwrap());
        // Build a genuinely 1-Lipschitz partial assignment by scaling the
        // raw values down to slope at most 1 and keeping a nonempty subset.
        let quotient = max_pair_quotient(&space, &raw);
        let scale = if quotient > 1.0 { 1.0 / quotient } else { 1.0 };
        let mut partial: BTreeMap<usize, f64> = raw
            .iter()
            .enumerate()
            .filter(|(k, _)| *keep.get(*k).unwrap_or(&false))
            .map(|(i, &v)| (i, v * scale))
            .collect();
        partial.entry(0).or_insert(raw[0] * scale);

        let psi = mcshane_extend(&partial, &space).unwrap();
        for (&i, &v) in &partial {
            prop_assert!((psi.value(i).unwrap() - v).abs() <= 1e-12,
                "extension must restrict to its input at {i}");
        }
        prop_assert!(lip_constant(&psi, &space).unwrap() <= 1.0 + 1e-9);

        // Any competing 1-Lipschitz extension stays under psi. Build one by
        // pulling the extension toward the partial minimum off the domain.
        let floor = partial.values().fold(f64::INFINITY, |a, &b| a.min(b));
        let competitor: Vec<f64> = psi
            .values()
            .iter()
            .map(|(&i, &v)| {
                if partial.contains_key(&i) {
                    v
                } else {
                    floor + (v - floor) * shrink
                }
            })
            .collect();
        let comp_quotient = max_pair_quotient(&space, &competitor);
        if comp_quotient <= 1.0 {
            for (i, &v) in competitor.iter().enumerate() {
                prop_assert!(v <= psi.value(i).unwrap() + 1e-12,
                    "a 1-Lipschitz extension exceeded the maximal one at {i}");
            }
        }
    }
}
