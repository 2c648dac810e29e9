//! Property tests for the measure layer: linearity of integration, mass
//! preservation under pushforward and mixture, Lipschitz dependence of the
//! first moment on its base point, and soundness of the coarsening bound
//! against the exact transport distance.

use std::sync::Arc;

use proptest::prelude::*;

use kr_core::{kr_distance, DiscreteMeasure, LipFunction, MetricSpace, Target};

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..12)
        .prop_flat_map(|points| {
            let n = points.len();
            (Just(points), prop::collection::vec(0.01f64..1.0, n))
        })
}

fn normalized(space: Arc<MetricSpace>, weights: &[f64]) -> DiscreteMeasure {
    let total: f64 = weights.iter().sum();
    DiscreteMeasure::new(
        space,
        weights.iter().enumerate().map(|(i, &w)| (i, w / total)),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn integrate_is_linear(
        (points, weights) in instance(),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let space = Arc::new(MetricSpace::euclidean(points).unwrap());
        let nu = normalized(Arc::clone(&space), &weights);
        let f = LipFunction::from_fn(&space, 10.0, |i| {
            space.point(i).unwrap()[0]
        }).unwrap();
        let g = LipFunction::from_fn(&space, 10.0, |i| {
            space.point(i).unwrap()[1].abs()
        }).unwrap();
        let combo = LipFunction::from_fn(&space, 40.0, |i| {
            alpha * f.value(i).unwrap() + beta * g.value(i).unwrap()
        }).unwrap();
        let lhs = nu.integrate(&combo).unwrap();
        let rhs = alpha * nu.integrate(&f).unwrap() + beta * nu.integrate(&g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
    }

    #[test]
    fn pushforward_preserves_mass((points, weights) in instance()) {
        let space = Arc::new(MetricSpace::euclidean(points).unwrap());
        let nu = normalized(Arc::clone(&space), &weights);
        // A deterministic squash toward the first coordinate axis.
        let image = nu.pushforward(|i| {
            let p = space.point(i).unwrap();
            Ok(Target::Coords(vec![p[0] * 0.5 + p[1] * 0.25, p[1] * 0.5]))
        }).unwrap();
        prop_assert!((image.mass() - nu.mass()).abs() <= 1e-12);
        prop_assert!(image.is_probability());
    }

    #[test]
    fn mixture_preserves_mass(
        (points, weights) in instance(),
        split in 0.05f64..0.95,
    ) {
        let space = Arc::new(MetricSpace::euclidean(points).unwrap());
        let nu = normalized(Arc::clone(&space), &weights);
        let rev: Vec<f64> = weights.iter().rev().copied().collect();
        let mu = normalized(Arc::clone(&space), &rev);
        let mix = kr_core::mixture(&[(split, &nu), (1.0 - split, &mu)]).unwrap();
        prop_assert!((mix.mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn first_moment_is_one_lipschitz_in_the_base((points, weights) in instance()) {
        let space = Arc::new(MetricSpace::euclidean(points).unwrap());
        let nu = normalized(Arc::clone(&space), &weights);
        for a in 0..space.len() {
            for b in a + 1..space.len() {
                let ma = nu.first_moment(a).unwrap();
                let mb = nu.first_moment(b).unwrap();
                prop_assert!((ma - mb).abs() <= space.dist(a, b) + 1e-12,
                    "moment bases {a},{b}");
            }
        }
    }

    #[test]
    fn coarsen_bound_dominates_the_exact_distance(
        (points, weights) in instance(),
        cap in 1usize..6,
    ) {
        let space = Arc::new(MetricSpace::euclidean(points).unwrap());
        let nu = normalized(Arc::clone(&space), &weights);
        let (coarse, bound) = nu.coarsen(cap).unwrap();
        prop_assert!(coarse.support_size() <= cap);
        prop_assert!((coarse.mass() - nu.mass()).abs() <= 1e-12);
        let exact = kr_distance(&nu, &coarse).unwrap().value;
        prop_assert!(exact <= bound + 1e-12,
            "exact {exact} exceeded the reported bound {bound}");
    }
}
