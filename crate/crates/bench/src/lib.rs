//! Fixtures shared by the criterion benches.

use symplanar::symplectic::random_affine_symplectic;
use symplanar::{ConvexBody, Vector};

/// Bodies exercised by the benches, with a short name for each.
pub fn fixtures() -> Vec<(&'static str, ConvexBody)> {
    let map = random_affine_symplectic(4, 7, 0.5).expect("valid map");
    vec![
        ("ball", ConvexBody::ball(2).expect("ball")),
        (
            "ellipsoid_1_sqrt2",
            ConvexBody::ellipsoid_from_coefficients(&[1.0, 2f64.sqrt()]).expect("ellipsoid"),
        ),
        (
            "polydisc_m16",
            ConvexBody::smoothed_polydisc(16, vec![1.0, 1.0], Vector::zeros(4)).expect("polydisc"),
        ),
        (
            "transformed_ball",
            ConvexBody::transformed(ConvexBody::ball(2).expect("ball"), map).expect("image"),
        ),
    ]
}
