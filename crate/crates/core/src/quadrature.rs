//! Fixed quadrature rules used by the projections.
//!
//! Triangle: 6-point symmetric rule, exact for polynomials of degree 4.
//! Edge: 3-point Gauss-Legendre, exact for degree 5.

use crate::Point;

/// Barycentric coordinates and weights (summing to 1) of the degree-4 rule.
#[allow(clippy::excessive_precision)]
pub const TRIANGLE_ORDER4: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445_948_490_915_964_886_32;
    const B: f64 = 0.108_103_018_168_070_227_36;
    const C: f64 = 0.091_576_213_509_770_743_46;
    const D: f64 = 0.816_847_572_980_458_513_08;
    const WA: f64 = 0.223_381_589_678_011_465_70;
    const WC: f64 = 0.109_951_743_655_321_867_64;
    [
        ([B, A, A], WA),
        ([A, B, A], WA),
        ([A, A, B], WA),
        ([D, C, C], WC),
        ([C, D, C], WC),
        ([C, C, D], WC),
    ]
};

pub const TRIANGLE_ORDER: u32 = 4;
pub const EDGE_POINTS: usize = 3;


/// Gauss-Legendre nodes on [0, 1] with weights summing to 1.
pub const EDGE_GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Average of `f` over the triangle with vertices `p`.
pub fn triangle_average<T, F>(p: [Point; 3], f: F) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: Fn(Point) -> T,
{
    let mut acc: Option<T> = None;
    for (bary, w) in TRIANGLE_ORDER4 {
        let x = [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ];
        let term = f(x) * w;
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    acc.expect("rule has points")
}

/// Average of `f` over the segment from `a` to `b`.
pub fn edge_average<T, F>(a: Point, b: Point, f: F) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: Fn(Point) -> T,
{
    let mut acc: Option<T> = None;
    for (s, w) in EDGE_GAUSS3 {
        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let term = f(x) * w;
        acc = Some(match acc {
            Some(v) => v + term,
            None => term,
        });
    }
    acc.expect("rule has points")
}
