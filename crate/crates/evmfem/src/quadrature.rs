//! Gauss-Legendre quadrature on intervals and axis-aligned rectangles.
//!
//! Rules are stored on the reference interval [0, 1] with weights summing to one,
//! so an integral over [a, b] is `(b - a) * Σ w_i f(a + (b - a) x_i)`.

use crate::mesh::Rect;

/// Nodes and weights on [0, 1], weights sum to 1.
pub fn gauss_1d(n: usize) -> &'static [(f64, f64)] {
    match n {
        1 => &GAUSS_1,
        2 => &GAUSS_2,
        3 => &GAUSS_3,
        4 => &GAUSS_4,
        5 => &GAUSS_5,
        6 => &GAUSS_6,
        _ => panic!("gauss_1d: unsupported rule n={n}"),
    }
}

static GAUSS_1: [(f64, f64); 1] = [(0.5, 1.0)];

static GAUSS_2: [(f64, f64); 2] = [
    (0.21132486540518713, 0.5),
    (0.7886751345948129, 0.5),
];

static GAUSS_3: [(f64, f64); 3] = [
    (0.1127016653792583, 0.2777777777777778),
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

static GAUSS_4: [(f64, f64); 4] = [
    (0.06943184420297371, 0.1739274225687269),
    (0.33000947820757187, 0.3260725774312731),
    (0.6699905217924281, 0.3260725774312731),
    (0.9305681557970262, 0.1739274225687269),
];

static GAUSS_5: [(f64, f64); 5] = [
    (0.04691007703066802, 0.11846344252809454),
    (0.23076534494715845, 0.23931433524968324),
    (0.5, 0.28444444444444444),
    (0.7692346550528415, 0.23931433524968324),
    (0.9530899229693319, 0.11846344252809454),
];

static GAUSS_6: [(f64, f64); 6] = [
    (0.03376524289842397, 0.0856622461895852),
    (0.16939530676686776, 0.1803807865240693),
    (0.3806904069584016, 0.2339569672863455),
    (0.6193095930415985, 0.2339569672863455),
    (0.8306046932331322, 0.1803807865240693),
    (0.966234757101576, 0.0856622461895852),
];

/// ∫ over [a, b] with an n-point rule.
pub fn integrate_interval(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let len = b - a;
    gauss_1d(n)
        .iter()
        .map(|&(x, w)| w * f(a + len * x))
        .sum::<f64>()
        * len
}

/// ∫∫ over a rectangle with an n×n tensor rule.
pub fn integrate_rect(rect: &Rect, n: usize, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let rule = gauss_1d(n);
    let (w, h) = (rect.width(), rect.height());
    let mut acc = 0.0;
    for &(xi, wx) in rule {
        let x = rect.x0 + w * xi;
        for &(yi, wy) in rule {
            let y = rect.y0 + h * yi;
            acc += wx * wy * f(x, y);
        }
    }
    acc * w * h
}
