//! Hartman-6 constants.
//!
//! Source: L. C. W. Dixon and G. P. Szegő, "The global optimisation problem:
//! an introduction", in Towards Global Optimisation 2, North-Holland, 1978.

pub const HARTMAN6_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

pub const HARTMAN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

pub const HARTMAN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Known global minimum value and location.
pub const HARTMAN6_MIN: f64 = -3.32237;
pub const HARTMAN6_ARGMIN: [f64; 6] = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];

/// Four-bar truss: load F (kN), Young's modulus E (kN/cm^2), length L (cm), stress σ (kN/cm^2).
pub const FOURBAR_F: f64 = 10.0;
pub const FOURBAR_E: f64 = 2.0e5;
pub const FOURBAR_L: f64 = 200.0;
pub const FOURBAR_SIGMA: f64 = 10.0;
