// HIRES ("High Irradiance RESponse") plant-physiology model, 8 equations.
//
// Source: E. Hairer, G. Wanner, "Solving Ordinary Differential Equations II:
// Stiff and Differential-Algebraic Problems", 2nd ed., Springer 1996,
// Section IV.10, equation (10.4). Same constants as the IVP test set
// (Mazzia & Magherini), problem "HIRES".

pub const K1: f64 = 1.71;
pub const K2: f64 = 0.43;
pub const K3: f64 = 8.32;
pub const K4: f64 = 0.0007;
pub const K5: f64 = 8.75;
pub const K6: f64 = 10.03;
pub const K7: f64 = 0.035;
pub const K8: f64 = 1.12;
pub const K9: f64 = 1.745;
pub const K10: f64 = 280.0;
pub const K11: f64 = 0.69;
pub const K12: f64 = 1.81;

pub const Y0: [f64; 8] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0057];
pub const T0: f64 = 0.0;
/// The standard test set integrates to 321.8122; these experiments stop at 40.
pub const T_END: f64 = 40.0;
