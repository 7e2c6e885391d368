/// Distances below this are floored before the power law is applied, so
/// same-city pairs (distance 0) get a large but finite weight. At 1 km the
/// same-city weight swamps everything else and most Early agents end up in
/// city-sized islands; 10 km leaves room for nearby-city ties.
pub const R_MIN_KM: f64 = 10.0;

/// Truncated power-law friendship kernel: `max(r, R_MIN_KM)^-gamma` below
/// `nu_km`, flat at `nu_km^-gamma` from `nu_km` on.
pub fn kernel_weight(r_km: f64, gamma: f64, nu_km: f64) -> f64 {
    floored_kernel_weight(r_km, gamma, nu_km, R_MIN_KM)
}

/// Same kernel with an explicit distance floor.
pub fn floored_kernel_weight(r_km: f64, gamma: f64, nu_km: f64, r_min_km: f64) -> f64 {
    debug_assert!(r_km >= 0.0);
    let r = if r_km >= nu_km { nu_km } else { r_km.max(r_min_km) };
    r.powf(-gamma)
}
