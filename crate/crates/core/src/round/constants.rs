//! The cost constant of the configuration rounding, term by term.

/// Moving every remaining client's demand to the facilities serving it
/// fractionally costs `sum_j d_av(j) <= LP`.
pub const CLIENT_TO_FACILITY: f64 = 1.0;

/// Per node `p`, the facility-to-representative part of the moving cost is
/// `2 sum_{v in J_p} (D(U_v) + 4 D'(U_v))`; summed over all nodes this is
/// `2 D_F + 8 D'_F = 10 LP`.
pub const LOCAL_MOVES: f64 = 10.0;

/// The representative-to-center part of the moving cost is at most
/// `8 ell (2 x_{U_p, C~}) d(J_p, R \ J_p) <= 16 ell ell2 pi(J_p) d(J_p, R \ J_p)`,
/// and `pi(J) d(J, R \ J) <= 4 D(U_J) + 10 D'(U_J)`, so the sum over all
/// nodes is at most `16 ell ell2 (4 + 10) LP = 224 ell ell2 LP`.
pub const CENTER_MOVES_PER_ELL_ELL2: f64 = 16.0 * (4.0 + 10.0);

/// `K(ell, ell2) = 1 + 10 + ell2 + 224 ell ell2`, the pre-assignment
/// contributing `ell2 D_F = ell2 LP`.
pub fn cost_constant(ell: usize, ell2: usize) -> f64 {
    let (ell, ell2) = (ell as f64, ell2 as f64);
    CLIENT_TO_FACILITY + LOCAL_MOVES + ell2 + CENTER_MOVES_PER_ELL_ELL2 * ell * ell2
}
