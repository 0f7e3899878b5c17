//! Traction-separation laws.
//!
//! Jumps are `u⁺ − u⁻`. Laws return the traction acting on the plus body, which resists
//! opening: `t = −∂Ψ/∂⟦u⟧` on the loading branch. Local frame: normal `n`, tangent
//! `m = (−n_y, n_x)`.

use super::ConstitutiveError;
use crate::Vec2;
use nalgebra::Matrix2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TslModel {
    Linear { k: f64 },
    /// Exponential law with peak traction `𝒢_c/(e δ₀)` at `δ₀`; `beta` weights sliding.
    Exponential { gc: f64, delta0: f64, beta: f64 },
    /// Bilinear mixed-mode law with a Benzeggagh–Kenane propagation criterion.
    BilinearMixedMode { k: f64, g_ic: f64, g_iic: f64, n: f64, s: f64, eta: f64, mu: f64 },
}

/// History at one interface quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CohesiveState {
    pub damage: f64,
    pub max_separation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesiveResponse {
    pub traction: Vec2,
    /// `∂ traction / ∂ jump`.
    pub tangent: Matrix2<f64>,
    pub trial: CohesiveState,
}

impl TslModel {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let bad = |msg: String| Err(ConstitutiveError::InvalidParameter(msg));
        match *self {
            TslModel::Linear { k } if !(k > 0.0) => bad(format!("k = {k}")),
            TslModel::Exponential { gc, delta0, beta } if !(gc > 0.0 && delta0 > 0.0 && beta >= 0.0) => {
                bad(format!("G_c = {gc}, delta0 = {delta0}, beta = {beta}"))
            }
            TslModel::BilinearMixedMode { k, g_ic, g_iic, n, s, eta, mu } => {
                if !(k > 0.0 && g_ic > 0.0 && g_iic > 0.0 && n > 0.0 && s > 0.0 && eta >= 1.0 && mu >= 0.0) {
                    return bad(format!("bilinear parameters out of range: {self:?}"));
                }
                if !(2.0 * g_ic * k > n * n && 2.0 * g_iic * k > s * s) {
                    return bad("toughness too small for the onset strengths (need 2GK > strength²)".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Initial stiffness, also used as the compressive contact penalty.
    pub fn initial_stiffness(&self) -> f64 {
        match *self {
            TslModel::Linear { k } => k,
            TslModel::Exponential { gc, delta0, .. } => gc / (delta0 * delta0),
            TslModel::BilinearMixedMode { k, .. } => k,
        }
    }

    pub fn is_history_dependent(&self) -> bool {
        !matches!(self, TslModel::Linear { .. })
    }
}

/// Normal opening and unsigned sliding magnitude.
pub fn rotate_jump_to_local(jump: &Vec2, n: &Vec2) -> (f64, f64) {
    let dn = jump.dot(n);
    (dn, (jump - n * dn).norm())
}

fn frame(n: &Vec2) -> Matrix2<f64> {
    Matrix2::new(n.x, -n.y, n.y, n.x)
}

/// Traction, consistent tangent and trial history for a jump.
pub fn cohesive_traction(
    tsl: &TslModel,
    jump: &Vec2,
    n: &Vec2,
    state: &CohesiveState,
) -> Result<CohesiveResponse, ConstitutiveError> {
    if !(jump.iter().chain(n.iter()).all(|v| v.is_finite())) {
        return Err(ConstitutiveError::Numerical("cohesive_traction"));
    }
    let r = frame(n);
    let local = r.transpose() * jump;
    let (t_loc, k_loc, trial) = match *tsl {
        TslModel::Linear { k } => (local * k, Matrix2::identity() * k, *state),
        TslModel::Exponential { gc, delta0, beta } => exponential(gc, delta0, beta, local, state),
        TslModel::BilinearMixedMode { k, g_ic, g_iic, n: sn, s: ss, eta, mu } => {
            bilinear(&Bilinear { k, g_ic, g_iic, dn0: sn / k, ds0: ss / k, eta, mu }, local, state)
        }
    };
    Ok(CohesiveResponse { traction: -(r * t_loc), tangent: -(r * k_loc * r.transpose()), trial })
}

/// Recoverable energy per unit area at the given jump and history.
pub fn stored_energy(tsl: &TslModel, jump: &Vec2, n: &Vec2, state: &CohesiveState) -> f64 {
    let dn = jump.dot(n);
    let s = jump.dot(&Vec2::new(-n.y, n.x));
    let open = dn.max(0.0);
    let closed = dn.min(0.0);
    match *tsl {
        TslModel::Linear { k } => 0.5 * k * (dn * dn + s * s),
        TslModel::Exponential { gc, delta0, beta } => {
            let k0 = gc / (delta0 * delta0);
            let kk = k0 * (-state.max_separation / delta0).exp();
            0.5 * kk * (open * open + beta * beta * s * s) + 0.5 * k0 * closed * closed
        }
        TslModel::BilinearMixedMode { k, .. } => {
            0.5 * (1.0 - state.damage) * k * (open * open + s * s) + 0.5 * k * closed * closed
        }
    }
}

/// Secant law `T = k(κ) [⟨δn⟩, β² s]` with `k(κ) = (𝒢_c/δ₀²) e^{−κ/δ₀}`, κ the largest
/// effective opening `√(⟨δn⟩² + β² s²)` reached.
fn exponential(gc: f64, delta0: f64, beta: f64, local: Vec2, state: &CohesiveState) -> (Vec2, Matrix2<f64>, CohesiveState) {
    let (dn, s) = (local.x, local.y);
    let k0 = gc / (delta0 * delta0);
    let open = dn.max(0.0);
    let h = if dn > 0.0 { 1.0 } else { 0.0 };
    let b2 = beta * beta;
    let eff = (open * open + b2 * s * s).sqrt();
    let loading = eff > 0.0 && eff >= state.max_separation;
    let kappa = if loading { eff } else { state.max_separation };
    let kk = k0 * (-kappa / delta0).exp();
    let mut t = Vec2::new(kk * open + k0 * dn.min(0.0), kk * b2 * s);
    let mut tangent = Matrix2::new(kk * h + k0 * (1.0 - h), 0.0, 0.0, kk * b2);
    if loading {
        let g = Vec2::new(open, b2 * s);
        tangent += g * g.transpose() * (-kk / delta0 / eff);
    }
    if !t.iter().all(|v| v.is_finite()) {
        t = Vec2::zeros();
    }
    let trial = CohesiveState { damage: 1.0 - (-kappa / delta0).exp(), max_separation: kappa };
    (t, tangent, trial)
}

struct Bilinear {
    k: f64,
    g_ic: f64,
    g_iic: f64,
    dn0: f64,
    ds0: f64,
    eta: f64,
    mu: f64,
}

impl Bilinear {
    /// Damage for a monotone path to `(a, s)` with `a = ⟨δn⟩`, and its gradient.
    fn damage(&self, a: f64, s: f64) -> (f64, Vec2) {
        let dm = (a * a + s * s).sqrt();
        if dm == 0.0 {
            return (0.0, Vec2::zeros());
        }
        let dm_x = Vec2::new(a / dm, s / dm);
        let q = ((self.ds0 * a).powi(2) + (self.dn0 * s).powi(2)).sqrt();
        let q_x = Vec2::new(self.ds0 * self.ds0 * a / q, self.dn0 * self.dn0 * s / q);
        let c = self.dn0 * self.ds0;
        let d0 = c * dm / q;
        let d0_x = (dm_x * q - q_x * dm) * (c / (q * q));
        let b = s * s / (dm * dm);
        let dm4 = dm.powi(4);
        let b_x = Vec2::new(-2.0 * s * s * a / dm4, 2.0 * s * a * a / dm4);
        let g = self.g_ic + (self.g_iic - self.g_ic) * b.powf(self.eta);
        let g_b = (self.g_iic - self.g_ic) * self.eta * b.powf(self.eta - 1.0);
        let df = 2.0 * g / (self.k * d0);
        let df_x = b_x * (2.0 * g_b / (self.k * d0)) - d0_x * (2.0 * g / (self.k * d0 * d0));
        if dm <= d0 {
            return (0.0, Vec2::zeros());
        }
        if dm >= df {
            return (1.0, Vec2::zeros());
        }
        let f = df * (dm - d0);
        let gg = dm * (df - d0);
        let f_x = df_x * (dm - d0) + (dm_x - d0_x) * df;
        let gg_x = dm_x * (df - d0) + (df_x - d0_x) * dm;
        (f / gg, (f_x * gg - gg_x * f) / (gg * gg))
    }
}

fn bilinear(p: &Bilinear, local: Vec2, state: &CohesiveState) -> (Vec2, Matrix2<f64>, CohesiveState) {
    let (dn, s) = (local.x, local.y);
    let open = dn.max(0.0);
    let h = if dn > 0.0 { 1.0 } else { 0.0 };
    let (d_path, d_grad) = p.damage(open, s);
    let loading = d_path > state.damage;
    let (d, grad) = if loading { (d_path, Vec2::new(d_grad.x * h, d_grad.y)) } else { (state.damage, Vec2::zeros()) };
    let k = p.k;
    let mut t = Vec2::new((1.0 - d) * k * open + k * dn.min(0.0), (1.0 - d) * k * s);
    let mut tangent = Matrix2::new((1.0 - d) * k * h + k * (1.0 - h), 0.0, 0.0, (1.0 - d) * k);
    tangent -= Vec2::new(k * open, k * s) * grad.transpose();
    if dn < 0.0 && p.mu > 0.0 && d > 0.0 {
        // regularized Coulomb friction on the damaged part of the compressed interface
        let reg = (s * s + p.ds0 * p.ds0).sqrt();
        let phi = s / reg;
        let press = -k * dn;
        t.y += d * p.mu * press * phi;
        let dphi = p.ds0 * p.ds0 / reg.powi(3);
        tangent[(1, 1)] += d * p.mu * press * dphi;
        tangent[(1, 0)] += -d * p.mu * k * phi;
        tangent += Vec2::new(0.0, p.mu * press * phi) * grad.transpose();
    }
    let dm = (open * open + s * s).sqrt();
    let trial = CohesiveState { damage: d, max_separation: state.max_separation.max(dm) };
    (t, tangent, trial)
}

/// Accept trial states after a converged step; damage never decreases.
pub fn commit_state(committed: &mut [CohesiveState], trial: &[CohesiveState]) {
    for (c, t) in committed.iter_mut().zip(trial) {
        c.damage = c.damage.max(t.damage);
        c.max_separation = c.max_separation.max(t.max_separation);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: Vec2 = Vec2::new(1.0, 0.0);

    fn laws() -> Vec<TslModel> {
        vec![
            TslModel::Linear { k: 1.0 },
            TslModel::Exponential { gc: 50.0, delta0: 0.1, beta: 0.0 },
            TslModel::Exponential { gc: 50.0, delta0: 0.1, beta: 0.7 },
            TslModel::BilinearMixedMode { k: 2e3, g_ic: 30.0, g_iic: 60.0, n: 100.0, s: 120.0, eta: 2.0, mu: 1e-3 },
        ]
    }

    #[test]
    fn linear_law_returns_minus_jump() {
        let g = Vec2::new(0.3, -0.2);
        let r = cohesive_traction(&TslModel::Linear { k: 1.0 }, &g, &Vec2::new(0.6, 0.8), &CohesiveState::default()).unwrap();
        assert!((r.traction + g).norm() < 1e-15);
    }

    #[test]
    fn zero_jump_zero_traction() {
        for law in laws() {
            let r = cohesive_traction(&law, &Vec2::zeros(), &N, &CohesiveState::default()).unwrap();
            assert_eq!(r.traction, Vec2::zeros());
        }
    }

    #[test]
    fn local_split() {
        assert_eq!(rotate_jump_to_local(&Vec2::new(0.3, 0.4), &N), (0.3, 0.4));
        assert_eq!(rotate_jump_to_local(&Vec2::new(2.0, 0.0), &N), (2.0, 0.0));
        assert_eq!(rotate_jump_to_local(&Vec2::new(0.0, 2.0), &N), (0.0, 2.0));
    }

    #[test]
    fn nan_rejected() {
        let r = cohesive_traction(&laws()[1], &Vec2::new(f64::NAN, 0.0), &N, &CohesiveState::default());
        assert_eq!(r, Err(ConstitutiveError::Numerical("cohesive_traction")));
    }

    #[test]
    fn bilinear_mode_one_peak() {
        let law = laws()[3];
        let onset = 100.0 / 2e3;
        let r = cohesive_traction(&law, &Vec2::new(onset, 0.0), &N, &CohesiveState::default()).unwrap();
        assert!((-r.traction.x - 100.0).abs() < 1e-9);
        let r = cohesive_traction(&law, &Vec2::new(1.5 * onset, 0.0), &N, &CohesiveState::default()).unwrap();
        assert!(-r.traction.x < 100.0 && r.trial.damage > 0.0);
    }

    #[test]
    fn unloading_keeps_damage_and_follows_secant() {
        let law = laws()[1];
        let mut c = [CohesiveState::default()];
        let r = cohesive_traction(&law, &Vec2::new(0.2, 0.0), &N, &c[0]).unwrap();
        commit_state(&mut c, &[r.trial]);
        let d = c[0].damage;
        assert!(d > 0.0);
        let back = cohesive_traction(&law, &Vec2::new(0.1, 0.0), &N, &c[0]).unwrap();
        assert!((back.traction.x - 0.5 * r.traction.x).abs() < 1e-12);
        commit_state(&mut c, &[back.trial]);
        assert_eq!(c[0].damage, d);
    }

    #[test]
    fn cycles_below_onset_do_not_damage_bilinear() {
        let law = laws()[3];
        let mut c = [CohesiveState::default()];
        for i in 0..10 {
            let amp = 0.04 * (i as f64 + 1.0) / 10.0;
            for g in [amp, 0.0] {
                let r = cohesive_traction(&law, &Vec2::new(g, 0.0), &N, &c[0]).unwrap();
                commit_state(&mut c, &[r.trial]);
            }
        }
        assert_eq!(c[0].damage, 0.0);
    }

    #[test]
    fn compression_is_penalized() {
        for law in laws() {
            let r = cohesive_traction(&law, &Vec2::new(-1e-3, 0.0), &N, &CohesiveState::default()).unwrap();
            assert!(r.traction.x > 0.0);
        }
    }
}
