//! Exact zero-order-hold propagation of the linear two-capacitor circuit.
//!
//! State `x = [v_main, v_branch]` obeys `dx/dt = A x + b i` with
//!
//! ```text
//! c_main   dv_main/dt   = i - (v_main - v_branch)/r_branch - v_main/r_leak
//! c_branch dv_branch/dt =     (v_main - v_branch)/r_branch
//! ```
//!
//! For a step `h` with constant current the update `x' = E x + g i` uses
//! `E = exp(A h)` and `g = h φ1(A h) b`, evaluated through the eigenvalues of
//! `A` (real and distinct whenever the branch is present).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DeviceParams;
use crate::scalar::Scalar;
use crate::trace::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState<T> {
    pub v_main: T,
    /// Voltage on the redistribution capacitance, when the device has one.
    pub v_branch: Option<T>,
    pub t: T,
    pub phase: Phase,
    pub cycle_index: usize,
}

impl<T: Scalar> SimState<T> {
    /// Device at rest with both capacitances at `v`.
    pub fn at_rest(p: &DeviceParams<T>, v: T) -> Self {
        Self {
            v_main: v,
            v_branch: p.redistribution.map(|_| v),
            t: T::zero(),
            phase: Phase::Charge,
            cycle_index: 1,
        }
    }

    /// Voltage seen at the terminals while `current` flows.
    pub fn terminal_voltage(&self, p: &DeviceParams<T>, current: T) -> T {
        self.v_main + current * p.r_series
    }

    /// Charge held on all capacitances (C).
    pub fn stored_charge(&self, p: &DeviceParams<T>) -> T {
        let branch = match (p.redistribution, self.v_branch) {
            (Some(b), Some(v)) => b.c_branch * v,
            _ => T::zero(),
        };
        p.c_main * self.v_main + branch
    }
}

/// `h φ1(λ h) = (exp(λ h) - 1) / λ`, continuous at `λ = 0`.
fn h_phi1<T: Scalar>(lambda: T, h: T) -> T {
    let z = lambda * h;
    if z.abs() < T::lit(1e-300).max(T::min_positive_value()) {
        h
    } else {
        z.exp_m1() / lambda
    }
}

/// Precomputed one-step map for a fixed device and step length.
#[derive(Debug, Clone, Copy)]
pub struct Propagator<T> {
    /// `exp(A h)`, row-major. Only `e[0][0]` is used without a branch.
    e: [[T; 2]; 2],
    /// Response to a unit current held over the step.
    g: [T; 2],
    has_branch: bool,
    h: T,
}

impl<T: Scalar> Propagator<T> {
    pub fn new(p: &DeviceParams<T>, h: T) -> Result<Self> {
        if !(h > T::zero() && h.is_finite()) {
            return Err(Error::invalid("dt", format!("step must be positive, got {h}")));
        }
        let g_leak = p.r_leak.map_or(T::zero(), |r| T::one() / r);
        match p.redistribution {
            None => {
                let a = -g_leak / p.c_main;
                Ok(Self {
                    e: [[(a * h).exp(), T::zero()], [T::zero(), T::one()]],
                    g: [h_phi1(a, h) / p.c_main, T::zero()],
                    has_branch: false,
                    h,
                })
            }
            Some(b) => {
                let g_b = T::one() / b.r_branch;
                let a = [
                    [-(g_b + g_leak) / p.c_main, g_b / p.c_main],
                    [g_b / b.c_branch, -g_b / b.c_branch],
                ];
                let tr = a[0][0] + a[1][1];
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let half = tr / T::lit(2.0);
                let disc = (half * half - det).max(T::zero()).sqrt();
                // λ1 - λ2 = 2 disc > 0 because a01 * a10 > 0
                let l1 = half + disc;
                let l2 = half - disc;
                let (f1, f2) = (h_phi1(l1, h), h_phi1(l2, h));
                // Sylvester: f(A) = [f1 (A - l2 I) - f2 (A - l1 I)] / (l1 - l2)
                let inv = T::one() / (l1 - l2);
                let id = |r: usize, c: usize| if r == c { T::one() } else { T::zero() };
                let mut phi = [[T::zero(); 2]; 2];
                for (r, row) in phi.iter_mut().enumerate() {
                    for (c, cell) in row.iter_mut().enumerate() {
                        *cell = (f1 * (a[r][c] - l2 * id(r, c)) - f2 * (a[r][c] - l1 * id(r, c)))
                            * inv;
                    }
                }
                // E = I + Φ A, g = Φ b with b = [1/c_main, 0]
                let mut e = [[T::zero(); 2]; 2];
                for (r, row) in e.iter_mut().enumerate() {
                    for (c, cell) in row.iter_mut().enumerate() {
                        *cell = id(r, c) + phi[r][0] * a[0][c] + phi[r][1] * a[1][c];
                    }
                }
                let g = [phi[0][0] / p.c_main, phi[1][0] / p.c_main];
                Ok(Self {
                    e,
                    g,
                    has_branch: true,
                    h,
                })
            }
        }
    }

    pub fn step_len(&self) -> T {
        self.h
    }

    /// Advances `state` by one step with `current` held constant.
    pub fn advance(&self, state: &mut SimState<T>, current: T) -> Result<()> {
        let vm = state.v_main;
        if self.has_branch {
            let vb = state.v_branch.unwrap_or(vm);
            state.v_main = self.e[0][0] * vm + self.e[0][1] * vb + self.g[0] * current;
            state.v_branch = Some(self.e[1][0] * vm + self.e[1][1] * vb + self.g[1] * current);
        } else {
            state.v_main = self.e[0][0] * vm + self.g[0] * current;
        }
        state.t = state.t + self.h;
        let finite = state.v_main.is_finite() && state.v_branch.is_none_or(|v| v.is_finite());
        if !finite {
            return Err(Error::DynamicsDiverged {
                t: state.t.as_f64(),
                v_main: state.v_main.as_f64(),
            });
        }
        Ok(())
    }
}

/// Advances the circuit by `dt` with constant applied current.
pub fn step_dynamics<T: Scalar>(
    p: &DeviceParams<T>,
    state: &SimState<T>,
    i_applied: T,
    dt: T,
) -> Result<SimState<T>> {
    let prop = Propagator::new(p, dt)?;
    let mut next = *state;
    if p.redistribution.is_some() && next.v_branch.is_none() {
        next.v_branch = Some(next.v_main);
    }
    prop.advance(&mut next, i_applied)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal() -> DeviceParams<f64> {
        DeviceParams::new(10.0, 0.0922, 2.7).unwrap()
    }

    fn two_branch() -> DeviceParams<f64> {
        DeviceParams::new(50.0, 0.0088, 2.7)
            .unwrap()
            .with_redistribution(4.6, 8.6)
            .unwrap()
    }

    #[test]
    fn ideal_integrator() {
        let s = SimState::at_rest(&ideal(), 1.0);
        let n = step_dynamics(&ideal(), &s, 0.4, 1.0).unwrap();
        assert!((n.v_main - 1.04).abs() < 1e-15);
        assert_eq!(n.t, 1.0);
    }

    #[test]
    fn redistribution_conserves_charge() {
        let p = two_branch();
        let mut s = SimState::at_rest(&p, 1.0);
        s.v_main = 2.6;
        let q0 = s.stored_charge(&p);
        let prop = Propagator::new(&p, 0.1).unwrap();
        for _ in 0..20_000 {
            prop.advance(&mut s, 0.0).unwrap();
        }
        assert!(((s.stored_charge(&p) - q0) / q0).abs() < 1e-9);
    }

    #[test]
    fn relaxation_matches_single_exponential() {
        // Closed form: v_main(t) = v_eq + c_b/(c_m+c_b) (v_m0 - v_b0) exp(-t/tau)
        let p = two_branch();
        let (cm, cb, rb) = (50.0, 4.6, 8.6);
        let (vm0, vb0) = (2.6, 1.2);
        let veq = (cm * vm0 + cb * vb0) / (cm + cb);
        let tau = rb * cm * cb / (cm + cb);
        let mut s = SimState::at_rest(&p, vb0);
        s.v_main = vm0;
        let prop = Propagator::new(&p, 0.5).unwrap();
        let mut prev = s.terminal_voltage(&p, 0.0);
        for k in 1..=400 {
            prop.advance(&mut s, 0.0).unwrap();
            let t = 0.5 * k as f64;
            let expect = veq + cb / (cm + cb) * (vm0 - vb0) * (-t / tau).exp();
            assert!((s.v_main - expect).abs() < 1e-12, "t={t}");
            assert!(s.v_main < prev);
            prev = s.v_main;
        }
    }

    #[test]
    fn step_size_independent() {
        let p = two_branch().with_leak(7000.0).unwrap();
        let mut a = SimState::at_rest(&p, 0.3);
        let mut b = a;
        let coarse = Propagator::new(&p, 1.0).unwrap();
        let fine = Propagator::new(&p, 0.01).unwrap();
        for _ in 0..30 {
            coarse.advance(&mut a, 3.95).unwrap();
        }
        for _ in 0..3000 {
            fine.advance(&mut b, 3.95).unwrap();
        }
        assert!((a.v_main - b.v_main).abs() < 1e-9);
        assert!((a.v_branch.unwrap() - b.v_branch.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn leak_only_decays() {
        let p = DeviceParams::new(10.0, 0.0, 2.7).unwrap().with_leak(100.0).unwrap();
        let s = SimState::at_rest(&p, 2.0);
        let n = step_dynamics(&p, &s, 0.0, 1000.0).unwrap();
        assert!((n.v_main - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn single_precision_step() {
        let p = DeviceParams::<f32>::new(10.0, 0.0, 2.7).unwrap();
        let n = step_dynamics(&p, &SimState::at_rest(&p, 1.0), 0.4, 1.0).unwrap();
        assert!((n.v_main - 1.04).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(step_dynamics(&ideal(), &SimState::at_rest(&ideal(), 1.0), 0.4, 0.0).is_err());
    }
}
