use super::GlottisError;

const BLOWUP: f64 = 1e8;

/// Two-mass vocal fold parameters, CGS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoMassParams {
    /// g
    pub m1: f64,
    pub m2: f64,
    /// dyn/cm
    pub k1: f64,
    pub k2: f64,
    pub kc: f64,
    /// Rest glottal areas, cm².
    pub ag01: f64,
    pub ag02: f64,
    /// Fold length, cm.
    pub length: f64,
    /// Mass thicknesses, cm.
    pub d1: f64,
    pub d2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Subglottal pressure, dyn/cm².
    pub ps: f64,
    /// g/cm³
    pub rho: f64,
    /// Contact spring stiffness as a multiple of the tissue spring.
    pub contact_stiffness: f64,
    /// Damping ratio added while a mass is in contact.
    pub contact_damping: f64,
}

impl Default for TwoMassParams {
    fn default() -> Self {
        TwoMassParams {
            m1: 0.125,
            m2: 0.025,
            k1: 80_000.0,
            k2: 8_000.0,
            kc: 25_000.0,
            ag01: 0.05,
            ag02: 0.05,
            length: 1.4,
            d1: 0.25,
            d2: 0.05,
            zeta1: 0.1,
            zeta2: 0.6,
            ps: 8_000.0,
            rho: 1.14e-3,
            contact_stiffness: 3.0,
            contact_damping: 1.0,
        }
    }
}

impl TwoMassParams {
    pub fn validate(&self) -> Result<(), GlottisError> {
        let positive = [
            self.m1,
            self.m2,
            self.k1,
            self.k2,
            self.kc,
            self.length,
            self.d1,
            self.d2,
            self.rho,
        ];
        let ok = positive.iter().all(|v| *v > 0.0 && v.is_finite())
            && self.ps >= 0.0
            && self.ps.is_finite()
            && self.zeta1 >= 0.0
            && self.zeta2 >= 0.0
            && self.contact_stiffness >= 0.0
            && self.contact_damping >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(GlottisError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn areas(&self, s: &FoldState) -> (f64, f64) {
        (
            self.ag01 + 2.0 * self.length * s.x1,
            self.ag02 + 2.0 * self.length * s.x2,
        )
    }

    /// Mechanical energy of the fold pair, contact springs excluded.
    pub fn energy(&self, s: &FoldState) -> f64 {
        0.5 * (self.m1 * s.v1 * s.v1 + self.m2 * s.v2 * s.v2)
            + 0.5 * (self.k1 * s.x1 * s.x1 + self.k2 * s.x2 * s.x2)
            + 0.5 * self.kc * (s.x1 - s.x2).powi(2)
    }

    /// Bernoulli flow through the narrower opening.
    pub fn flow(&self, s: &FoldState, inlet_pressure: f64) -> f64 {
        let (a1, a2) = self.areas(s);
        let amin = a1.min(a2);
        if amin <= 0.0 {
            return 0.0;
        }
        amin * (2.0 * (self.ps - inlet_pressure).max(0.0) / self.rho).sqrt()
    }
}

/// Fold displacements (cm, positive opens) and velocities (cm/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FoldState {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl FoldState {
    /// Slightly opened lower mass. The symmetric rest state carries no net
    /// aerodynamic force and would stay put forever.
    pub fn onset() -> Self {
        FoldState {
            x1: 1e-3,
            ..Default::default()
        }
    }
}

/// One implicit-midpoint step of the fold pair. Aerodynamic and contact
/// offsets are taken from the start of the step. Returns the flow.
pub fn two_mass_step(
    s: &mut FoldState,
    p: &TwoMassParams,
    inlet_pressure: f64,
    dt: f64,
) -> Result<f64, GlottisError> {
    let (a1, a2) = p.areas(s);
    let drive = (p.ps - inlet_pressure).max(0.0);
    let (p1, p2) = if a1 <= 0.0 {
        (p.ps, inlet_pressure)
    } else if a2 <= 0.0 {
        (p.ps, p.ps)
    } else {
        let amin = a1.min(a2);
        (
            inlet_pressure + drive * (1.0 - (amin / a1).powi(2)),
            inlet_pressure,
        )
    };
    let mut f = [p1 * p.length * p.d1, p2 * p.length * p.d2];

    let m = [p.m1, p.m2];
    let mut k_diag = [p.k1 + p.kc, p.k2 + p.kc];
    let mut r = [
        2.0 * p.zeta1 * (p.m1 * p.k1).sqrt(),
        2.0 * p.zeta2 * (p.m2 * p.k2).sqrt(),
    ];
    let tissue = [p.k1, p.k2];
    let rest = [p.ag01, p.ag02];
    for (i, a) in [a1, a2].into_iter().enumerate() {
        if a <= 0.0 {
            let c = p.contact_stiffness * tissue[i];
            k_diag[i] += c;
            // Contact spring is relaxed at the closure point x = -ag0/(2l).
            f[i] -= c * rest[i] / (2.0 * p.length);
            r[i] += 2.0 * p.contact_damping * (m[i] * tissue[i]).sqrt();
        }
    }
    let k_off = -p.kc;
    let x = [s.x1, s.x2];
    let v = [s.v1, s.v2];
    let kx = [
        k_diag[0] * x[0] + k_off * x[1],
        k_off * x[0] + k_diag[1] * x[1],
    ];
    let kv = [
        k_diag[0] * v[0] + k_off * v[1],
        k_off * v[0] + k_diag[1] * v[1],
    ];
    let h = dt * dt / 4.0;
    // (M + dt/2 R + dt²/4 K) v' = (M - dt/2 R) v - dt²/4 K v + dt (F - K x)
    let rhs = [
        (m[0] - 0.5 * dt * r[0]) * v[0] - h * kv[0] + dt * (f[0] - kx[0]),
        (m[1] - 0.5 * dt * r[1]) * v[1] - h * kv[1] + dt * (f[1] - kx[1]),
    ];
    let a11 = m[0] + 0.5 * dt * r[0] + h * k_diag[0];
    let a22 = m[1] + 0.5 * dt * r[1] + h * k_diag[1];
    let a12 = h * k_off;
    let det = a11 * a22 - a12 * a12;
    let v1 = (rhs[0] * a22 - a12 * rhs[1]) / det;
    let v2 = (a11 * rhs[1] - a12 * rhs[0]) / det;
    s.x1 += 0.5 * dt * (v[0] + v1);
    s.x2 += 0.5 * dt * (v[1] + v2);
    s.v1 = v1;
    s.v2 = v2;

    let worst = [s.x1, s.x2, s.v1, s.v2].iter().fold(0.0_f64, |acc, v| {
        if v.is_finite() {
            acc.max(v.abs())
        } else {
            f64::INFINITY
        }
    });
    if worst > BLOWUP {
        return Err(GlottisError::NumericalBlowup(worst));
    }
    Ok(p.flow(s, inlet_pressure))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 132_300.0;

    fn run(p: &TwoMassParams, seconds: f64) -> Vec<f64> {
        let mut s = FoldState::onset();
        let n = (seconds / DT) as usize;
        (0..n)
            .map(|_| two_mass_step(&mut s, p, 0.0, DT).unwrap())
            .collect()
    }

    /// Period from upward crossings of the flow derivative through zero,
    /// i.e. flow maxima, counted over the second half of the run.
    fn f0_from_flow(flow: &[f64]) -> f64 {
        let d: Vec<f64> = flow.windows(2).map(|w| w[1] - w[0]).collect();
        let half = d.len() / 2;
        let peaks: Vec<usize> = (half..d.len() - 1)
            .filter(|&i| d[i] > 0.0 && d[i + 1] <= 0.0)
            .collect();
        let span = (peaks[peaks.len() - 1] - peaks[0]) as f64 * DT;
        (peaks.len() - 1) as f64 / span
    }

    #[test]
    fn sustained_oscillation_in_voice_range() {
        let flow = run(&TwoMassParams::default(), 1.0);
        let f0 = f0_from_flow(&flow);
        assert!((80.0..=200.0).contains(&f0), "f0 {f0}");
        let tail = &flow[flow.len() / 2..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(hi - lo > 50.0, "flow swing {lo}..{hi}");
        assert!(lo >= 0.0);
    }

    #[test]
    fn symmetric_rest_is_an_equilibrium() {
        let p = TwoMassParams::default();
        let mut s = FoldState::default();
        for _ in 0..1000 {
            two_mass_step(&mut s, &p, 0.0, DT).unwrap();
        }
        assert_eq!(s, FoldState::default());
    }

    #[test]
    fn no_pressure_no_flow() {
        let p = TwoMassParams {
            ps: 0.0,
            ..Default::default()
        };
        let mut s = FoldState {
            x1: 0.01,
            x2: -0.005,
            v1: 0.0,
            v2: 3.0,
        };
        let mut e = p.energy(&s);
        for _ in 0..20_000 {
            let u = two_mass_step(&mut s, &p, 0.0, DT).unwrap();
            assert_eq!(u, 0.0);
            let next = p.energy(&s);
            assert!(next <= e + 1e-12 * e, "{next} > {e}");
            e = next;
        }
        assert!(s.x1.abs() < 1e-3 && s.x2.abs() < 1e-3);
    }

    #[test]
    fn forced_closure_emits_nothing() {
        let p = TwoMassParams::default();
        let mut s = FoldState {
            x1: -0.05,
            ..Default::default()
        };
        assert!(p.areas(&s).0 < 0.0);
        assert_eq!(p.flow(&s, 0.0), 0.0);
        // The step itself reports flow at the advanced state; still closed.
        assert_eq!(two_mass_step(&mut s, &p, 0.0, DT).unwrap(), 0.0);
    }

    #[test]
    fn huge_step_blows_up() {
        let p = TwoMassParams::default();
        let mut s = FoldState {
            v1: 1e9,
            ..Default::default()
        };
        assert!(matches!(
            two_mass_step(&mut s, &p, 0.0, DT),
            Err(GlottisError::NumericalBlowup(_))
        ));
    }
}
