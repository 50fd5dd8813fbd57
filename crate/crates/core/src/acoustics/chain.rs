use super::analysis::{response_peaks, Peak};
use super::{AcousticParams, AcousticsError};
use crate::exec::{par_map, Execution};
use crate::tract::AreaFunction;

/// Below this `|K22|` the lossless transfer is treated as a pole.
const SINGULAR: f64 = 1e-12;

/// `|U_lips / U_glottis|` of the lossless concatenated tube with an ideal
/// flow source and a pressure-release lip end.
pub fn chain_matrix_response(
    af: &AreaFunction,
    freqs: &[f64],
    params: &AcousticParams,
    exec: Execution,
) -> Result<Vec<f64>, AcousticsError> {
    if let Some(bad) = freqs.iter().find(|f| !(**f > 0.0)) {
        return Err(AcousticsError::Invalid(format!(
            "frequency {bad} must be positive"
        )));
    }
    par_map(exec, freqs, |&f| transfer(af, f, params))
        .into_iter()
        .collect()
}

/// Chain product for one frequency. Lossless sections keep the diagonal
/// entries real and the off-diagonal ones imaginary, so each matrix is
/// stored as four reals: `[[a, j·b], [j·c, d]]`.
fn transfer(af: &AreaFunction, f: f64, params: &AcousticParams) -> Result<f64, AcousticsError> {
    let k = 2.0 * std::f64::consts::PI * f / params.c;
    let (mut a, mut b, mut c, mut d) = (1.0, 0.0, 0.0, 1.0);
    for s in &af.sections {
        let z = params.rho * params.c / s.area;
        let (sin, cos) = (k * s.length).sin_cos();
        let (sa, sb, sc, sd) = (cos, z * sin, sin / z, cos);
        // [[a, jb], [jc, d]] · [[sa, j sb], [j sc, sd]]
        let na = a * sa - b * sc;
        let nb = a * sb + b * sd;
        let nc = c * sa + d * sc;
        let nd = d * sd - c * sb;
        (a, b, c, d) = (na, nb, nc, nd);
    }
    if d.abs() < SINGULAR {
        return Err(AcousticsError::SingularMatrix(f));
    }
    Ok(1.0 / d.abs())
}

/// Resonance peaks of the chain-matrix response on a `step` Hz grid up to
/// `max_freq`, nudging any singular frequency by 0.1 Hz.
pub fn chain_matrix_peaks(
    af: &AreaFunction,
    params: &AcousticParams,
    max_freq: f64,
    step: f64,
    exec: Execution,
) -> Result<Vec<Peak>, AcousticsError> {
    let n = (max_freq / step).floor() as usize;
    let freqs: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
    let mags = par_map(exec, &freqs, |&f| match transfer(af, f, params) {
        Err(AcousticsError::SingularMatrix(_)) => transfer(af, f + 0.1, params),
        other => other,
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(response_peaks(&freqs, &mags))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> AreaFunction {
        AreaFunction::uniform(22, 17.5, 3.0)
    }

    #[test]
    fn uniform_tube_quarter_wave() {
        let p = AcousticParams::default();
        let peaks = chain_matrix_peaks(&uniform(), &p, 3000.0, 1.0, Execution::Sequential).unwrap();
        let f: Vec<f64> = peaks.iter().map(|p| p.freq).collect();
        assert_eq!(f.len(), 3, "{f:?}");
        for (got, want) in f.iter().zip([500.0, 1500.0, 2500.0]) {
            assert!((got - want).abs() < 1.0, "{got} vs {want}");
        }
    }

    #[test]
    fn exact_resonance_is_singular() {
        let p = AcousticParams::default();
        let err = chain_matrix_response(&uniform(), &[500.0], &p, Execution::Sequential);
        assert!(matches!(err, Err(AcousticsError::SingularMatrix(_))));
        let ok = chain_matrix_response(&uniform(), &[500.1], &p, Execution::Sequential).unwrap();
        assert!(ok[0].is_finite() && ok[0] > 100.0);
    }

    #[test]
    fn two_tube_vowel_ordering() {
        let p = AcousticParams::default();
        let mut areas = vec![1.0; 11];
        areas.extend(vec![7.0; 11]);
        let af = AreaFunction::from_areas(&areas, 17.5);
        let peaks = chain_matrix_peaks(&af, &p, 4000.0, 1.0, Execution::Sequential).unwrap();
        assert!(peaks.len() >= 2);
        assert!(peaks[0].freq < peaks[1].freq);
        assert!(peaks[0].freq > 500.0, "F1 {}", peaks[0].freq);
    }

    #[test]
    fn finite_off_resonance() {
        let p = AcousticParams::default();
        let areas: Vec<f64> = (0..22).map(|i| 0.5 + i as f64 * 0.3).collect();
        let af = AreaFunction::from_areas(&areas, 17.5);
        let freqs: Vec<f64> = (0..200).map(|i| 13.7 + i as f64 * 25.3).collect();
        let r = chain_matrix_response(&af, &freqs, &p, Execution::Parallel).unwrap();
        assert!(r.iter().all(|m| m.is_finite() && *m > 0.0));
    }
}
