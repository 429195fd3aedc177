//! Time-series fitting and lineshape measurement.
//!
//! The solvers in this crate produce sampled traces (absorption versus time,
//! absorption versus detuning).  The tests and the CLI reduce those traces to
//! scalar observables: oscillation frequencies, envelope decay rates, peak
//! widths, zero-crossing spans.  This module collects the estimators, all
//! deterministic and allocation-light so they can run inside tight test loops.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignalError {
    #[error("need at least {min} samples, got {got}")]
    NotEnoughSamples { min: usize, got: usize },
    #[error("axis and value slices differ in length ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("axis must be strictly increasing (violated at index {index})")]
    NonMonotonicAxis { index: usize },
    #[error("non-finite sample at index {index}")]
    NonFiniteValue { index: usize },
    #[error("extremum sits on the grid edge; widen the scan window")]
    ExtremumAtEdge,
    #[error("half-maximum level never crossed on the {side} side")]
    MissingHalfCrossing { side: &'static str },
    #[error("fewer than {wanted} sign changes on the {side} side of the peak")]
    MissingZeroCrossing { wanted: usize, side: &'static str },
    #[error("signal has no usable variation to fit")]
    DegenerateFit,
}

/// Result of fitting `y = offset + amplitude * exp(-decay_rate * u) *
/// cos(angular_frequency * u + phase)` with `u = t - t[0]`.
#[derive(Debug, Clone, Copy)]
pub struct DampedCosineFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub decay_rate: f64,
    pub angular_frequency: f64,
    pub residual_rms: f64,
}

/// Result of fitting `y = offset + amplitude * exp(-rate * u)` with
/// `u = t - t[0]`.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialFit {
    pub offset: f64,
    pub amplitude: f64,
    pub rate: f64,
    pub residual_rms: f64,
}

/// Peak measurements of a sampled lineshape.
///
/// The baseline is the mean of the outermost 5% of samples on each side, so
/// the width is measured relative to the far wings rather than to zero.  For
/// resonances sitting on a slowly varying pedestal this is the convention
/// that reproduces the analytic width of the narrow structure.
#[derive(Debug, Clone, Copy)]
pub struct LineshapeMetrics {
    pub peak_x: f64,
    /// Signal value at the refined extremum (below `baseline` for dips).
    pub peak_value: f64,
    pub baseline: f64,
    pub fwhm: f64,
    /// `1 - SSR/SST` of the best single-width Lorentzian through the peak;
    /// close to one when the profile is Lorentzian.
    pub lorentzian_score: f64,
}

fn validate(xs: &[f64], ys: &[f64], min: usize) -> Result<(), SignalError> {
    if xs.len() != ys.len() {
        return Err(SignalError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < min {
        return Err(SignalError::NotEnoughSamples {
            min,
            got: xs.len(),
        });
    }
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(SignalError::NonFiniteValue { index: i });
        }
    }
    for i in 1..xs.len() {
        if xs[i] <= xs[i - 1] {
            return Err(SignalError::NonMonotonicAxis { index: i });
        }
    }
    Ok(())
}

fn spread_check(ys: &[f64]) -> Result<(), SignalError> {
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-14 * (hi.abs() + lo.abs() + f64::MIN_POSITIVE) {
        return Err(SignalError::DegenerateFit);
    }
    Ok(())
}

fn argmax_abs(ys: &[f64]) -> usize {
    let mut best = 0;
    for (i, &y) in ys.iter().enumerate() {
        if y.abs() > ys[best].abs() {
            best = i;
        }
    }
    best
}

/// Interpolated crossings of `level`, walking from `start` in `dir`.
fn walk_crossing(xs: &[f64], s: &[f64], start: usize, dir: isize, level: f64) -> Option<f64> {
    let n = xs.len() as isize;
    let mut j = start as isize;
    loop {
        let next = j + dir;
        if next < 0 || next >= n {
            return None;
        }
        let a = s[j as usize];
        let b = s[next as usize];
        if (a - level) * (b - level) <= 0.0 && a != b {
            let t = (level - a) / (b - a);
            return Some(xs[j as usize] + t * (xs[next as usize] - xs[j as usize]));
        }
        j = next;
    }
}

/// Interpolated zero crossings to each side of `center`, nearest first.
fn zero_crossings(xs: &[f64], ys: &[f64], center: usize) -> (Vec<f64>, Vec<f64>) {
    let mut right = Vec::new();
    for j in center..xs.len() - 1 {
        let (a, b) = (ys[j], ys[j + 1]);
        if a * b < 0.0 {
            let t = -a / (b - a);
            right.push(xs[j] + t * (xs[j + 1] - xs[j]));
        }
    }
    let mut left = Vec::new();
    for j in (1..=center).rev() {
        let (a, b) = (ys[j], ys[j - 1]);
        if a * b < 0.0 {
            let t = -a / (b - a);
            left.push(xs[j] + t * (xs[j - 1] - xs[j]));
        }
    }
    (left, right)
}

/// Measure peak position, height, full width at half maximum and shape of a
/// single-extremum profile.  Works for peaks and dips alike.
pub fn measure_lineshape(xs: &[f64], ys: &[f64]) -> Result<LineshapeMetrics, SignalError> {
    validate(xs, ys, 8)?;
    let n = xs.len();
    let k = (n / 20).max(2);
    let wing_sum: f64 = ys[..k].iter().sum::<f64>() + ys[n - k..].iter().sum::<f64>();
    let baseline = wing_sum / (2 * k) as f64;

    let d: Vec<f64> = ys.iter().map(|&v| v - baseline).collect();
    let p = argmax_abs(&d);
    if p == 0 || p == n - 1 {
        return Err(SignalError::ExtremumAtEdge);
    }
    let sign = if d[p] >= 0.0 { 1.0 } else { -1.0 };
    let s: Vec<f64> = d.iter().map(|&v| v * sign).collect();

    // Parabolic refinement of the extremum through its two neighbours.
    let (y0, y1, y2) = (s[p - 1], s[p], s[p + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let (peak_s, offset) = if denom != 0.0 {
        let off = (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5);
        (y1 - 0.25 * (y0 - y2) * off, off)
    } else {
        (y1, 0.0)
    };
    let local_step = 0.5 * (xs[p + 1] - xs[p - 1]);
    let peak_x = xs[p] + offset * local_step;

    let half = peak_s / 2.0;
    let hi = walk_crossing(xs, &s, p, 1, half)
        .ok_or(SignalError::MissingHalfCrossing { side: "right" })?;
    let lo = walk_crossing(xs, &s, p, -1, half)
        .ok_or(SignalError::MissingHalfCrossing { side: "left" })?;
    let fwhm = hi - lo;

    // Shape score: scan the width of a fixed-height Lorentzian centred on the
    // refined peak and keep the best explained-variance ratio.
    let mean_s = s.iter().sum::<f64>() / n as f64;
    let sst: f64 = s.iter().map(|&v| (v - mean_s) * (v - mean_s)).sum();
    let mut best_ssr = f64::INFINITY;
    for j in 0..=40 {
        let w = fwhm * 10f64.powf(-0.5 + j as f64 / 40.0);
        let ssr: f64 = xs
            .iter()
            .zip(&s)
            .map(|(&x, &v)| {
                let arg = 2.0 * (x - peak_x) / w;
                let model = peak_s / (1.0 + arg * arg);
                (v - model) * (v - model)
            })
            .sum();
        if ssr < best_ssr {
            best_ssr = ssr;
        }
    }
    let lorentzian_score = if sst > 0.0 { 1.0 - best_ssr / sst } else { 0.0 };

    Ok(LineshapeMetrics {
        peak_x,
        peak_value: baseline + sign * peak_s,
        baseline,
        fwhm,
        lorentzian_score,
    })
}

/// Distance between the `nth` sign changes of `ys` on either side of its
/// dominant extremum (`nth` counts from one).  Used to measure the zero
/// spacing of oscillatory wings around a central structure.
pub fn nth_sign_change_span(xs: &[f64], ys: &[f64], nth: usize) -> Result<f64, SignalError> {
    assert!(nth >= 1, "nth is one-based");
    validate(xs, ys, 8)?;
    let p = argmax_abs(ys);
    let (left, right) = zero_crossings(xs, ys, p);
    if right.len() < nth {
        return Err(SignalError::MissingZeroCrossing {
            wanted: nth,
            side: "right",
        });
    }
    if left.len() < nth {
        return Err(SignalError::MissingZeroCrossing {
            wanted: nth,
            side: "left",
        });
    }
    Ok(right[nth - 1] - left[nth - 1])
}

/// Mean oscillation period of the wings around the dominant extremum,
/// measured as the average spacing between every second zero crossing (one
/// full period of an oscillation spans two zeros).
pub fn wing_oscillation_period(xs: &[f64], ys: &[f64]) -> Result<f64, SignalError> {
    validate(xs, ys, 8)?;
    let p = argmax_abs(ys);
    let (left, right) = zero_crossings(xs, ys, p);
    let mut spans = Vec::new();
    for side in [&left, &right] {
        for k in 0..side.len().saturating_sub(2) {
            spans.push((side[k + 2] - side[k]).abs());
        }
    }
    if spans.is_empty() {
        return Err(SignalError::MissingZeroCrossing {
            wanted: 3,
            side: "both",
        });
    }
    Ok(spans.iter().sum::<f64>() / spans.len() as f64)
}

/// Hann-windowed magnitude of the demeaned signal at the requested angular
/// frequencies, normalised so a pure cosine of amplitude `a` reports `~a` at
/// its own frequency.  Handles non-uniform time grids.
pub fn spectral_magnitude(
    times: &[f64],
    values: &[f64],
    omegas: &[f64],
) -> Result<Vec<f64>, SignalError> {
    validate(times, values, 4)?;
    if let Some(i) = omegas.iter().position(|w| !w.is_finite()) {
        return Err(SignalError::NonFiniteValue { index: i });
    }
    let n = times.len();
    let span = times[n - 1] - times[0];
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut hann_sum = 0.0;
    let weighted: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .map(|(&t, &v)| {
            let u = t - times[0];
            let h = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * u / span).cos());
            hann_sum += h;
            (u, (v - mean) * h)
        })
        .collect();
    Ok(omegas
        .iter()
        .map(|&w| {
            let (mut re, mut im) = (0.0, 0.0);
            for &(u, y) in &weighted {
                re += y * (w * u).cos();
                im -= y * (w * u).sin();
            }
            2.0 * re.hypot(im) / hann_sum
        })
        .collect())
}

/// Solve the 3x3 linear-coefficient subproblem for fixed (omega, rate) and
/// return the residual sum of squares with the coefficients
/// `(offset, cos amplitude, sin amplitude)`.
fn project_damped_cosine(u: &[f64], y: &[f64], omega: f64, rate: f64) -> (f64, [f64; 3]) {
    let mut g = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let mut basis = Vec::with_capacity(u.len());
    for (&ui, &yi) in u.iter().zip(y) {
        let e = (-rate * ui).exp();
        let f = [1.0, e * (omega * ui).cos(), e * (omega * ui).sin()];
        for a in 0..3 {
            for b in 0..3 {
                g[(a, b)] += f[a] * f[b];
            }
            rhs[a] += f[a] * yi;
        }
        basis.push(f);
    }
    let ridge = 1e-12 * g.trace().max(f64::MIN_POSITIVE);
    for a in 0..3 {
        g[(a, a)] += ridge;
    }
    let coeffs = match g.cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => return (f64::INFINITY, [0.0; 3]),
    };
    let ssr = basis
        .iter()
        .zip(y)
        .map(|(f, &yi)| {
            let m = coeffs[0] * f[0] + coeffs[1] * f[1] + coeffs[2] * f[2];
            (yi - m) * (yi - m)
        })
        .sum();
    (ssr, [coeffs[0], coeffs[1], coeffs[2]])
}

/// Minimal Nelder-Mead on two parameters.  The objective returns infinity
/// outside its box, which the simplex treats as an ordinary bad vertex.
fn nelder_mead_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    start: [[f64; 2]; 3],
    iters: usize,
) -> [f64; 2] {
    let mut pts = start;
    let mut vals = [f(pts[0][0], pts[0][1]), f(pts[1][0], pts[1][1]), f(pts[2][0], pts[2][1])];
    for _ in 0..iters {
        // order best..worst
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        if (vals[w] - vals[b]).abs() <= 1e-15 * (vals[b].abs() + f64::MIN_POSITIVE) {
            break;
        }
        let centroid = [
            0.5 * (pts[b][0] + pts[m][0]),
            0.5 * (pts[b][1] + pts[m][1]),
        ];
        let refl = [
            centroid[0] + (centroid[0] - pts[w][0]),
            centroid[1] + (centroid[1] - pts[w][1]),
        ];
        let fr = f(refl[0], refl[1]);
        if fr < vals[b] {
            let exp = [
                centroid[0] + 2.0 * (centroid[0] - pts[w][0]),
                centroid[1] + 2.0 * (centroid[1] - pts[w][1]),
            ];
            let fe = f(exp[0], exp[1]);
            if fe < fr {
                pts[w] = exp;
                vals[w] = fe;
            } else {
                pts[w] = refl;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            pts[w] = refl;
            vals[w] = fr;
        } else {
            let contr = [
                centroid[0] + 0.5 * (pts[w][0] - centroid[0]),
                centroid[1] + 0.5 * (pts[w][1] - centroid[1]),
            ];
            let fc = f(contr[0], contr[1]);
            if fc < vals[w] {
                pts[w] = contr;
                vals[w] = fc;
            } else {
                for i in [m, w] {
                    pts[i] = [
                        0.5 * (pts[i][0] + pts[b][0]),
                        0.5 * (pts[i][1] + pts[b][1]),
                    ];
                    vals[i] = f(pts[i][0], pts[i][1]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    pts[best]
}

/// Fit a single damped cosine plus constant offset.
///
/// Strategy: a Hann-windowed direct transform seeds the frequency, the RMS
/// ratio of the two record halves seeds the decay rate, then Nelder-Mead
/// refines both while the three linear coefficients are projected out
/// exactly at every step.
pub fn fit_damped_cosine(times: &[f64], values: &[f64]) -> Result<DampedCosineFit, SignalError> {
    validate(times, values, 8)?;
    spread_check(values)?;
    let n = times.len();
    let u: Vec<f64> = times.iter().map(|&t| t - times[0]).collect();
    let span = u[n - 1];

    let mut dts: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dt_med = dts[dts.len() / 2];
    let omega_nyq = std::f64::consts::PI / dt_med;
    let omega_lo = std::f64::consts::PI / span;

    // frequency seed from the windowed transform on an oversampled grid
    let mean = values.iter().sum::<f64>() / n as f64;
    let windowed: Vec<f64> = u
        .iter()
        .zip(values)
        .map(|(&ui, &v)| {
            let h = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * ui / span).cos());
            (v - mean) * h
        })
        .collect();
    let m = (8 * n).clamp(256, 8192);
    let mut omega0 = omega_lo;
    let mut best_mag = -1.0;
    for j in 0..m {
        let w = omega_lo + (omega_nyq - omega_lo) * j as f64 / (m - 1) as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (&ui, &yi) in u.iter().zip(&windowed) {
            re += yi * (w * ui).cos();
            im -= yi * (w * ui).sin();
        }
        let mag = re * re + im * im;
        if mag > best_mag {
            best_mag = mag;
            omega0 = w;
        }
    }

    // decay seed from the RMS ratio of the two record halves
    let mid = span / 2.0;
    let (mut s1, mut c1, mut s2, mut c2, mut u1, mut u2) = (0.0, 0usize, 0.0, 0usize, 0.0, 0.0);
    for (&ui, &v) in u.iter().zip(values) {
        let dv = v - mean;
        if ui < mid {
            s1 += dv * dv;
            u1 += ui;
            c1 += 1;
        } else {
            s2 += dv * dv;
            u2 += ui;
            c2 += 1;
        }
    }
    let rate_max = 200.0 / span;
    let rate0 = if c1 > 0 && c2 > 0 && s1 > 0.0 && s2 > 0.0 {
        let gap = u2 / c2 as f64 - u1 / c1 as f64;
        (0.5 * (s1 / c1 as f64).ln() - 0.5 * (s2 / c2 as f64).ln()) / gap
    } else {
        0.0
    }
    .clamp(0.0, rate_max);

    let omega_min = 0.25 * omega_lo;
    let mut objective = |w: f64, r: f64| -> f64 {
        if !(omega_min..=omega_nyq).contains(&w) || !(0.0..=rate_max).contains(&r) {
            return f64::INFINITY;
        }
        project_damped_cosine(&u, values, w, r).0
    };

    // two starts guard against a decay-biased frequency seed
    let mut candidates = Vec::new();
    for r_start in [rate0, (2.0 / span).min(rate_max)] {
        let simplex = [
            [omega0, r_start],
            [(omega0 * 1.05 + 0.01 * omega_nyq).min(omega_nyq), r_start],
            [omega0, (r_start * 1.3 + 1.0 / span).min(rate_max)],
        ];
        let opt = nelder_mead_2d(&mut objective, simplex, 400);
        let (ssr, _) = project_damped_cosine(&u, values, opt[0], opt[1]);
        candidates.push((ssr, opt));
    }
    let (_, opt) = candidates
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();

    let (ssr, coeffs) = project_damped_cosine(&u, values, opt[0], opt[1]);
    if !ssr.is_finite() {
        return Err(SignalError::DegenerateFit);
    }
    Ok(DampedCosineFit {
        offset: coeffs[0],
        amplitude: coeffs[1].hypot(coeffs[2]),
        phase: (-coeffs[2]).atan2(coeffs[1]),
        decay_rate: opt[1],
        angular_frequency: opt[0],
        residual_rms: (ssr / n as f64).sqrt(),
    })
}

/// Residuals of `y = a + b exp(-r u)` with `(a, b)` solved exactly.
fn project_exponential(u: &[f64], y: &[f64], rate: f64) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let (mut se, mut see, mut sy, mut sye) = (0.0, 0.0, 0.0, 0.0);
    for (&ui, &yi) in u.iter().zip(y) {
        let e = (-rate * ui).exp();
        se += e;
        see += e * e;
        sy += yi;
        sye += yi * e;
    }
    let det = n * see - se * se;
    if det.abs() <= 1e-13 * n * see.max(1.0) {
        return (f64::INFINITY, 0.0, 0.0);
    }
    let b = (n * sye - se * sy) / det;
    let a = (sy - b * se) / n;
    let ssr = u
        .iter()
        .zip(y)
        .map(|(&ui, &yi)| {
            let m = a + b * (-rate * ui).exp();
            (yi - m) * (yi - m)
        })
        .sum();
    (ssr, a, b)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fit a single exponential relaxation toward a constant.
///
/// The rate is located by a log-spaced scan refined with golden-section
/// search; offset and amplitude are projected out exactly at each trial rate.
pub fn fit_exponential_decay(times: &[f64], values: &[f64]) -> Result<ExponentialFit, SignalError> {
    validate(times, values, 4)?;
    spread_check(values)?;
    let u: Vec<f64> = times.iter().map(|&t| t - times[0]).collect();
    let span = u[u.len() - 1];

    let lg_lo = (0.01 / span).ln();
    let lg_hi = (200.0 / span).ln();
    let m = 80;
    let mut best = (f64::INFINITY, lg_lo);
    for j in 0..m {
        let lg = lg_lo + (lg_hi - lg_lo) * j as f64 / (m - 1) as f64;
        let (ssr, _, _) = project_exponential(&u, values, lg.exp());
        if ssr < best.0 {
            best = (ssr, lg);
        }
    }
    let step = (lg_hi - lg_lo) / (m - 1) as f64;
    let lg_opt = golden_min(
        |lg| project_exponential(&u, values, lg.exp()).0,
        best.1 - step,
        best.1 + step,
        80,
    );
    let rate = lg_opt.exp();
    let (ssr, a, b) = project_exponential(&u, values, rate);
    if !ssr.is_finite() {
        return Err(SignalError::DegenerateFit);
    }
    Ok(ExponentialFit {
        offset: a,
        amplitude: b,
        rate,
        residual_rms: (ssr / u.len() as f64).sqrt(),
    })
}
