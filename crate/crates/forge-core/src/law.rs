//! Locating the induction phase transition and fitting its scaling law.
//!
//! A prefix-score learning curve is flat, rises sharply, then saturates; a
//! continuous three-segment piecewise-linear fit in log10(step) locates the
//! onset knot. Across runs the onset follows a power law in batch size and
//! context size, fit here by ordinary least squares in log space, and the
//! dedicated -1/2 exponents collapse curves when steps are rescaled by
//! sqrt(batch * context).

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Update-step constant of the reference scaling law (transition at
/// `750000 / sqrt(batch * context)` update steps).
pub const DEFAULT_LAW_T: f64 = 750_000.0;

/// Best prefix score per training step for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PsCurve {
    pub batch_size: u64,
    pub context_size: u64,
    /// `(step, best_ps)` sorted by step, steps unique and positive.
    pub points: Vec<(u64, f64)>,
}

impl PsCurve {
    pub fn new(batch_size: u64, context_size: u64, mut points: Vec<(u64, f64)>) -> Result<Self> {
        if batch_size == 0 || context_size == 0 {
            return Err(Error::Param("batch and context sizes must be positive".into()));
        }
        if points.is_empty() {
            return Err(Error::InsufficientData("curve has no points".into()));
        }
        points.sort_by_key(|&(s, _)| s);
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Invalid(format!("duplicate step {}", w[0].0)));
            }
        }
        for &(s, ps) in &points {
            if s == 0 {
                return Err(Error::Invalid("step 0 has no log-scale position".into()));
            }
            if !ps.is_finite() {
                return Err(Error::Invalid(format!("non-finite score at step {s}")));
            }
        }
        Ok(Self { batch_size, context_size, points })
    }

    /// `(log10 step, ps)` pairs.
    fn log_points(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|&(s, p)| ((s as f64).log10(), p)).collect()
    }
}

/// Steps rescaled to the collapse axis `step * sqrt(batch * context)`.
pub fn twu_transform(curve: &PsCurve) -> Vec<(f64, f64)> {
    let scale = ((curve.batch_size * curve.context_size) as f64).sqrt();
    curve.points.iter().map(|&(s, p)| (s as f64 * scale, p)).collect()
}

/// Steps rescaled to the token axis `step * batch * context`.
pub fn tokens_axis(curve: &PsCurve) -> Vec<(f64, f64)> {
    let scale = (curve.batch_size * curve.context_size) as f64;
    curve.points.iter().map(|&(s, p)| (s as f64 * scale, p))
        .collect()
}

/// Continuous three-segment piecewise-linear fit in log10 of the step axis:
/// `y = c0 + c1 x + c2 relu(x - a) + c3 relu(x - b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlfFit {
    /// Segment boundaries `[a, b]` in log10 units; `a` is the onset.
    pub knots: [f64; 2],
    /// Coefficients in the relu basis.
    pub coef: [f64; 4],
    /// Per-segment slopes (plateau, rise, saturation).
    pub slopes: [f64; 3],
    pub sse: f64,
}

impl PwlfFit {
    pub fn eval(&self, x_log10: f64) -> f64 {
        self.coef[0]
            + self.coef[1] * x_log10
            + self.coef[2] * (x_log10 - self.knots[0]).max(0.0)
            + self.coef[3] * (x_log10 - self.knots[1]).max(0.0)
    }

    /// Onset knot back on the step axis.
    pub fn transition_step(&self) -> f64 {
        10f64.powf(self.knots[0])
    }
}

/// Gates that separate a real transition from noise.
#[derive(Debug, Clone, PartialEq)]
pub struct FitKneeOptions {
    /// Required excess of the middle slope over the first; below this the
    /// curve is declared transition-free.
    pub min_slope_gain: f64,
    /// When set, the curve must actually reach this score after the onset.
    pub ps_floor: Option<f64>,
}

impl Default for FitKneeOptions {
    fn default() -> Self {
        Self { min_slope_gain: 0.05, ps_floor: None }
    }
}

/// Fits the three-segment model to a curve, exhaustively seeding the knot
/// pair on data positions and refining both knots by golden-section search.
pub fn fit_pwlf3(curve: &PsCurve, opts: &FitKneeOptions) -> Result<PwlfFit> {
    fit_pwlf3_log(&curve.log_points(), opts)
}

/// Same fit on pre-transformed `(log10 axis, score)` points, for rescaled
/// axes.
pub fn fit_pwlf3_log(points: &[(f64, f64)], opts: &FitKneeOptions) -> Result<PwlfFit> {
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite axis"));
    let n = pts.len();
    if n < 6 {
        return Err(Error::InsufficientData(format!(
            "{n} points cannot pin down two knots; need at least 6"
        )));
    }
    let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if ymax - ymin < 0.01 {
        return Err(Error::NoTransition(format!(
            "curve is flat: score range {:.4} below 0.01",
            ymax - ymin
        )));
    }

    // Seed: best sse over interior data-point knot pairs.
    let interior = &pts[1..n - 1];
    let mut best: Option<(f64, f64, f64)> = None; // (sse, a, b)
    for i in 0..interior.len() {
        for j in i + 1..interior.len() {
            let (a, b) = (interior[i].0, interior[j].0);
            if let Some((_, sse)) = knee_solve(&pts, a, b) {
                if best.is_none_or(|(s, _, _)| sse < s) {
                    best = Some((sse, a, b));
                }
            }
        }
    }
    let (_, mut a, mut b) =
        best.ok_or_else(|| Error::InsufficientData("no valid knot pair".into()))?;

    // Alternating golden-section refinement of each knot on its open
    // interval.
    let (x_lo, x_hi) = (pts[0].0, pts[n - 1].0);
    for _ in 0..3 {
        let fixed_b = b;
        (a, _) = golden_min(x_lo, fixed_b, 40, &|x| {
            knee_solve(&pts, x, fixed_b).map_or(f64::INFINITY, |(_, s)| s)
        });
        let fixed_a = a;
        (b, _) = golden_min(fixed_a, x_hi, 40, &|x| {
            knee_solve(&pts, fixed_a, x).map_or(f64::INFINITY, |(_, s)| s)
        });
    }
    let (coef, sse) = knee_solve(&pts, a, b)
        .ok_or_else(|| Error::InsufficientData("refined knots degenerate".into()))?;
    let s1 = coef[1];
    let s2 = s1 + coef[2];
    let s3 = s2 + coef[3];
    if s2 - s1 <= opts.min_slope_gain {
        return Err(Error::NoTransition(format!(
            "middle slope exceeds the plateau by {:.4}, below the {:.4} gate",
            s2 - s1,
            opts.min_slope_gain
        )));
    }
    if let Some(floor) = opts.ps_floor {
        let post_max = pts
            .iter()
            .filter(|p| p.0 >= a)
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if post_max < floor {
            return Err(Error::NoTransition(format!(
                "score never reaches {floor} after the onset (max {post_max:.4})"
            )));
        }
    }
    Ok(PwlfFit { knots: [a, b], coef, slopes: [s1, s2, s3], sse })
}

/// OLS in the relu basis for fixed knots; `None` when the design is singular
/// (e.g. a knot outside the data or a segment without points).
fn knee_solve(pts: &[(f64, f64)], a: f64, b: f64) -> Option<([f64; 4], f64)> {
    if a >= b {
        return None;
    }
    let mut xtx = [[0.0; 4]; 4];
    let mut xty = [0.0; 4];
    for &(x, y) in pts {
        let phi = [1.0, x, (x - a).max(0.0), (x - b).max(0.0)];
        for r in 0..4 {
            xty[r] += phi[r] * y;
            for c in 0..4 {
                xtx[r][c] += phi[r] * phi[c];
            }
        }
    }
    let coef = solve_linear(xtx, xty)?;
    let mut sse = 0.0;
    for &(x, y) in pts {
        let yhat = coef[0]
            + coef[1] * x
            + coef[2] * (x - a).max(0.0)
            + coef[3] * (x - b).max(0.0);
        sse += (y - yhat) * (y - yhat);
    }
    Some((coef, sse))
}

/// Gaussian elimination with partial pivoting; `None` on singular systems.
fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    let tol = scale.max(1.0) * 1e-12;
    for col in 0..N {
        let pivot = (col..N).max_by(|&r, &s| {
            a[r][col].abs().partial_cmp(&a[s][col].abs()).expect("finite")
        })?;
        if a[pivot][col].abs() < tol {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col];
        for r in col + 1..N {
            let f = a[r][col] / pivot_row[col];
            for (x, &p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for col in (0..N).rev() {
        let mut s = b[col];
        for c in col + 1..N {
            s -= a[col][c] * x[c];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn golden_min(mut lo: f64, mut hi: f64, iters: usize, f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// One run's transition onset with the sizes that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawObservation {
    pub batch_size: f64,
    pub context_size: f64,
    /// Onset in update steps (e.g. `PwlfFit::transition_step`).
    pub transition_updates: f64,
}

/// Power law `updates = T * batch^beta * context^gamma`, fit in log space,
/// plus the dedicated variant with both exponents pinned to -1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingLawFit {
    /// ln T of the free fit.
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `exp(alpha)`.
    pub t_const: f64,
    /// ln T refit with beta = gamma = -1/2.
    pub rounded_alpha: f64,
    pub rounded_t_const: f64,
    pub n: usize,
}

/// Least squares of `ln u` on `[1, ln batch, ln context]`. Requires at least
/// three observations with independent variation in batch and context.
pub fn fit_scaling_law(obs: &[LawObservation]) -> Result<ScalingLawFit> {
    if obs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} observations cannot fit three parameters",
            obs.len()
        )));
    }
    for o in obs {
        for (name, x) in [
            ("batch size", o.batch_size),
            ("context size", o.context_size),
            ("transition updates", o.transition_updates),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Param(format!("{name} must be positive, got {x}")));
            }
        }
    }
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    let mut rounded_sum = 0.0;
    for o in obs {
        let phi = [1.0, o.batch_size.ln(), o.context_size.ln()];
        let y = o.transition_updates.ln();
        for r in 0..3 {
            xty[r] += phi[r] * y;
            for c in 0..3 {
                xtx[r][c] += phi[r] * phi[c];
            }
        }
        rounded_sum += y + 0.5 * (phi[1] + phi[2]);
    }
    let coef = solve_linear(xtx, xty).ok_or_else(|| {
        Error::InsufficientData(
            "design is singular; batch and context must vary independently".into(),
        )
    })?;
    let rounded_alpha = rounded_sum / obs.len() as f64;
    Ok(ScalingLawFit {
        alpha: coef[0],
        beta: coef[1],
        gamma: coef[2],
        t_const: coef[0].exp(),
        rounded_alpha,
        rounded_t_const: rounded_alpha.exp(),
        n: obs.len(),
    })
}

/// Predicted transition position in update steps: `T / sqrt(batch * context)`.
pub fn predict_transition_updates(t_const: f64, batch_size: f64, context_size: f64) -> f64 {
    t_const / (batch_size * context_size).sqrt()
}

/// Predicted transition position in tokens: `T * sqrt(batch * context)`
/// (updates times tokens per update).
pub fn predict_transition_tokens(t_const: f64, batch_size: f64, context_size: f64) -> f64 {
    t_const * (batch_size * context_size).sqrt()
}

/// Agreement between law predictions and observed transitions, on the token
/// axis, as Pearson correlations with two-sided t-test p-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawAgreement {
    pub n: usize,
    pub r_raw: f64,
    pub p_raw: f64,
    pub r_log: f64,
    pub p_log: f64,
}

/// Correlates predicted transition tokens `T sqrt(bc)` against observed
/// `updates * b * c` over the observation set.
pub fn predicted_vs_observed(obs: &[LawObservation], t_const: f64) -> Result<LawAgreement> {
    if obs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} observations leave no degrees of freedom",
            obs.len()
        )));
    }
    if !(t_const.is_finite() && t_const > 0.0) {
        return Err(Error::Param(format!("law constant must be positive, got {t_const}")));
    }
    let mut pred = Vec::with_capacity(obs.len());
    let mut seen = Vec::with_capacity(obs.len());
    for o in obs {
        pred.push(predict_transition_tokens(t_const, o.batch_size, o.context_size));
        seen.push(o.transition_updates * o.batch_size * o.context_size);
    }
    let (r_raw, p_raw) = pearson(&pred, &seen)?;
    let pred_log: Vec<f64> = pred.iter().map(|x| x.log10()).collect();
    let seen_log: Vec<f64> = seen.iter().map(|x| x.log10()).collect();
    let (r_log, p_log) = pearson(&pred_log, &seen_log)?;
    Ok(LawAgreement { n: obs.len(), r_raw, p_raw, r_log, p_log })
}

/// Pearson correlation with the two-sided p-value of the t statistic
/// `r sqrt((n-2)/(1-r^2))` on n-2 degrees of freedom.
fn pearson(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::InsufficientData(
            "zero variance leaves the correlation undefined".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if 1.0 - r * r < 1e-15 {
        0.0
    } else {
        let t = r.abs() * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
        2.0 * (1.0 - dist.cdf(t))
    };
    Ok((r, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Steps on a log10 grid with scores from an exact three-segment model.
    fn knee_curve(a: f64, b: f64, base: f64, rise: f64) -> PsCurve {
        let mut points = Vec::new();
        let mut x = 4.0;
        while x <= 7.01 {
            let y = base + rise * ((x - a).max(0.0) - (x - b).max(0.0));
            points.push((10f64.powf(x).round() as u64, y));
            x += 0.25;
        }
        PsCurve::new(16, 64, points).unwrap()
    }

    #[test]
    fn curve_constructor_validates() {
        assert!(PsCurve::new(0, 64, vec![(1, 0.1)]).is_err());
        assert!(PsCurve::new(4, 64, vec![]).is_err());
        assert!(PsCurve::new(4, 64, vec![(5, 0.1), (5, 0.2)]).is_err());
        assert!(PsCurve::new(4, 64, vec![(0, 0.1)]).is_err());
        let c = PsCurve::new(4, 64, vec![(100, 0.2), (10, 0.1)]).unwrap();
        assert_eq!(c.points[0].0, 10);
    }

    #[test]
    fn recovers_exact_knots_and_slopes() {
        let fit = fit_pwlf3(&knee_curve(5.0, 6.0, 0.05, 0.8), &FitKneeOptions::default()).unwrap();
        assert!((fit.knots[0] - 5.0).abs() < 0.01, "{:?}", fit.knots);
        assert!((fit.knots[1] - 6.0).abs() < 0.01, "{:?}", fit.knots);
        assert!(fit.slopes[0].abs() < 0.01);
        assert!((fit.slopes[1] - 0.8).abs() < 0.02);
        assert!(fit.slopes[2].abs() < 0.01);
        assert!(fit.sse < 1e-6);
        assert!((fit.transition_step() - 1e5).abs() / 1e5 < 0.03);
    }

    #[test]
    fn flat_and_short_curves_are_rejected() {
        let flat = PsCurve::new(4, 64, (1..12).map(|i| (10u64.pow(i as u32 / 2) + i, 0.05)).collect())
            .unwrap();
        assert!(matches!(
            fit_pwlf3(&flat, &FitKneeOptions::default()),
            Err(Error::NoTransition(_))
        ));
        let short = PsCurve::new(4, 64, vec![(10, 0.0), (100, 0.2), (1000, 0.5), (2000, 0.5), (5000, 0.5)])
            .unwrap();
        assert!(matches!(
            fit_pwlf3(&short, &FitKneeOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn a_plain_line_has_no_transition() {
        let points: Vec<(u64, f64)> = (0..13)
            .map(|i| {
                let x = 4.0 + 0.25 * i as f64;
                (10f64.powf(x).round() as u64, 0.004 * x)
            })
            .collect();
        let line = PsCurve::new(4, 64, points).unwrap();
        assert!(matches!(
            fit_pwlf3(&line, &FitKneeOptions::default()),
            Err(Error::NoTransition(_))
        ));
    }

    #[test]
    fn ps_floor_rejects_a_rise_that_stays_low() {
        // Sharp but tiny rise: slope gain passes, floor does not.
        let xs = [4.0, 4.3, 4.6, 4.9, 5.0, 5.1, 5.4, 5.7, 6.0, 6.3];
        let points: Vec<(u64, f64)> = xs
            .iter()
            .map(|&x| {
                let y = 0.2 * ((x - 5.0f64).max(0.0) - (x - 5.1f64).max(0.0));
                (10f64.powf(x).round() as u64, y)
            })
            .collect();
        let curve = PsCurve::new(4, 64, points).unwrap();
        let open = fit_pwlf3(&curve, &FitKneeOptions::default()).unwrap();
        assert!((open.knots[0] - 5.0).abs() < 0.05);
        let gated = FitKneeOptions { ps_floor: Some(0.1), ..Default::default() };
        assert!(matches!(fit_pwlf3(&curve, &gated), Err(Error::NoTransition(_))));
    }

    #[test]
    fn scaling_law_recovers_random_exponents_exactly() {
        let (alpha, beta, gamma) = (13.0, -0.43, -0.61);
        let mut obs = Vec::new();
        for &b in &[4.0, 16.0, 64.0] {
            for &c in &[32.0, 128.0, 512.0] {
                let u = (alpha + beta * f64::ln(b) + gamma * f64::ln(c)).exp();
                obs.push(LawObservation { batch_size: b, context_size: c, transition_updates: u });
            }
        }
        let fit = fit_scaling_law(&obs).unwrap();
        assert!((fit.alpha - alpha).abs() < 1e-9);
        assert!((fit.beta - beta).abs() < 1e-9);
        assert!((fit.gamma - gamma).abs() < 1e-9);
    }

    #[test]
    fn rounded_mode_recovers_the_reference_constant() {
        let mut obs = Vec::new();
        for &b in &[4.0, 16.0, 256.0] {
            for &c in &[64.0, 1024.0] {
                obs.push(LawObservation {
                    batch_size: b,
                    context_size: c,
                    transition_updates: predict_transition_updates(DEFAULT_LAW_T, b, c),
                });
            }
        }
        let fit = fit_scaling_law(&obs).unwrap();
        assert!((fit.beta + 0.5).abs() < 1e-10);
        assert!((fit.gamma + 0.5).abs() < 1e-10);
        assert!((fit.t_const - DEFAULT_LAW_T).abs() < 1e-4);
        assert!((fit.rounded_t_const - DEFAULT_LAW_T).abs() < 1e-4);
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        // Context never varies: gamma is not identifiable.
        let obs: Vec<LawObservation> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&b| LawObservation {
                batch_size: b,
                context_size: 1024.0,
                transition_updates: 1000.0 / b.sqrt(),
            })
            .collect();
        assert!(matches!(fit_scaling_law(&obs), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn prediction_arithmetic() {
        assert_eq!(predict_transition_updates(750_000.0, 16.0, 1024.0), 5859.375);
        let tokens = predict_transition_tokens(10f64.powf(5.7), 16.0, 1024.0);
        assert!((tokens / 6.415e7 - 1.0).abs() < 1e-3, "{tokens}");
    }

    #[test]
    fn axis_transforms_scale_steps() {
        let c = PsCurve::new(4, 9, vec![(10, 0.1), (100, 0.9)]).unwrap();
        assert_eq!(twu_transform(&c), vec![(60.0, 0.1), (600.0, 0.9)]);
        assert_eq!(tokens_axis(&c), vec![(360.0, 0.1), (3600.0, 0.9)]);
    }

    #[test]
    fn correlation_and_p_value_by_hand() {
        let (r, p) = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.981_980_5).abs() < 1e-6);
        // df = 1 makes the t distribution a Cauchy: p = 1 - 2 atan(t)/pi.
        let t = r * (1.0 / (1.0 - r * r)).sqrt();
        let expect = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
        assert!((p - expect).abs() < 1e-9, "{p} vs {expect}");
    }

    #[test]
    fn perfect_law_agreement() {
        let mut obs = Vec::new();
        for &b in &[4.0, 16.0, 64.0] {
            for &c in &[64.0, 256.0, 1024.0] {
                obs.push(LawObservation {
                    batch_size: b,
                    context_size: c,
                    transition_updates: predict_transition_updates(DEFAULT_LAW_T, b, c),
                });
            }
        }
        let agree = predicted_vs_observed(&obs, DEFAULT_LAW_T).unwrap();
        assert!(agree.r_raw > 0.999_999);
        assert!(agree.r_log > 0.999_999);
        assert_eq!(agree.p_log, 0.0);
    }
}
