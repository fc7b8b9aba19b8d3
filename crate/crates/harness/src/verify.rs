//! Acceptance criteria. Each check returns an [`Outcome`]; nothing here
//! panics on a failed criterion, so `verify` can report all of them.

use std::fmt;
use std::time::{Duration, Instant};

use polent::criteria::{epr_reid, eof_symmetric, opt_combo, opt_perp_combo, optimize_gain, WitnessReport};
use polent::entangle::{
    entangling_bs_map, infer_splitting_from_asq_correlation, input_covariance, optimized_output_covariance,
    simulate_asq_difference, symmetrised_source, BeamSplitterSpec, DetectionImperfections, SQ_SUM,
};
use polent::gaussian::{
    mc_validate, normalized_combo_variance, propagate, Axis, Beam, Coord, CovarianceModel, FluctuationBasis, MCConfig,
};
use polent::metrology::lin_to_db;
use polent::stokes::{DarkPlaneAngle, PolSqueezedSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::config::GainStrategy;
use crate::error::{HarnessError, HarnessResult};
use crate::model::{tracked_combos, Setup};
use crate::oracle::{algebra_residual, coherent_normalized_variance, MC_REL_TOL, Z_LIMIT};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:<3} {}: {} [{:.3} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(id: &'static str, title: &'static str, f: impl FnOnce() -> HarnessResult<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        title,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Fails `o` if it took longer than `secs`.
fn within(mut o: Outcome, secs: f64) -> Outcome {
    let took = o.elapsed.as_secs_f64();
    o.detail.push_str(&format!("; time limit {secs} s"));
    o.passed &= took < secs;
    o
}

/// Input sources as characterised: -4.2/+19.7 dB and -4.0/+19.6 dB.
pub fn paper_sources() -> (PolSqueezedSource, PolSqueezedSource) {
    let theta = DarkPlaneAngle::from_degrees(4.5);
    (
        PolSqueezedSource::from_db(-4.2, 19.7, theta, 1.0).expect("valid source"),
        PolSqueezedSource::from_db(-4.0, 19.6, theta, 1.0).expect("valid source"),
    )
}

pub const MEASURED_ASQ_DIFFERENCE: f64 = 0.55;
pub const ASYMMETRIC_T: f64 = 0.521;

fn setup(a: PolSqueezedSource, b: PolSqueezedSource, t: f64, gain: GainStrategy) -> HarnessResult<Setup> {
    Ok(Setup {
        a,
        b,
        splitter: BeamSplitterSpec::new(t)?,
        detection: DetectionImperfections::ideal(),
        gain,
        fixed_gain: 1.0,
    })
}

pub fn criterion_1() -> Outcome {
    within(timed("1", "squeezed-direction sum correlation", || {
        let (a, b) = paper_sources();
        let mut worst_db: f64 = 0.0;
        let mut shown = Vec::new();
        for i in 0..=10 {
            let t = 0.45 + 0.01 * i as f64;
            let v = setup(a, b, t, GainStrategy::Fixed)?.sq_basis()?.first.variance;
            let db = lin_to_db(v)?;
            worst_db = worst_db.max((db + 4.1).abs());
            if format!("{v:.3}") != "0.389" {
                shown.push(format!("t={t}: {v}"));
            }
        }
        let v = setup(a, b, 0.5, GainStrategy::Fixed)?.sq_basis()?.first.variance;
        Ok((
            worst_db <= 0.05 && shown.is_empty(),
            format!(
                "{v:.6} ({:.3} dB) for t in [0.45, 0.55]; max |dB - (-4.1)| = {worst_db:.4} (tol 0.05){}",
                lin_to_db(v)?,
                if shown.is_empty() { String::new() } else { format!("; off: {}", shown.join(", ")) }
            ),
        ))
    }), 1.0)
}

pub fn criterion_2() -> Outcome {
    timed("2", "splitting asymmetry inference", || {
        let (a, b) = paper_sources();
        let s = infer_splitting_from_asq_correlation(MEASURED_ASQ_DIFFERENCE, &a, &b)?;
        let back = simulate_asq_difference(s.t, &a, &b)?;
        let imb = s.imbalance();
        let round_trip = (back - MEASURED_ASQ_DIFFERENCE).abs();
        Ok((
            (imb - 0.042).abs() <= 0.003 && round_trip <= 1e-9,
            format!("|T-R| = {imb:.5} (0.042 ± 0.003), t = {:.5}, round trip error {round_trip:.2e} (tol 1e-9)", s.t),
        ))
    })
}

pub fn criterion_3() -> Outcome {
    timed("3", "witness products on measured pairs", || {
        let r1 = WitnessReport::from_pair(0.39, 0.55)?;
        let r2 = WitnessReport::from_pair(0.44, 0.46)?;
        let (s1, s2) = (format!("{:.2}", r1.product_root), format!("{:.2}", r2.product_root));
        Ok((
            s1 == "0.46" && s2 == "0.45" && r1.verdict_nonseparable && r2.verdict_nonseparable,
            format!("sqrt(0.39*0.55) = {s1}, sqrt(0.44*0.46) = {s2}, both < 1"),
        ))
    })
}

/// Brute-force-gain optimised correlations at `t` with a symmetric per-beam
/// angle error in degrees.
pub fn opt_correlation_with_angle_error(src: PolSqueezedSource, t: f64, deg: f64) -> HarnessResult<(f64, f64)> {
    let mut s = setup(src, src, t, GainStrategy::BruteForce)?;
    s.detection.angle_error_c = deg.to_radians();
    s.detection.angle_error_d = deg.to_radians();
    let e = s.opt_basis()?;
    Ok((e.first.variance, e.second.variance))
}

/// Smallest angle error in `[lo, hi]` degrees where the optimised
/// correlation reaches `level`, by bisection on a monotone profile.
fn crossing(src: PolSqueezedSource, t: f64, level: f64, mut lo: f64, mut hi: f64) -> HarnessResult<f64> {
    let f = |d: f64| -> HarnessResult<f64> {
        let (v1, v2) = opt_correlation_with_angle_error(src, t, d)?;
        Ok(v1.max(v2) - level)
    };
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn criterion_4() -> Outcome {
    timed("4", "optimised-direction floor and angle-error robustness", || {
        let (a, b) = paper_sources();
        let src = symmetrised_source(&a, &b);
        let floor = (a.v_sq() + b.v_sq()) / 2.0;
        let (v1, v2) = opt_correlation_with_angle_error(src, ASYMMETRIC_T, 0.0)?;
        let rel = ((v1 - floor).abs() / floor).max((v2 - floor).abs() / floor);
        // Sweep the misset over [0, 2] degrees.
        let grid: Vec<f64> = (0..=40).map(|i| 0.05 * i as f64).collect();
        let mut profile = Vec::with_capacity(grid.len());
        for &d in &grid {
            let (p, q) = opt_correlation_with_angle_error(src, ASYMMETRIC_T, d)?;
            profile.push(p.max(q));
        }
        let monotone = profile.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let reaches = profile.last().copied().unwrap_or(0.0) >= 0.44;
        let (d44, d46) = if reaches {
            (
                crossing(src, ASYMMETRIC_T, 0.44, 0.0, 2.0)?,
                crossing(src, ASYMMETRIC_T, 0.46, 0.0, 2.0)?,
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok((
            rel <= 1e-6 && monotone && reaches && d44 <= 1.5,
            format!(
                "ideal floor {v1:.7}/{v2:.7} vs {floor:.7} (rel {rel:.1e}, tol 1e-6); \
                 enters 0.44 at {d44:.3} deg, 0.46 at {d46:.3} deg (need <= 1.5 deg); value at 2 deg {:.4}",
                profile.last().copied().unwrap_or(f64::NAN)
            ),
        ))
    })
}

pub fn criterion_5() -> Outcome {
    timed("5", "individual output variances near 16 dB", || {
        let (a, b) = paper_sources();
        let t = infer_splitting_from_asq_correlation(MEASURED_ASQ_DIFFERENCE, &a, &b)?.t;
        let s = setup(a, b, t, GainStrategy::Fixed)?;
        let mut dbs = Vec::new();
        for cov in [s.sq_basis()?.cov, s.opt_basis()?.cov] {
            for i in 0..cov.dim() {
                dbs.push(lin_to_db(cov.matrix()[(i, i)])?);
            }
        }
        let lo = dbs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = dbs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((
            lo >= 16.0 && hi <= 17.0,
            format!("t = {t:.4}: eight output variances span [{lo:.3}, {hi:.3}] dB (window [16, 17])"),
        ))
    })
}

pub fn criterion_6() -> Outcome {
    timed("6", "truncated Fock oracle", || {
        let r3 = algebra_residual(3)?;
        let r8 = algebra_residual(8)?;
        let v = coherent_normalized_variance(2.0, 16)?;
        Ok((
            r3.worst() <= 1e-12 && r8.worst() <= 1e-12 && (v - 1.0).abs() <= 0.01,
            format!(
                "residuals {:.1e} (n_max 3), {:.1e} (n_max 8), tol 1e-12; coherent variance / |<S3>| = {v:.6} (tol 1%)",
                r3.worst(),
                r8.worst()
            ),
        ))
    })
}

pub const MC_SAMPLES: usize = 1_000_000;
pub const MC_SEED: u64 = 20_061_017;

pub fn criterion_7() -> Outcome {
    within(timed("7", "Monte Carlo equivalence", || {
        let (a, b) = paper_sources();
        let t_asym = infer_splitting_from_asq_correlation(MEASURED_ASQ_DIFFERENCE, &a, &b)?.t;
        let sym = symmetrised_source(&a, &b);
        let scenarios = [
            ("1", setup(a, b, 0.5, GainStrategy::Fixed)?),
            ("2", setup(a, b, t_asym, GainStrategy::Fixed)?),
            ("4", setup(sym, sym, ASYMMETRIC_T, GainStrategy::BruteForce)?),
        ];
        let mc = MCConfig::new(MC_SAMPLES, MC_SEED)?;
        let mut worst_rel: f64 = 0.0;
        let mut worst_z: f64 = 0.0;
        let mut count = 0;
        let mut first = None;
        for (_, s) in &scenarios {
            let cov = input_covariance(&s.a, &s.b);
            for (_, map, w) in tracked_combos(s)? {
                let rep = mc_validate(&cov, &map, &w, mc)?;
                worst_rel = worst_rel.max(rep.relative_error());
                worst_z = worst_z.max(rep.z_score.abs());
                count += 1;
                first.get_or_insert((cov.clone(), map, w, rep.empirical));
            }
        }
        let (cov, map, w, e) = first.ok_or_else(|| HarnessError::Acceptance("no combinations tracked".into()))?;
        let again = mc_validate(&cov, &map, &w, mc)?.empirical;
        let bit_exact = again.to_bits() == e.to_bits();
        Ok((
            worst_rel <= MC_REL_TOL && worst_z < Z_LIMIT && bit_exact,
            format!(
                "{count} combinations at {MC_SAMPLES} samples: max rel error {worst_rel:.2e} (tol 1e-2), \
                 max |z| {worst_z:.2} (< 4), rerun bit-exact: {bit_exact}"
            ),
        ))
    }), 30.0)
}

pub fn criterion_8a() -> Outcome {
    timed("8a", "gain optimiser dominates unit and closed-form gains", || {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let mut violations = Vec::new();
        for case in 0..50 {
            let t = rng.gen_range(0.3..0.7);
            let draw = |rng: &mut ChaCha20Rng| -> HarnessResult<PolSqueezedSource> {
                let v_sq: f64 = rng.gen_range(0.2..0.95);
                let v_asq = rng.gen_range(1.0 / v_sq..150.0);
                Ok(PolSqueezedSource::new(v_sq, v_asq, DarkPlaneAngle::default(), 1.0)?)
            };
            let (a, b) = (draw(&mut rng)?, draw(&mut rng)?);
            let s = setup(a, b, t, GainStrategy::Fixed)?;
            let g_formula = s.paper_gain()?;
            let cov = optimized_output_covariance(&a, &b, &s.splitter)?;
            for template in [opt_combo(), opt_perp_combo()] {
                let best = optimize_gain(&cov, &template)?;
                for g in [1.0, g_formula] {
                    let v = template.with_gain(g)?.normalized_variance(&cov)?;
                    if best.v_min > v * (1.0 + 1e-12) {
                        violations.push(format!("case {case}: {} > {v} at g = {g}", best.v_min));
                    }
                }
            }
        }
        Ok((
            violations.is_empty(),
            if violations.is_empty() {
                "50 random cases x 2 combinations: minimum never above g = 1 or the closed-form gain".into()
            } else {
                violations.join("; ")
            },
        ))
    })
}

pub fn criterion_8b() -> Outcome {
    timed("8b", "EPR-Reid product on the symmetric splitter (model value)", || {
        let (a, b) = paper_sources();
        let cov = setup(a, b, 0.5, GainStrategy::Fixed)?.sq_basis()?.cov;
        let c = |x| Coord::new(Beam::C, x);
        let d = |x| Coord::new(Beam::D, x);
        let r = epr_reid(&cov, (c(Axis::Sq), d(Axis::Sq)), (c(Axis::Asq), d(Axis::Asq)))?;
        Ok((
            (r.product - 0.60).abs() <= 0.02,
            format!(
                "conditional variances {:.4}, {:.4}; product {:.4} (0.60 ± 0.02)",
                r.conditional_x, r.conditional_p, r.product
            ),
        ))
    })
}

pub fn criterion_8c() -> Outcome {
    timed("8c", "entanglement of formation at witness product 0.46", || {
        let e = eof_symmetric(0.39, 0.55).unwrap_or(f64::NAN);
        Ok((
            (e - 0.48).abs() <= 0.01,
            format!("closed form gives {e:.4} ebits at sqrt(0.39*0.55) = {:.4}; expected 0.48 ± 0.01", (0.39f64 * 0.55).sqrt()),
        ))
    })
}

pub fn criterion_9() -> Outcome {
    timed("9", "splitter map invariants over 1000 random t", || {
        let (a, b) = paper_sources();
        let floor = (a.v_sq() + b.v_sq()) / 2.0;
        let vacuum = CovarianceModel::identity(FluctuationBasis::standard_input());
        let input = input_covariance(&a, &b);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (mut orth, mut vac, mut sum): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for _ in 0..1000 {
            let bs = BeamSplitterSpec::new(rng.gen_range(0.0..1.0))?;
            let map = entangling_bs_map(&bs)?;
            orth = orth.max(map.orthogonality_residual());
            let out = propagate(&map, &vacuum)?;
            vac = vac.max((out.matrix() - vacuum.matrix()).abs().max());
            let v = normalized_combo_variance(&propagate(&map, &input)?, &SQ_SUM)?;
            sum = sum.max((v - floor).abs());
        }
        Ok((
            orth <= 1e-12 && vac <= 1e-12 && sum <= 1e-12,
            format!("max orthogonality residual {orth:.1e}, vacuum deviation {vac:.1e}, sum-correlation drift {sum:.1e} (tol 1e-12)"),
        ))
    })
}

pub fn all() -> Vec<fn() -> Outcome> {
    vec![
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8a,
        criterion_8b,
        criterion_8c,
        criterion_9,
    ]
}

pub fn run_all() -> Vec<Outcome> {
    all().into_iter().map(|f| f()).collect()
}
