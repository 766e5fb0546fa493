//! Analytic error and cost model for recursive distillation.
//!
//! The surface-code logical error rate follows the fitted empirical form
//! `p_L(d) = p_at_T[d mod 2] * (p / p_T)^floor((d+1)/2)`. The magic-state
//! error probability recurses as
//!
//! ```text
//!     p_M(d) = 35 [ p_M(d/3) + 67.5 p_L(d/3) ]^3
//! ```
//!
//! with the code distance tripling per level. The module exposes the
//! threshold of that recursion, the minimum base distance bound, the
//! amplification ratio `Omega(d) = p_M(d) / p_L(d)` and its regimes, the
//! expected-time curve with per-level repetition factors, and the gate cost
//! table for the linear-array layout.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter {name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("distillation is impossible at this target: the distance bound has no solution")]
    DistillationImpossible,
    #[error(
        "repetition factor saturated at level {level} (d = {d}): expected repetitions diverge"
    )]
    TimeSaturated { level: usize, d: u64 },
}

/// Fitted constants of the surface-code logical error rate.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceCodeErrorModel {
    pub threshold: f64,
    pub at_threshold_even: f64,
    pub at_threshold_odd: f64,
}

impl Default for SurfaceCodeErrorModel {
    fn default() -> Self {
        SurfaceCodeErrorModel {
            threshold: 0.007,
            at_threshold_even: 0.09,
            at_threshold_odd: 0.3,
        }
    }
}

impl SurfaceCodeErrorModel {
    /// Logical error rate per location at physical error rate `p` and
    /// distance `d`.
    pub fn logical_error_rate(&self, p: f64, d: u64) -> Result<f64, ModelError> {
        if !(0.0..1.0).contains(&p) || p == 0.0 {
            return Err(ModelError::Domain {
                name: "p",
                value: p,
                domain: "(0, 1)",
            });
        }
        if d < 1 {
            return Err(ModelError::Domain {
                name: "d",
                value: d as f64,
                domain: "d >= 1",
            });
        }
        let at_t = if d % 2 == 1 {
            self.at_threshold_odd
        } else {
            self.at_threshold_even
        };
        Ok(at_t * (p / self.threshold).powi(d.div_ceil(2) as i32))
    }
}

/// Leading-order constants of the 15-to-1 error propagation model.
#[derive(Clone, Copy, Debug)]
pub struct DistillationModel {
    pub error_model: SurfaceCodeErrorModel,
    /// Undetectable triple-error input configurations.
    pub configurations: f64,
    /// Effective logical error locations per input, 45 * 1.5.
    pub locations_per_input: f64,
    /// Single-error sensitivity of the repetition factor.
    pub repetition_sensitivity: f64,
    /// 35 * at_threshold_odd^2 / p_T, the amplification recursion constant.
    pub amp_coefficient: f64,
}

impl Default for DistillationModel {
    fn default() -> Self {
        DistillationModel {
            error_model: SurfaceCodeErrorModel::default(),
            configurations: 35.0,
            locations_per_input: 67.5,
            repetition_sensitivity: 15.0,
            amp_coefficient: 450.0,
        }
    }
}

fn check_odd_d0(d0: u64) -> Result<(), ModelError> {
    if d0 < 3 || d0.is_multiple_of(2) {
        return Err(ModelError::Domain {
            name: "d0",
            value: d0 as f64,
            domain: "odd, >= 3",
        });
    }
    Ok(())
}

impl DistillationModel {
    fn p_l(&self, p: f64, d: u64) -> Result<f64, ModelError> {
        self.error_model.logical_error_rate(p, d)
    }

    /// One recursion step: error of the output at distance `3d` given the
    /// input error and logical rate at distance `d`.
    pub fn propagate(&self, p_m: f64, p_l: f64) -> f64 {
        self.configurations * (p_m + self.locations_per_input * p_l).powi(3)
    }

    /// `(d, p_M(d))` for `levels + 1` points starting at the injection
    /// boundary `p_M(d0) = p_m0` (defaults to `p` for physical injection).
    pub fn magic_error_curve(
        &self,
        p: f64,
        d0: u64,
        p_m0: Option<f64>,
        levels: u32,
    ) -> Result<Vec<(u64, f64)>, ModelError> {
        check_odd_d0(d0)?;
        let mut out = Vec::with_capacity(levels as usize + 1);
        let mut d = d0;
        let mut p_m = p_m0.unwrap_or(p);
        out.push((d, p_m));
        for _ in 0..levels {
            p_m = self.propagate(p_m, self.p_l(p, d)?);
            d *= 3;
            out.push((d, p_m));
        }
        Ok(out)
    }

    /// Smallest positive fixed point of `x = 35 (x + 67.5 p_L(d0))^3`.
    ///
    /// `p0` is the floor the recursion converges to. `feasible` additionally
    /// requires `p >= p0`, i.e. physical injection at `p` does not increase
    /// the error on the first level; higher levels then only improve.
    pub fn distillation_threshold(&self, p: f64, d0: u64) -> Result<ThresholdResult, ModelError> {
        check_odd_d0(d0)?;
        let c = self.locations_per_input * self.p_l(p, d0)?;
        let root = smallest_positive_root(self.configurations, c);
        let feasible = root.is_some_and(|r| p >= r);
        Ok(ThresholdResult {
            p0: root,
            d0,
            feasible,
        })
    }

    /// Ideal threshold in the limit of vanishing logical error rate,
    /// `p0 = 35 p0^3`.
    pub fn ideal_threshold(&self) -> f64 {
        1.0 / self.configurations.sqrt()
    }

    /// Smallest odd base distance exceeding the distance bound for target
    /// output error `p0` at physical rate `p`.
    pub fn min_base_distance(&self, p0: f64, p: f64) -> Result<MinDistance, ModelError> {
        if !(0.0..1.0).contains(&p) || p == 0.0 {
            return Err(ModelError::Domain {
                name: "p",
                value: p,
                domain: "(0, 1)",
            });
        }
        if 143.0 * p >= 1.0 {
            return Err(ModelError::Domain {
                name: "p",
                value: p,
                domain: "143 p < 1",
            });
        }
        let arg = 0.0151 * p0.cbrt() - 0.0494 * p0;
        if arg <= 0.0 {
            return Err(ModelError::DistillationImpossible);
        }
        let bound = 2.0 * arg.ln() / (143.0 * p).ln() - 1.0;
        let mut d0 = (bound.max(0.0).floor() as u64) | 1; // odd, >= 1
        while d0 as f64 <= bound {
            d0 += 2;
        }
        Ok(MinDistance { bound, d0 })
    }

    /// Classifies the amplification recursion `Omega(3d) = 450 p (Omega(d)
    /// + 67.5)^3` at physical rate `p`.
    pub fn amplification_analysis(
        &self,
        p: f64,
        d_prime: u64,
        omega_at_d_prime: f64,
    ) -> AmplificationAnalysis {
        if p <= 0.0 || p >= self.error_model.threshold {
            return AmplificationAnalysis {
                regime: AmplificationRegime::Ineffective,
                fixed_point: None,
                d_prime,
                omega_at_d_prime,
                d_out_ratio: None,
            };
        }
        let c = self.locations_per_input;
        let a = self.amp_coefficient;
        let fixed_point = smallest_positive_root(a * p, c);
        match fixed_point {
            Some(fp) => AmplificationAnalysis {
                regime: AmplificationRegime::Bounded,
                fixed_point: Some(fp),
                d_prime,
                omega_at_d_prime,
                d_out_ratio: None,
            },
            None => {
                let ratio = 1.0
                    + (a * p * omega_at_d_prime * omega_at_d_prime).ln()
                        / (d_prime as f64 * (143.0 * p).ln());
                AmplificationAnalysis {
                    regime: AmplificationRegime::Growing,
                    fixed_point: None,
                    d_prime,
                    omega_at_d_prime,
                    d_out_ratio: Some(ratio),
                }
            }
        }
    }

    /// Largest `p` for which the constant-amplification cubic still has a
    /// positive real solution (the bounded/growing boundary).
    pub fn amplification_tangency(&self) -> f64 {
        let c = self.locations_per_input;
        let a = self.amp_coefficient;
        // Root existence is monotone in p, so bisect on it.
        let (mut lo, mut hi) = (1e-12, 1e-6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if smallest_positive_root(a * mid, c).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `(d, ln p_L(d), ln p_M(d))` along the recursion, evaluated in log
    /// space so that deep recursions stay representable.
    pub fn log_error_curve(
        &self,
        p: f64,
        d0: u64,
        levels: u32,
    ) -> Result<Vec<(u64, f64, f64)>, ModelError> {
        check_odd_d0(d0)?;
        let ln_p_l = |d: u64| -> Result<f64, ModelError> {
            if !(0.0..1.0).contains(&p) || p == 0.0 {
                return Err(ModelError::Domain {
                    name: "p",
                    value: p,
                    domain: "(0, 1)",
                });
            }
            let em = &self.error_model;
            let at_t = if d % 2 == 1 {
                em.at_threshold_odd
            } else {
                em.at_threshold_even
            };
            Ok(at_t.ln() + d.div_ceil(2) as f64 * (p / em.threshold).ln())
        };
        let mut out = Vec::with_capacity(levels as usize + 1);
        let mut d = d0;
        let mut ln_p_m = p.ln();
        out.push((d, ln_p_l(d)?, ln_p_m));
        for _ in 0..levels {
            let arg = log_sum_exp(ln_p_m, self.locations_per_input.ln() + ln_p_l(d)?);
            ln_p_m = self.configurations.ln() + 3.0 * arg;
            d *= 3;
            out.push((d, ln_p_l(d)?, ln_p_m));
        }
        Ok(out)
    }

    /// `(d, Omega(d))` along the magic error curve, `Omega = p_M / p_L`.
    pub fn omega_curve(&self, p: f64, d0: u64, levels: u32) -> Result<Vec<(u64, f64)>, ModelError> {
        let curve = self.log_error_curve(p, d0, levels)?;
        Ok(curve
            .into_iter()
            .map(|(d, ln_p_l, ln_p_m)| (d, (ln_p_m - ln_p_l).exp()))
            .collect())
    }

    /// Expected cycles to distill at `d = d0 * 3^m` for `m = 0..=levels`,
    /// dividing each level's nominal time by its success factor
    /// `1 - 15 [p_M(d/3) + 67.5 p_L(d/3)]`.
    pub fn expected_time_curve(
        &self,
        p: f64,
        d0: u64,
        levels: u32,
    ) -> Result<Vec<TimePoint>, ModelError> {
        let errors = self.magic_error_curve(p, d0, None, levels)?;
        let mut out = vec![TimePoint {
            d: d0,
            nominal: 0.0,
            expected: 0.0,
        }];
        for m in 1..=levels as usize {
            let d = d0 * 3u64.pow(m as u32);
            let mut expected = 0.0;
            for r in 0..m {
                // Level repeated at output distance d / 3^r.
                let d_r = d / 3u64.pow(r as u32);
                let (d_below, p_m_below) = errors[m - 1 - r];
                debug_assert_eq!(d_below * 3, d_r);
                let arg = p_m_below + self.locations_per_input * self.p_l(p, d_below)?;
                let factor = 1.0 - self.repetition_sensitivity * arg;
                if factor <= 0.0 {
                    return Err(ModelError::TimeSaturated {
                        level: m - r,
                        d: d_r,
                    });
                }
                expected += (2.0f64 / 3.0).powi(r as i32) * 5.0 * d as f64 / factor;
            }
            out.push(TimePoint {
                d,
                nominal: 15.0 * d as f64,
                expected,
            });
        }
        Ok(out)
    }
}

/// Smallest positive root of `f(x) = a (x + c)^3 - x`, to relative width
/// 1e-12. `f(0) > 0` and `f` dips below zero exactly between its two
/// positive roots, so the smallest root lies in `(0, x*]` with `x*` the
/// stationary point `sqrt(1/(3a)) - c`.
fn smallest_positive_root(a: f64, c: f64) -> Option<f64> {
    let f = |x: f64| a * (x + c).powi(3) - x;
    let x_star = (1.0 / (3.0 * a)).sqrt() - c;
    if x_star <= 0.0 || f(x_star) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, x_star);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) / hi < 1e-13 {
            break;
        }
    }
    Some(hi)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Clone, Copy, Debug)]
pub struct ThresholdResult {
    pub p0: Option<f64>,
    pub d0: u64,
    pub feasible: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct MinDistance {
    pub bound: f64,
    pub d0: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmplificationRegime {
    /// `Omega(d)` converges to a fixed point.
    Bounded,
    /// `Omega(d)` grows without bound while distillation still helps.
    Growing,
    /// Above the distillation threshold: recursion does not reduce errors.
    Ineffective,
}

#[derive(Clone, Copy, Debug)]
pub struct AmplificationAnalysis {
    pub regime: AmplificationRegime,
    pub fixed_point: Option<f64>,
    pub d_prime: u64,
    pub omega_at_d_prime: f64,
    /// Distance rescaling that balances magic-state and surface-code errors.
    pub d_out_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct TimePoint {
    pub d: u64,
    pub nominal: f64,
    pub expected: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum Levels {
    Finite(u32),
    Infinite,
}

/// Time cost of `m >= 1` levels of nested distillation given the per-level
/// distill and pack times; each recursion level doubles the batches and
/// triples the speed, so the infinite limit is finite.
pub fn multi_level_time(t_distill: f64, t_pack: f64, levels: Levels) -> f64 {
    match levels {
        Levels::Infinite => 3.0 * t_distill + 2.0 * t_pack,
        Levels::Finite(m) => {
            assert!(m >= 1, "at least one level is required");
            let mut sum = 0.0;
            for r in 0..m {
                sum += (2.0f64 / 3.0).powi(r as i32) * (t_distill + t_pack);
            }
            sum - t_pack
        }
    }
}

/// One row of the universal gate set cost table.
#[derive(Clone, Debug)]
pub struct CostEntry {
    pub gate: &'static str,
    /// Data qubits.
    pub space: f64,
    /// Error correction cycles.
    pub time_expected: f64,
    pub time_deviation: f64,
    pub time_max: f64,
    pub resource: Option<&'static str>,
}

impl CostEntry {
    pub fn spacetime(&self) -> f64 {
        self.space * self.time_expected
    }
}

/// Instantiates the linear-array gate cost table at distance `d`.
/// `path_len` is the number of ancilla tiles connecting the operands of a
/// multi-qubit gate and `targets` the number of CZ targets.
pub fn cost_table(d: u64, path_len: u64, targets: u64) -> Vec<CostEntry> {
    let d = d as f64;
    let l = path_len as f64;
    let n = targets as f64;
    vec![
        CostEntry {
            gate: "S",
            space: 2.0 * d * d,
            time_expected: 2.0 * d,
            time_deviation: 0.0,
            time_max: 2.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "H",
            space: 2.0 * d * d,
            time_expected: 3.0 * d,
            time_deviation: 0.0,
            time_max: 3.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "SH",
            space: 2.0 * d * d,
            time_expected: 3.0 * d,
            time_deviation: 0.0,
            time_max: 3.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "HS",
            space: 2.0 * d * d,
            time_expected: 3.0 * d,
            time_deviation: 0.0,
            time_max: 3.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "SHS",
            space: 2.0 * d * d,
            time_expected: 4.0 * d,
            time_deviation: 0.0,
            time_max: 4.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "CZ^n (one-sided)",
            space: (l + n + 1.0) * d * d,
            time_expected: 2.0 * d,
            time_deviation: 0.0,
            time_max: 2.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "CZ^n (two-sided)",
            space: (l + n + 1.0) * d * d,
            time_expected: 3.0 * d,
            time_deviation: 0.0,
            time_max: 3.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "T",
            space: 2.0 * d * d,
            time_expected: 2.0 * d,
            time_deviation: d,
            time_max: 3.0 * d,
            resource: Some("|T>"),
        },
        CostEntry {
            gate: "CCZ (narrow)",
            space: (l + 3.0) * d * d,
            time_expected: 3.125 * d,
            time_deviation: 1.95 * d,
            time_max: 5.0 * d,
            resource: Some("|CCZ>"),
        },
        CostEntry {
            gate: "CCZ (wide)",
            space: (2.0 * l + 3.0) * d * d,
            time_expected: 2.75 * d,
            time_deviation: 0.661 * d,
            time_max: 3.0 * d,
            resource: Some("|CCZ>"),
        },
        CostEntry {
            gate: "|T> preparation",
            space: 3.0 * d * d,
            time_expected: 15.0 * d,
            time_deviation: 0.0,
            time_max: 15.0 * d,
            resource: None,
        },
        CostEntry {
            gate: "|CCZ> preparation",
            space: 6.0 * d * d,
            time_expected: 10.5 * d,
            time_deviation: 0.0,
            time_max: 10.5 * d,
            resource: None,
        },
    ]
}

/// Spacetime summaries of the preparation operations and reference designs.
#[derive(Clone, Copy, Debug)]
pub struct SpacetimeSummary {
    pub t_one_level: f64,
    pub t_infinite: f64,
    pub ccz: f64,
    pub baseline_reed_muller_one: f64,
    pub baseline_reed_muller_infinite: f64,
    pub baseline_compact_one: f64,
    pub baseline_compact_infinite: f64,
    pub baseline_ccz: f64,
}

pub fn spacetime_summary(d: u64) -> SpacetimeSummary {
    let d3 = (d * d * d) as f64;
    SpacetimeSummary {
        t_one_level: 15.0 * d3,
        t_infinite: 45.0 * d3,
        ccz: 63.0 * d3,
        baseline_reed_muller_one: 680.0 * d3,
        baseline_reed_muller_infinite: 2176.0 * d3,
        baseline_compact_one: 40.0 * d3,
        baseline_compact_infinite: 180.0 * d3,
        baseline_ccz: 396.0 * d3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> DistillationModel {
        DistillationModel::default()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn logical_rate_at_threshold_is_the_fitted_constant() {
        let em = SurfaceCodeErrorModel::default();
        assert_eq!(em.logical_error_rate(0.007, 5).unwrap(), 0.3);
        assert_eq!(em.logical_error_rate(0.007, 4).unwrap(), 0.09);
    }

    #[test]
    fn logical_rate_hand_value() {
        let em = SurfaceCodeErrorModel::default();
        let v = em.logical_error_rate(7e-4, 5).unwrap();
        assert!(rel_err(v, 0.3 * 0.1f64.powi(3)) < 1e-12);
    }

    #[test]
    fn logical_rate_domain_errors() {
        let em = SurfaceCodeErrorModel::default();
        assert!(em.logical_error_rate(0.0, 5).is_err());
        assert!(em.logical_error_rate(1.0, 5).is_err());
        assert!(em.logical_error_rate(1e-3, 0).is_err());
    }

    #[test]
    fn one_recursion_step_by_hand() {
        let m = model();
        let curve = m.magic_error_curve(7e-4, 5, None, 1).unwrap();
        assert_eq!(curve[0], (5, 7e-4));
        let (d, p_m) = curve[1];
        assert_eq!(d, 15);
        assert!(rel_err(p_m, 3.218e-4) < 1e-3, "p_M(15) = {p_m}");
    }

    #[test]
    fn zero_levels_returns_injection_point() {
        let m = model();
        let curve = m.magic_error_curve(7e-4, 5, Some(1e-3), 0).unwrap();
        assert_eq!(curve, vec![(5, 1e-3)]);
    }

    #[test]
    fn above_threshold_first_level_increases() {
        let m = model();
        // d0 = 3 at p = 7e-4 violates the distance bound; the first level
        // must make things worse, while d0 = 5 improves them.
        let bad = m.magic_error_curve(7e-4, 3, None, 1).unwrap();
        assert!(bad[1].1 > bad[0].1);
        let good = m.magic_error_curve(7e-4, 5, None, 1).unwrap();
        assert!(good[1].1 < good[0].1);
    }

    #[test]
    fn ideal_threshold_value() {
        let m = model();
        assert!((m.ideal_threshold() - 0.16903).abs() < 1e-4);
    }

    #[test]
    fn threshold_feasibility_examples() {
        let m = model();
        assert!(m.distillation_threshold(7e-4, 5).unwrap().feasible);
        assert!(!m.distillation_threshold(0.007, 5).unwrap().feasible);
        assert!(!m.distillation_threshold(0.007, 9).unwrap().feasible);
    }

    #[test]
    fn min_base_distance_examples() {
        let m = model();
        let r = m.min_base_distance(7e-4, 7e-4).unwrap();
        assert!((r.bound - 4.77).abs() < 0.01, "bound {}", r.bound);
        assert_eq!(r.d0, 5);
        let r = m.min_base_distance(1e-5, 1e-5).unwrap();
        assert_eq!(r.d0, 3);
        assert!(m.min_base_distance(0.17, 1e-4).is_err());
    }

    #[test]
    fn threshold_and_min_distance_agree_on_a_grid() {
        let m = model();
        for &p in &[1e-6, 1e-5, 1e-4, 7e-4, 2e-3, 5e-3] {
            let min_d0 = m.min_base_distance(p, p).map(|r| r.d0);
            for &d0 in &[3u64, 5, 7, 9] {
                let feasible = m.distillation_threshold(p, d0).unwrap().feasible;
                let bound_ok = matches!(min_d0, Ok(b) if b <= d0);
                assert_eq!(feasible, bound_ok, "p={p}, d0={d0}");
            }
        }
    }

    #[test]
    fn amplification_tangency_point() {
        let m = model();
        let p_star = m.amplification_tangency();
        assert!(rel_err(p_star, 7.2256e-8) < 0.02, "p* = {p_star}");
        // At tangency the root coincides with the stationary point 33.75.
        let x_star = (1.0 / (3.0 * 450.0 * p_star)).sqrt() - 67.5;
        assert!((x_star - 33.75).abs() < 0.05, "stationary point {x_star}");
    }

    #[test]
    fn small_p_fixed_point_coefficient() {
        let m = model();
        let p = 1e-12;
        let fp = m.amplification_analysis(p, 7, 1.0).fixed_point.unwrap();
        assert!(rel_err(fp / p, 1.384e8) < 0.01, "coefficient {}", fp / p);
    }

    #[test]
    fn d_out_ratio_hand_value() {
        let m = model();
        let a = m.amplification_analysis(7e-4, 7, 100.0);
        assert_eq!(a.regime, AmplificationRegime::Growing);
        let ratio = a.d_out_ratio.unwrap();
        assert!((ratio - 0.500).abs() < 0.005, "ratio {ratio}");
    }

    #[test]
    fn regime_boundaries() {
        let m = model();
        assert_eq!(
            m.amplification_analysis(1e-8, 7, 1.0).regime,
            AmplificationRegime::Bounded
        );
        assert_eq!(
            m.amplification_analysis(7e-4, 7, 1.0).regime,
            AmplificationRegime::Growing
        );
        assert_eq!(
            m.amplification_analysis(0.01, 7, 1.0).regime,
            AmplificationRegime::Ineffective
        );
    }

    #[test]
    fn omega_recursion_matches_ratio_identity() {
        // 35 (p/p_T) 0.3^2 = 450 p makes the recursion and the curve ratio
        // agree exactly for odd d. Deep levels overflow linear f64, so the
        // step is compared in log space, where an absolute log difference is
        // a relative difference of Omega.
        let m = model();
        for &d0 in &[3u64, 5, 7] {
            for &p in &[1e-8, 1e-5, 7e-4] {
                let curve = m.log_error_curve(p, d0, 4).unwrap();
                for w in curve.windows(2) {
                    let (d, ln_pl, ln_pm) = w[0];
                    let (d3, ln_pl3, ln_pm3) = w[1];
                    assert_eq!(d3, 3 * d);
                    let ln_omega = ln_pm - ln_pl;
                    let ln_omega3 = ln_pm3 - ln_pl3;
                    let ln_rec = (450.0 * p).ln() + 3.0 * log_sum_exp(ln_omega, 67.5f64.ln());
                    assert!(
                        (ln_omega3 - ln_rec).abs() < 1e-12,
                        "d0={d0} p={p} d={d}: {ln_omega3} vs {ln_rec}"
                    );
                }
            }
        }
        // Linear-space spot check where everything is representable.
        let omega = m.omega_curve(7e-4, 5, 2).unwrap();
        let rec = 450.0 * 7e-4 * (omega[1].1 + 67.5).powi(3);
        assert!(rel_err(omega[2].1, rec) < 1e-12);
        let linear = m.magic_error_curve(7e-4, 5, None, 2).unwrap();
        let ratio = linear[2].1 / m.p_l(7e-4, 45).unwrap();
        assert!(rel_err(omega[2].1, ratio) < 1e-12);
    }

    #[test]
    fn omega_converges_in_bounded_regime() {
        // Iterating the amplification map from below approaches the fixed
        // point when one exists.
        let m = model();
        let p = 1e-8;
        let fp = m.amplification_analysis(p, 7, 1.0).fixed_point.unwrap();
        let mut omega = 0.0f64;
        for _ in 0..64 {
            omega = 450.0 * p * (omega + 67.5).powi(3);
        }
        assert!(
            rel_err(omega, fp) < 1e-9,
            "Omega -> {omega}, fixed point {fp}"
        );
    }

    #[test]
    fn omega_respects_growing_lower_bound() {
        let m = model();
        let p = 7e-4;
        let omega = m.omega_curve(p, 5, 4).unwrap();
        let (d_ref, om_ref) = omega[1];
        let s = (450.0 * p).sqrt();
        for &(d, om) in &omega[1..] {
            let bound = (s * om_ref).powf(d as f64 / d_ref as f64) / s;
            assert!(
                om >= bound * (1.0 - 1e-9),
                "Omega({d}) = {om} < bound {bound}"
            );
        }
    }

    #[test]
    fn expected_time_level_factor_by_hand() {
        let m = model();
        let curve = m.expected_time_curve(7e-4, 5, 1).unwrap();
        let t = curve[1];
        assert_eq!(t.d, 15);
        let factor = 1.0 / (1.0 - 15.0 * 0.02095);
        assert!(rel_err(t.expected, 5.0 * 15.0 * factor) < 1e-3);
        assert_eq!(t.nominal, 225.0);
    }

    #[test]
    fn expected_time_approaches_nominal_partial_sum_at_tiny_p() {
        let m = model();
        let curve = m.expected_time_curve(1e-9, 3, 6).unwrap();
        for point in &curve[1..] {
            let m_levels = (point.d as f64 / 3.0).log(3.0).round() as i32;
            let partial = 15.0 * point.d as f64 * (1.0 - (2.0f64 / 3.0).powi(m_levels));
            assert!(rel_err(point.expected, partial) < 1e-3);
            assert!(point.expected <= 15.0 * point.d as f64);
            assert!(point.expected >= 5.0 * point.d as f64);
        }
    }

    #[test]
    fn saturated_repetition_factor_is_reported() {
        let m = model();
        // Near the surface-code threshold the repetition factor blows up.
        let err = m.expected_time_curve(6.9e-3, 3, 3);
        assert!(matches!(err, Err(ModelError::TimeSaturated { .. })));
    }

    #[test]
    fn multi_level_time_examples() {
        assert_eq!(multi_level_time(7.0, 2.0, Levels::Finite(1)), 7.0);
        let d = 11.0;
        assert_eq!(multi_level_time(5.0 * d, 0.0, Levels::Infinite), 15.0 * d);
        assert_eq!(multi_level_time(7.0, 2.0, Levels::Infinite), 25.0);
    }

    #[test]
    fn cost_table_rows() {
        let table = cost_table(10, 1, 1);
        let t_prep = table.iter().find(|e| e.gate == "|T> preparation").unwrap();
        assert_eq!(t_prep.space, 300.0);
        assert_eq!(t_prep.time_expected, 150.0);
        assert_eq!(t_prep.spacetime(), 45.0 * 1000.0);
        let ccz_prep = table
            .iter()
            .find(|e| e.gate == "|CCZ> preparation")
            .unwrap();
        assert_eq!(ccz_prep.spacetime(), 63.0 * 1000.0);
        let s = table.iter().find(|e| e.gate == "S").unwrap();
        assert_eq!((s.space, s.time_expected), (200.0, 20.0));
        let summary = spacetime_summary(10);
        assert_eq!(summary.t_infinite, 45_000.0);
        assert_eq!(summary.ccz, 63_000.0);
    }
}
