//! Square-surrogate AUC as a per-sample saddle-point objective.
//!
//! For one label with pseudo-positive scores `s+` and pseudo-negative scores
//! `s-`, the mean pairwise square loss splits exactly into
//!
//! ```text
//! mean (margin - s+ + s-)^2 = A + B + C
//! A = mean (s+ - a)^2,  B = mean (s- - b)^2,  C = (margin - a + b)^2
//! ```
//!
//! with `a`, `b` the class means, and `C = max_alpha 2 alpha (margin - a + b) - alpha^2`.
//! Pooling both sides with mixing fraction `p` gives the per-sample function
//! `H` of [`h_sample`], whose mean over the pool at the optimal `(a, b, alpha)`
//! is `p (1 - p) (A + B + C)`. Minimizing over the scorer and `(a, b)` while
//! maximizing over `alpha` needs one pass over the data, not all pairs.

use serde::{Deserialize, Serialize};

use crate::bagdata::Label;
use crate::{Error, Result};

/// Auxiliary saddle-point variables, one `(a, b, alpha)` triple per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxState {
    a: Vec<f64>,
    b: Vec<f64>,
    alpha: Vec<f64>,
    margin: f64,
    /// Restrict `alpha >= 0` (margin mode).
    constrained: bool,
    steps: u64,
}

impl MinMaxState {
    /// `a = b = 0` with `alpha` at its closed-form optimum.
    pub fn new(labels: usize, margin: f64, constrained: bool) -> Result<Self> {
        if labels == 0 {
            return Err(Error::InvalidParameter("need at least one label".into()));
        }
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "margin {margin} must be > 0"
            )));
        }
        let alpha = optimal_alpha(0.0, 0.0, margin, constrained);
        Ok(MinMaxState {
            a: vec![0.0; labels],
            b: vec![0.0; labels],
            alpha: vec![alpha; labels],
            margin,
            constrained,
            steps: 0,
        })
    }

    pub(crate) fn from_parts(
        a: Vec<f64>,
        b: Vec<f64>,
        alpha: Vec<f64>,
        margin: f64,
        constrained: bool,
        steps: u64,
    ) -> Result<Self> {
        if a.len() != b.len() || a.len() != alpha.len() || a.is_empty() {
            return Err(Error::InvalidParameter(
                "state arrays differ in length".into(),
            ));
        }
        if a.iter().chain(&b).chain(&alpha).any(|v| !v.is_finite()) || !margin.is_finite() {
            return Err(Error::InvalidParameter("non-finite state".into()));
        }
        if constrained && alpha.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter(
                "alpha must be >= 0 in margin mode".into(),
            ));
        }
        Ok(MinMaxState {
            a,
            b,
            alpha,
            margin,
            constrained,
            steps,
        })
    }

    pub fn labels(&self) -> usize {
        self.a.len()
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn constrained(&self) -> bool {
        self.constrained
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Sets label `k`'s variables (1-based), clamping `alpha` in margin mode.
    pub fn set_label(&mut self, k: usize, a: f64, b: f64, alpha: f64) {
        self.a[k - 1] = a;
        self.b[k - 1] = b;
        self.alpha[k - 1] = if self.constrained {
            alpha.max(0.0)
        } else {
            alpha
        };
    }

    /// One primal-dual step for label `k`: descend on `(a, b)`, ascend on `alpha`.
    pub fn step_label(&mut self, k: usize, grad: &HGradients, lr_primal: f64, lr_dual: f64) {
        let i = k - 1;
        self.a[i] -= lr_primal * grad.d_a;
        self.b[i] -= lr_primal * grad.d_b;
        self.alpha[i] += lr_dual * grad.d_alpha;
        if self.constrained {
            self.alpha[i] = self.alpha[i].max(0.0);
        }
    }

    pub fn tick(&mut self) {
        self.steps += 1;
    }

    /// Moves every `alpha` to its closed-form optimum given the current `(a, b)`.
    pub fn reset_alpha(&mut self) {
        for i in 0..self.a.len() {
            self.alpha[i] = optimal_alpha(self.a[i], self.b[i], self.margin, self.constrained);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.alpha)
            .all(|v| v.is_finite())
    }
}

/// What `H` needs to know about one pooled sample for label `label`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerSampleContext {
    /// 1-based label index.
    pub label: usize,
    /// Surrogate bit: positive iff the sample's bag id is `<= label`.
    pub y: Label,
    /// Mixing fraction of the label, in `(0, 1)`.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub a: f64,
    pub b: f64,
    pub a_term: f64,
    pub b_term: f64,
    pub c_term: f64,
    pub total: f64,
}

pub fn decompose_square_loss(pos_scores: &[f64], neg_scores: &[f64]) -> Result<Decomposition> {
    decompose_with_margin(pos_scores, neg_scores, 1.0)
}

/// `A + B + C` with `margin` in place of 1; equals the pairwise mean of
/// `(margin - s+ + s-)^2`.
pub fn decompose_with_margin(
    pos_scores: &[f64],
    neg_scores: &[f64],
    margin: f64,
) -> Result<Decomposition> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::Empty("decomposition needs both sides"));
    }
    let a = mean(pos_scores);
    let b = mean(neg_scores);
    let a_term =
        pos_scores.iter().map(|s| (s - a) * (s - a)).sum::<f64>() / pos_scores.len() as f64;
    let b_term =
        neg_scores.iter().map(|s| (s - b) * (s - b)).sum::<f64>() / neg_scores.len() as f64;
    let c_term = (margin - a + b) * (margin - a + b);
    Ok(Decomposition {
        a,
        b,
        a_term,
        b_term,
        c_term,
        total: a_term + b_term + c_term,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Maximizer of `2 alpha (margin - a + b) - alpha^2`, over `alpha >= 0` when
/// `constrained`.
#[inline]
pub fn optimal_alpha(a: f64, b: f64, margin: f64, constrained: bool) -> f64 {
    let alpha = margin - a + b;
    if constrained {
        alpha.max(0.0)
    } else {
        alpha
    }
}

/// `H` with explicit auxiliaries.
#[inline]
pub fn h_value(ctx: &PerSampleContext, score: f64, a: f64, b: f64, alpha: f64, margin: f64) -> f64 {
    let p = ctx.p;
    let q = 1.0 - p;
    match ctx.y {
        Label::Positive => {
            q * (score - a) * (score - a) - p * q * alpha * alpha
                + 2.0 * alpha * (p * q * margin - q * score)
        }
        Label::Negative => {
            p * (score - b) * (score - b) - p * q * alpha * alpha
                + 2.0 * alpha * (p * q * margin + p * score)
        }
    }
}

/// Per-sample objective for label `ctx.label` under `state`.
pub fn h_sample(ctx: &PerSampleContext, score: f64, state: &MinMaxState) -> f64 {
    let i = ctx.label - 1;
    h_value(
        ctx,
        score,
        state.a[i],
        state.b[i],
        state.alpha[i],
        state.margin,
    )
}

/// Partial derivatives of `H`. The dual ascent direction is `+d_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HGradients {
    pub d_score: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub d_alpha: f64,
}

impl HGradients {
    pub fn add_scaled(&mut self, other: &HGradients, w: f64) {
        self.d_score += w * other.d_score;
        self.d_a += w * other.d_a;
        self.d_b += w * other.d_b;
        self.d_alpha += w * other.d_alpha;
    }
}

#[inline]
pub fn h_gradients_with(
    ctx: &PerSampleContext,
    score: f64,
    a: f64,
    b: f64,
    alpha: f64,
    margin: f64,
) -> HGradients {
    let p = ctx.p;
    let q = 1.0 - p;
    match ctx.y {
        Label::Positive => HGradients {
            d_score: 2.0 * q * (score - a) - 2.0 * alpha * q,
            d_a: -2.0 * q * (score - a),
            d_b: 0.0,
            d_alpha: -2.0 * p * q * alpha + 2.0 * (p * q * margin - q * score),
        },
        Label::Negative => HGradients {
            d_score: 2.0 * p * (score - b) + 2.0 * alpha * p,
            d_a: 0.0,
            d_b: -2.0 * p * (score - b),
            d_alpha: -2.0 * p * q * alpha + 2.0 * (p * q * margin + p * score),
        },
    }
}

pub fn h_gradients(ctx: &PerSampleContext, score: f64, state: &MinMaxState) -> HGradients {
    let i = ctx.label - 1;
    h_gradients_with(
        ctx,
        score,
        state.a[i],
        state.b[i],
        state.alpha[i],
        state.margin,
    )
}

/// Closed-form `(a, b, alpha)` for one label from its full score lists.
pub fn exact_label_vars(
    pos_scores: &[f64],
    neg_scores: &[f64],
    margin: f64,
    constrained: bool,
) -> Result<(f64, f64, f64)> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::Empty("label needs both pseudo-classes"));
    }
    let a = mean(pos_scores);
    let b = mean(neg_scores);
    Ok((a, b, optimal_alpha(a, b, margin, constrained)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairwise_mean(pos: &[f64], neg: &[f64], margin: f64) -> f64 {
        let mut t = 0.0;
        for x in pos {
            for y in neg {
                t += (margin - x + y).powi(2);
            }
        }
        t / (pos.len() * neg.len()) as f64
    }

    fn ctx(y: Label, p: f64) -> PerSampleContext {
        PerSampleContext { label: 1, y, p }
    }

    #[test]
    fn decomposition_small_case() {
        let d = decompose_square_loss(&[1.0, 0.0], &[0.0]).unwrap();
        assert_eq!(
            (d.a, d.a_term, d.b, d.b_term, d.c_term),
            (0.5, 0.25, 0.0, 0.0, 0.25)
        );
        assert_eq!(d.total, 0.5);
        assert_eq!(d.total, pairwise_mean(&[1.0, 0.0], &[0.0], 1.0));
    }

    #[test]
    fn decomposition_equal_singletons() {
        for c in [-3.0, 0.0, 0.25, 17.5] {
            assert!((decompose_square_loss(&[c], &[c]).unwrap().total - 1.0).abs() < 1e-12);
        }
        assert!(decompose_square_loss(&[], &[1.0]).is_err());
    }

    #[test]
    fn decomposition_matches_pairs_with_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let pos: Vec<f64> = (0..30).map(|_| rng.random_range(-2.0..2.0)).collect();
            let neg: Vec<f64> = (0..30).map(|_| rng.random_range(-2.0..2.0)).collect();
            let margin = rng.random_range(0.1..2.0);
            let d = decompose_with_margin(&pos, &neg, margin).unwrap();
            assert!((d.total - pairwise_mean(&pos, &neg, margin)).abs() < 1e-10);
        }
    }

    #[test]
    fn optimal_alpha_cases() {
        assert!((optimal_alpha(0.3, 0.1, 1.0, true) - 0.8).abs() < 1e-15);
        assert_eq!(optimal_alpha(1.5, 0.2, 1.0, true), 0.0);
        assert!((optimal_alpha(1.5, 0.2, 1.0, false) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn h_hand_evaluated() {
        // 0.5 * 0.3^2 - 0.25 * 0.4^2 + 2 * 0.4 * (0.25 - 0.5 * 0.5)
        let h = h_value(&ctx(Label::Positive, 0.5), 0.5, 0.2, 0.1, 0.4, 1.0);
        assert!((h - 0.005).abs() < 1e-15, "{h}");
        for p in [0.1, 0.5, 0.9] {
            assert_eq!(
                h_value(&ctx(Label::Positive, p), 0.7, 0.7, -3.0, 0.0, 1.0),
                0.0
            );
        }
    }

    #[test]
    fn state_lookup_matches_explicit() {
        let mut st = MinMaxState::new(3, 1.0, true).unwrap();
        st.set_label(2, 0.2, 0.1, 0.4);
        let c = PerSampleContext {
            label: 2,
            y: Label::Positive,
            p: 0.5,
        };
        assert_eq!(h_sample(&c, 0.5, &st), h_value(&c, 0.5, 0.2, 0.1, 0.4, 1.0));
        st.set_label(1, 0.0, 0.0, -1.0);
        assert_eq!(st.alpha()[0], 0.0);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = 1e-5;
        for _ in 0..100 {
            let y = Label::from_positive(rng.random::<bool>());
            let c = ctx(y, rng.random_range(0.05..0.95));
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let margin = rng.random_range(0.2..2.0);
            let f = |v: [f64; 4]| h_value(&c, v[0], v[1], v[2], v[3], margin);
            let g = h_gradients_with(&c, v[0], v[1], v[2], v[3], margin);
            let analytic = [g.d_score, g.d_a, g.d_b, g.d_alpha];
            for i in 0..4 {
                let mut up = v;
                let mut dn = v;
                up[i] += h;
                dn[i] -= h;
                let fd = (f(up) - f(dn)) / (2.0 * h);
                let denom = analytic[i].abs().max(fd.abs()).max(1e-6);
                assert!(
                    (analytic[i] - fd).abs() / denom < 1e-5,
                    "i={i} {} vs {fd}",
                    analytic[i]
                );
            }
            if y.is_positive() {
                assert_eq!(g.d_b, 0.0);
            } else {
                assert_eq!(g.d_a, 0.0);
            }
        }
    }

    fn pooled(rng: &mut ChaCha8Rng, n_pos: usize, n_neg: usize) -> (Vec<f64>, Vec<f64>, f64) {
        let pos: Vec<f64> = (0..n_pos).map(|_| rng.random_range(-1.0..2.0)).collect();
        let neg: Vec<f64> = (0..n_neg).map(|_| rng.random_range(-2.0..1.0)).collect();
        let p = n_pos as f64 / (n_pos + n_neg) as f64;
        (pos, neg, p)
    }

    #[test]
    fn mean_h_at_optimum_is_scaled_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..40 {
            let (pos, neg, p) = pooled(&mut rng, 1 + trial % 7, 1 + trial % 5 * 3);
            let margin = rng.random_range(0.3..1.5);
            for constrained in [false, true] {
                let (a, b, alpha) = exact_label_vars(&pos, &neg, margin, constrained).unwrap();
                let sum: f64 = pos
                    .iter()
                    .map(|&s| h_value(&ctx(Label::Positive, p), s, a, b, alpha, margin))
                    .chain(
                        neg.iter()
                            .map(|&s| h_value(&ctx(Label::Negative, p), s, a, b, alpha, margin)),
                    )
                    .sum();
                let mean_h = sum / (pos.len() + neg.len()) as f64;
                let d = decompose_with_margin(&pos, &neg, margin).unwrap();
                let c = if constrained {
                    (margin - a + b).max(0.0).powi(2)
                } else {
                    d.c_term
                };
                let expect = p * (1.0 - p) * (d.a_term + d.b_term + c);
                assert!((mean_h - expect).abs() < 1e-8, "{mean_h} vs {expect}");
            }
        }
    }

    #[test]
    fn dual_gradient_vanishes_at_closed_form_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (pos, neg, p) = pooled(&mut rng, 13, 29);
            let (a, b, alpha) = exact_label_vars(&pos, &neg, 1.0, false).unwrap();
            let total: f64 = pos
                .iter()
                .map(|&s| h_gradients_with(&ctx(Label::Positive, p), s, a, b, alpha, 1.0).d_alpha)
                .chain(neg.iter().map(|&s| {
                    h_gradients_with(&ctx(Label::Negative, p), s, a, b, alpha, 1.0).d_alpha
                }))
                .sum();
            assert!((total / 42.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn curvature_signs() {
        // convex in a and b, concave in alpha
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let e = 1e-3;
        for _ in 0..100 {
            let y = Label::from_positive(rng.random::<bool>());
            let c = ctx(y, rng.random_range(0.05..0.95));
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let f = |v: [f64; 4]| h_value(&c, v[0], v[1], v[2], v[3], 1.0);
            let second = |i: usize| {
                let (mut up, mut dn) = (v, v);
                up[i] += e;
                dn[i] -= e;
                (f(up) - 2.0 * f(v) + f(dn)) / (e * e)
            };
            assert!(second(1) >= -1e-6);
            assert!(second(2) >= -1e-6);
            assert!(second(3) < 0.0);
        }
    }

    #[test]
    fn score_gradient_matches_pairwise_gradient() {
        // d(pairwise risk)/ds = d(mean H)/ds / (p (1 - p)) at the exact (a, b, alpha)
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..30 {
            let (pos, neg, p) = pooled(&mut rng, 7, 11);
            let n = (pos.len() + neg.len()) as f64;
            let (a, b, alpha) = exact_label_vars(&pos, &neg, 1.0, false).unwrap();
            let pairs = (pos.len() * neg.len()) as f64;
            for (idx, &s) in pos.iter().enumerate() {
                let pairwise: f64 = neg.iter().map(|&t| -2.0 * (1.0 - s + t)).sum::<f64>() / pairs;
                let via_h = h_gradients_with(&ctx(Label::Positive, p), s, a, b, alpha, 1.0).d_score
                    / n
                    / (p * (1.0 - p));
                assert!((pairwise - via_h).abs() < 1e-8, "pos {idx}");
            }
            for &t in &neg {
                let pairwise: f64 = pos.iter().map(|&s| 2.0 * (1.0 - s + t)).sum::<f64>() / pairs;
                let via_h = h_gradients_with(&ctx(Label::Negative, p), t, a, b, alpha, 1.0).d_score
                    / n
                    / (p * (1.0 - p));
                assert!((pairwise - via_h).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn invalid_state_rejected() {
        assert!(MinMaxState::new(0, 1.0, true).is_err());
        assert!(MinMaxState::new(2, 0.0, true).is_err());
        assert!(MinMaxState::from_parts(vec![0.0], vec![0.0], vec![-1.0], 1.0, true, 0).is_err());
    }
}
