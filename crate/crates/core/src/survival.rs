//! Survival-analysis primitives: concordance index, Kaplan-Meier, log-rank
//! and Cox proportional hazards regression.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};

/// Binary outcome with right-censored time-to-event data.
///
/// `events[i] = 1` when the event was observed; a patient is censored exactly
/// when no event was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeVector {
    pub events: Vec<u8>,
    pub times_months: Vec<f64>,
}

impl OutcomeVector {
    pub fn new(events: Vec<u8>, times_months: Vec<f64>) -> Result<Self> {
        if events.len() != times_months.len() {
            return Err(Error::InvalidArgument("outcome: length mismatch".into()));
        }
        if events.iter().any(|&e| e > 1) {
            return Err(Error::InvalidArgument("outcome: events must be 0/1".into()));
        }
        if times_months.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument("outcome: times must be non-negative".into()));
        }
        Ok(Self { events, times_months })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn censored(&self) -> Vec<u8> {
        self.events.iter().map(|&e| 1 - e).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> OutcomeVector {
        OutcomeVector {
            events: idx.iter().map(|&i| self.events[i]).collect(),
            times_months: idx.iter().map(|&i| self.times_months[i]).collect(),
        }
    }
}

/// Harrell's concordance index.
///
/// A pair is permissible when the shorter observed time carries an event and
/// the times differ; score ties receive half credit.
pub fn concordance_index(scores: &[f64], outcome: &OutcomeVector) -> Result<f64> {
    if scores.len() != outcome.len() {
        return Err(Error::InvalidArgument("concordance: length mismatch".into()));
    }
    let mut permissible = 0.0;
    let mut concordant = 0.0;
    let n = scores.len();
    for i in 0..n {
        for j in i + 1..n {
            let (ti, tj) = (outcome.times_months[i], outcome.times_months[j]);
            if ti == tj {
                continue;
            }
            // the index with the shorter time must have an event
            let (short, long) = if ti < tj { (i, j) } else { (j, i) };
            if outcome.events[short] != 1 {
                continue;
            }
            permissible += 1.0;
            if scores[short] > scores[long] {
                concordant += 1.0;
            } else if scores[short] == scores[long] {
                concordant += 0.5;
            }
        }
    }
    if permissible == 0.0 {
        return Err(Error::NoPermissiblePairs);
    }
    Ok(concordant / permissible)
}

/// Product-limit survival curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub event_times: Vec<f64>,
    pub survival_probs: Vec<f64>,
    pub at_risk_counts: Vec<usize>,
}

/// Kaplan-Meier estimator with right censoring.
pub fn kaplan_meier(outcome: &OutcomeVector) -> KmCurve {
    let n = outcome.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        outcome.times_months[a].partial_cmp(&outcome.times_months[b]).expect("finite times")
    });
    let mut event_times = Vec::new();
    let mut survival_probs = Vec::new();
    let mut at_risk_counts = Vec::new();
    let mut s = 1.0;
    let mut i = 0;
    while i < n {
        let t = outcome.times_months[order[i]];
        let mut deaths = 0usize;
        let mut j = i;
        while j < n && outcome.times_months[order[j]] == t {
            if outcome.events[order[j]] == 1 {
                deaths += 1;
            }
            j += 1;
        }
        let at_risk = n - i;
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / at_risk as f64;
            event_times.push(t);
            survival_probs.push(s);
            at_risk_counts.push(at_risk);
        }
        i = j;
    }
    KmCurve { event_times, survival_probs, at_risk_counts }
}

/// Two-group log-rank test with hypergeometric variance; p from chi-square(1).
pub fn logrank(a: &OutcomeVector, b: &OutcomeVector) -> (f64, f64) {
    // pooled distinct event times
    let mut times: Vec<f64> = a
        .times_months
        .iter()
        .zip(&a.events)
        .chain(b.times_months.iter().zip(&b.events))
        .filter(|(_, &e)| e == 1)
        .map(|(&t, _)| t)
        .collect();
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    times.dedup();

    let at_risk = |o: &OutcomeVector, t: f64| o.times_months.iter().filter(|&&x| x >= t).count();
    let deaths_at = |o: &OutcomeVector, t: f64| {
        o.times_months
            .iter()
            .zip(&o.events)
            .filter(|(&x, &e)| x == t && e == 1)
            .count()
    };

    let mut observed_a = 0.0;
    let mut expected_a = 0.0;
    let mut variance = 0.0;
    for &t in &times {
        let n1 = at_risk(a, t) as f64;
        let n2 = at_risk(b, t) as f64;
        let nt = n1 + n2;
        if nt < 2.0 || n1 == 0.0 || n2 == 0.0 {
            // variance term vanishes when one group is exhausted
        }
        let d1 = deaths_at(a, t) as f64;
        let d2 = deaths_at(b, t) as f64;
        let dt = d1 + d2;
        if nt == 0.0 || dt == 0.0 {
            continue;
        }
        observed_a += d1;
        expected_a += dt * n1 / nt;
        if nt > 1.0 {
            variance += dt * (n1 / nt) * (n2 / nt) * (nt - dt) / (nt - 1.0);
        }
    }
    if variance <= 0.0 {
        return (0.0, 1.0);
    }
    let chi2 = (observed_a - expected_a).powi(2) / variance;
    let dist = ChiSquared::new(1.0).expect("chi-square(1)");
    (chi2, 1.0 - dist.cdf(chi2))
}

/// Fitted Cox proportional hazards model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub coefficients: Vec<f64>,
    pub linear_predictor: Vec<f64>,
    pub iterations: usize,
}

/// Negative log partial likelihood with Breslow tie handling, plus gradient
/// and Hessian at `beta`.
pub fn cox_partial_likelihood(
    x: &Matrix,
    outcome: &OutcomeVector,
    beta: &[f64],
) -> (f64, Vec<f64>, Matrix) {
    let n = x.rows;
    let p = x.cols;
    let mut order: Vec<usize> = (0..n).collect();
    // descending time so the risk set accumulates as we sweep
    order.sort_by(|&a, &b| {
        outcome.times_months[b].partial_cmp(&outcome.times_months[a]).expect("finite times")
    });

    let eta: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().zip(beta).map(|(&v, &b)| v * b).sum())
        .collect();
    let w: Vec<f64> = eta.iter().map(|&e| e.exp()).collect();

    let mut loglik = 0.0;
    let mut grad = vec![0.0; p];
    let mut hess = Matrix::zeros(p, p);

    let mut s0 = 0.0;
    let mut s1 = vec![0.0; p];
    let mut s2 = Matrix::zeros(p, p);

    let mut i = 0;
    while i < n {
        let t = outcome.times_months[order[i]];
        // add everyone at this time to the risk set
        let mut j = i;
        while j < n && outcome.times_months[order[j]] == t {
            let idx = order[j];
            s0 += w[idx];
            for a in 0..p {
                let xa = x.get(idx, a);
                s1[a] += w[idx] * xa;
                for b in 0..p {
                    let v = s2.get(a, b) + w[idx] * xa * x.get(idx, b);
                    s2.set(a, b, v);
                }
            }
            j += 1;
        }
        // Breslow: each event at this time contributes against the same sums
        for k in i..j {
            let idx = order[k];
            if outcome.events[idx] != 1 {
                continue;
            }
            loglik += eta[idx] - s0.ln();
            for a in 0..p {
                grad[a] += x.get(idx, a) - s1[a] / s0;
                for b in 0..p {
                    let v = hess.get(a, b) + s2.get(a, b) / s0 - (s1[a] / s0) * (s1[b] / s0);
                    hess.set(a, b, v);
                }
            }
        }
        i = j;
    }
    (loglik, grad, hess)
}

/// Newton maximization of the Cox partial likelihood (Breslow ties).
///
/// Converges when the gradient max-norm drops below 1e-8, at most 100
/// iterations; failures carry the last iterate in the error message.
pub fn cox_fit(x: &Matrix, outcome: &OutcomeVector) -> Result<CoxModel> {
    if x.rows != outcome.len() {
        return Err(Error::InvalidArgument("cox: row mismatch".into()));
    }
    let n_events = outcome.events.iter().filter(|&&e| e == 1).count();
    if n_events < 2 {
        return Err(Error::InvalidArgument("cox: need at least 2 events".into()));
    }
    for c in 0..x.cols {
        let col = x.column(c);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ConstantInput(format!("cox: constant feature column {c}")));
        }
    }
    let p = x.cols;
    let mut beta = vec![0.0; p];
    let (mut loglik, mut grad, mut hess) = cox_partial_likelihood(x, outcome, &beta);
    for iter in 0..100 {
        let gmax = grad.iter().fold(0.0f64, |m, &g| m.max(g.abs()));
        if gmax < 1e-8 {
            let eta: Vec<f64> = (0..x.rows)
                .map(|i| x.row(i).iter().zip(&beta).map(|(&v, &b)| v * b).sum())
                .collect();
            return Ok(CoxModel { coefficients: beta, linear_predictor: eta, iterations: iter });
        }
        let step = solve(hess.clone(), grad.clone()).map_err(|_| {
            Error::FitFailure(format!("cox: singular information matrix at beta {beta:?}"))
        })?;
        // step halving to keep the likelihood increasing
        let mut scale = 1.0;
        loop {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(&b, &s)| b + scale * s).collect();
            let (ll, g, h) = cox_partial_likelihood(x, outcome, &trial);
            if ll >= loglik - 1e-12 || scale < 1e-6 {
                beta = trial;
                loglik = ll;
                grad = g;
                hess = h;
                break;
            }
            scale /= 2.0;
        }
        if beta.iter().any(|&b| b.abs() > 50.0) {
            return Err(Error::FitFailure(format!(
                "cox: divergence (possible separation), last iterate {beta:?}"
            )));
        }
    }
    Err(Error::FitFailure(format!("cox: no convergence in 100 iterations, last iterate {beta:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concordance_single_pair() {
        let o = OutcomeVector::new(vec![1, 1], vec![5.0, 50.0]).unwrap();
        assert_eq!(concordance_index(&[0.9, 0.1], &o).unwrap(), 1.0);
        assert_eq!(concordance_index(&[0.1, 0.9], &o).unwrap(), 0.0);
    }

    #[test]
    fn concordance_no_permissible_pairs() {
        let o = OutcomeVector::new(vec![0, 0], vec![5.0, 50.0]).unwrap();
        assert!(matches!(concordance_index(&[0.9, 0.1], &o), Err(Error::NoPermissiblePairs)));
    }

    #[test]
    fn km_hand_example() {
        // events at t=1 and t=3, censored at t=2
        let o = OutcomeVector::new(vec![1, 0, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let km = kaplan_meier(&o);
        assert_eq!(km.event_times, vec![1.0, 3.0]);
        assert!((km.survival_probs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((km.survival_probs[1] - 0.0).abs() < 1e-12);
        assert_eq!(km.at_risk_counts, vec![3, 1]);
    }

    #[test]
    fn km_all_censored_is_flat() {
        let o = OutcomeVector::new(vec![0, 0, 0], vec![1.0, 2.0, 3.0]).unwrap();
        let km = kaplan_meier(&o);
        assert!(km.event_times.is_empty());
    }

    #[test]
    fn km_without_censoring_matches_empirical_survivor() {
        let times = vec![3.0, 1.0, 4.0, 1.5, 2.0, 5.5, 0.5, 2.5];
        let o = OutcomeVector::new(vec![1; 8], times.clone()).unwrap();
        let km = kaplan_meier(&o);
        for (t, s) in km.event_times.iter().zip(&km.survival_probs) {
            let frac_alive = times.iter().filter(|&&x| x > *t).count() as f64 / 8.0;
            assert!((s - frac_alive).abs() < 1e-12);
        }
    }

    #[test]
    fn logrank_identical_groups() {
        let o = OutcomeVector::new(vec![1, 0, 1, 0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (chi2, p) = logrank(&o, &o.clone());
        assert!(chi2 < 1e-12);
        assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logrank_is_symmetric() {
        let a = OutcomeVector::new(vec![1, 1, 0], vec![1.0, 3.0, 6.0]).unwrap();
        let b = OutcomeVector::new(vec![1, 0, 1], vec![2.0, 4.0, 5.0]).unwrap();
        let (c1, p1) = logrank(&a, &b);
        let (c2, p2) = logrank(&b, &a);
        assert!((c1 - c2).abs() < 1e-12);
        assert!((p1 - p2).abs() < 1e-12);
    }

    #[test]
    fn logrank_no_events_gives_p_one() {
        let a = OutcomeVector::new(vec![0, 0], vec![1.0, 2.0]).unwrap();
        let b = OutcomeVector::new(vec![0, 0], vec![3.0, 4.0]).unwrap();
        assert_eq!(logrank(&a, &b), (0.0, 1.0));
    }

    #[test]
    fn cox_gradient_vanishes_at_optimum() {
        // synthetic: binary covariate, carriers fail earlier
        let x = Matrix::from_rows(&[
            vec![1.0],
            vec![1.0],
            vec![1.0],
            vec![0.0],
            vec![0.0],
            vec![0.0],
        ]);
        let o =
            OutcomeVector::new(vec![1, 1, 1, 1, 1, 0], vec![1.0, 2.0, 3.0, 8.0, 9.0, 10.0]).unwrap();
        let model = cox_fit(&x, &o).unwrap();
        let (_, grad, _) = cox_partial_likelihood(&x, &o, &model.coefficients);
        assert!(grad.iter().all(|g| g.abs() < 1e-8));
        assert!(model.coefficients[0] > 0.0);
    }

    #[test]
    fn cox_matches_grid_search_oracle_1d() {
        let x = Matrix::from_rows(&[
            vec![1.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
        ]);
        let o = OutcomeVector::new(
            vec![1, 1, 1, 1, 1, 1, 0, 0],
            vec![1.0, 5.0, 2.0, 6.0, 3.0, 7.0, 9.0, 10.0],
        )
        .unwrap();
        let model = cox_fit(&x, &o).unwrap();
        // brute-force the 1-D partial likelihood maximum
        let mut best_beta = 0.0;
        let mut best_ll = f64::MIN;
        let mut b = -4.0;
        while b <= 4.0 {
            let (ll, _, _) = cox_partial_likelihood(&x, &o, &[b]);
            if ll > best_ll {
                best_ll = ll;
                best_beta = b;
            }
            b += 1e-4;
        }
        assert!(
            (model.coefficients[0] - best_beta).abs() < 1e-3,
            "newton {} vs grid {}",
            model.coefficients[0],
            best_beta
        );
    }
}
