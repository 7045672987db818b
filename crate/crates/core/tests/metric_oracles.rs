//! Independent oracles for the survival metrics and fit gradients.

use rand::Rng;
use radiomics_core::linalg::Matrix;
use radiomics_core::logistic::logistic_loglik;
use radiomics_core::rng::SeedStream;
use radiomics_core::stats::delong_compare;
use radiomics_core::survival::{
    concordance_index, cox_partial_likelihood, kaplan_meier, logrank, OutcomeVector,
};

#[test]
fn concordance_matches_exhaustive_pair_enumeration() {
    for seed in 0..50u64 {
        let mut rng = SeedStream::from_master(seed).child("ci", 0).rng();
        let n = 12;
        // coarse grids force ties in both scores and times
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect();
        let times: Vec<f64> = (0..n).map(|_| rng.gen_range(1..7) as f64).collect();
        let events: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < 0.6)).collect();
        let outcome = OutcomeVector::new(events.clone(), times.clone()).unwrap();

        let mut permissible = 0.0;
        let mut concordant = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j || !(times[i] < times[j]) || events[i] != 1 {
                    continue;
                }
                permissible += 1.0;
                if scores[i] > scores[j] {
                    concordant += 1.0;
                } else if scores[i] == scores[j] {
                    concordant += 0.5;
                }
            }
        }
        match concordance_index(&scores, &outcome) {
            Ok(ci) => {
                assert!(permissible > 0.0);
                assert_eq!(ci, concordant / permissible, "seed {seed}");
            }
            Err(_) => assert_eq!(permissible, 0.0, "seed {seed}"),
        }
    }
}

#[test]
fn km_and_logrank_match_hand_computed_six_patient_example() {
    // pooled: times 6,7,9,10,11,13 with events 1,1,0,1,1,0
    let pooled = OutcomeVector::new(
        vec![1, 1, 0, 1, 1, 0],
        vec![6.0, 7.0, 9.0, 10.0, 11.0, 13.0],
    )
    .unwrap();
    let km = kaplan_meier(&pooled);
    assert_eq!(km.event_times, vec![6.0, 7.0, 10.0, 11.0]);
    let expected = [5.0 / 6.0, 2.0 / 3.0, 4.0 / 9.0, 2.0 / 9.0];
    for (got, want) in km.survival_probs.iter().zip(expected) {
        assert!((got - want).abs() < 1e-10);
    }
    assert_eq!(km.at_risk_counts, vec![6, 5, 3, 2]);

    // group A {6e, 10e, 13c} vs B {7e, 9c, 11e}: O_A = 2, E_A = 31/15,
    // variance 433/450, so the statistic is (1/15)^2 / (433/450) = 2/433
    let a = OutcomeVector::new(vec![1, 1, 0], vec![6.0, 10.0, 13.0]).unwrap();
    let b = OutcomeVector::new(vec![1, 0, 1], vec![7.0, 9.0, 11.0]).unwrap();
    let (chi2, p) = logrank(&a, &b);
    assert!((chi2 - 2.0 / 433.0).abs() < 1e-10, "chi2 {chi2}");
    assert!(p > 0.9 && p < 1.0);
}

#[test]
fn delong_on_identical_scores_returns_p_one() {
    let scores = vec![0.1, 0.9, 0.4, 0.6, 0.3, 0.8];
    let labels = vec![0, 1, 0, 1, 0, 1];
    let r = delong_compare(&scores, &scores, &labels).unwrap();
    assert_eq!(r.p, 1.0);
    assert_eq!(r.auc_a, r.auc_b);
}

#[test]
fn logistic_gradient_matches_finite_differences_at_10_random_points() {
    let mut rng = SeedStream::from_master(17).child("lgrad", 0).rng();
    let n = 40;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
        .collect();
    let x = Matrix::from_rows(&rows);
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
    for _ in 0..10 {
        let beta: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = logistic_loglik(&x, &labels, &beta, 0.0);
        let h = 1e-6;
        for j in 0..beta.len() {
            let mut bp = beta.clone();
            let mut bm = beta.clone();
            bp[j] += h;
            bm[j] -= h;
            let (lp, _) = logistic_loglik(&x, &labels, &bp, 0.0);
            let (lm, _) = logistic_loglik(&x, &labels, &bm, 0.0);
            let fd = (lp - lm) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / grad[j].abs().max(1.0);
            assert!(rel < 1e-6, "logistic grad[{j}] {} vs fd {fd}", grad[j]);
        }
    }
}

#[test]
fn cox_gradient_matches_finite_differences_at_10_random_points() {
    let mut rng = SeedStream::from_master(18).child("cgrad", 0).rng();
    let n = 30;
    let rows: Vec<Vec<f64>> =
        (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let x = Matrix::from_rows(&rows);
    let events: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < 0.6)).collect();
    // tied times exercise the Breslow terms
    let times: Vec<f64> = (0..n).map(|_| rng.gen_range(1..10) as f64).collect();
    let outcome = OutcomeVector::new(events, times).unwrap();
    for _ in 0..10 {
        let beta: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad, _) = cox_partial_likelihood(&x, &outcome, &beta);
        let h = 1e-6;
        for j in 0..beta.len() {
            let mut bp = beta.clone();
            let mut bm = beta.clone();
            bp[j] += h;
            bm[j] -= h;
            let (lp, _, _) = cox_partial_likelihood(&x, &outcome, &bp);
            let (lm, _, _) = cox_partial_likelihood(&x, &outcome, &bm);
            let fd = (lp - lm) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / grad[j].abs().max(1.0);
            assert!(rel < 1e-6, "cox grad[{j}] {} vs fd {fd}", grad[j]);
        }
    }
}

#[test]
fn cox_hessian_matches_gradient_finite_differences() {
    let mut rng = SeedStream::from_master(19).child("chess", 0).rng();
    let n = 25;
    let rows: Vec<Vec<f64>> =
        (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let x = Matrix::from_rows(&rows);
    let events: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < 0.7)).collect();
    let times: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..20.0)).collect();
    let outcome = OutcomeVector::new(events, times).unwrap();
    let beta = vec![0.4, -0.3];
    let (_, _, hess) = cox_partial_likelihood(&x, &outcome, &beta);
    let h = 1e-5;
    for j in 0..2 {
        let mut bp = beta.clone();
        let mut bm = beta.clone();
        bp[j] += h;
        bm[j] -= h;
        let (_, gp, _) = cox_partial_likelihood(&x, &outcome, &bp);
        let (_, gm, _) = cox_partial_likelihood(&x, &outcome, &bm);
        for a in 0..2 {
            // hessian as stored is the negative second derivative
            let fd = -(gp[a] - gm[a]) / (2.0 * h);
            assert!(
                (hess.get(a, j) - fd).abs() < 1e-5,
                "hessian ({a},{j}) {} vs fd {fd}",
                hess.get(a, j),
            );
        }
    }
}
