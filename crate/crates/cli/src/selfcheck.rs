//! Fast invariant suite behind `seqate selfcheck`.

use rand::Rng;

use seqate_core::confseq::{asymp_radius, psi_e, rho_opt, rho_opt_for_variance, HedgedConfig, HedgedState};
use seqate_core::estimator::{score, truncated_score};
use seqate_core::policy::{sample_arm, Policy};
use seqate_core::rng::{seeded_rng, RandomSource};
use seqate_core::sim::{Dgp, OracleModel};
use seqate_core::types::Arm;

/// Deliberate fault injected to confirm the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mutation {
    /// Shift every ψ_E value by 1e-3.
    Psi,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn score_bounds(n: usize) -> CheckResult {
    let mut rng = seeded_rng(0x5eed, 0);
    let mut violations = 0;
    for i in 0..n {
        let k = 2.0 + 98.0 * rng.random::<f64>();
        // Every 10th draw sits on the corners of the domain.
        let edge = i % 10 == 0;
        let unit =
            |rng: &mut RandomSource| if edge { f64::from(u8::from(rng.random::<bool>())) } else { rng.random() };
        let pi = 1.0 / k + unit(&mut rng) * (1.0 - 2.0 / k);
        let arm = if rng.random::<bool>() { Arm::Treatment } else { Arm::Control };
        let (y, f1, f0) = (unit(&mut rng), unit(&mut rng), unit(&mut rng));
        match truncated_score(y, arm, f1, f0, pi, k) {
            Ok(h) if h.abs() <= k => {}
            _ => violations += 1,
        }
    }
    check("score_bounds", violations == 0, format!("{violations} violations in {n} draws"))
}

fn psi_values(mutation: Option<Mutation>) -> CheckResult {
    // -ln(1 - λ) - λ evaluated in extended precision.
    let reference =
        [(0.0, 0.0), (0.1, 0.005_360_515_657_826_301), (0.5, 0.193_147_180_559_945_3), (0.9, 1.402_585_092_994_045_7)];
    let shift = if mutation == Some(Mutation::Psi) { 1e-3 } else { 0.0 };
    let worst =
        reference.iter().map(|&(l, want)| (psi_e(l).expect("λ in [0, 1)") + shift - want).abs()).fold(0.0, f64::max);
    check("psi_e_values", worst < 1e-12, format!("max abs error {worst:.3e}"))
}

/// Grid minimizer of the asymptotic radius over log-spaced `ρ`.
pub fn grid_rho(sigma2: f64, t: usize, alpha: f64) -> f64 {
    let n = 20_000;
    (0..=n)
        .map(|i| 10f64.powf(-4.0 + 6.0 * i as f64 / n as f64))
        .min_by(|a, b| asymp_radius(sigma2, t, *a, alpha).total_cmp(&asymp_radius(sigma2, t, *b, alpha)))
        .expect("non-empty grid")
}

fn rho_optimizer() -> CheckResult {
    let mut worst: f64 = 0.0;
    for &t in &[50, 100, 1000, 5000] {
        worst = worst.max((rho_opt(0.05, t) / grid_rho(1.0, t, 0.05) - 1.0).abs());
        for &s2 in &[0.05, 0.25] {
            worst = worst.max((rho_opt_for_variance(0.05, t, s2) / grid_rho(s2, t, 0.05) - 1.0).abs());
        }
    }
    check("rho_opt_vs_grid", worst < 0.05, format!("max relative error {worst:.4}"))
}

/// One-step capital ratios at the true effect, from an empty history.
fn martingale_step(n: usize) -> CheckResult {
    let dgp = Dgp::Bernoulli;
    let oracle = OracleModel::new(dgp).expect("bernoulli range");
    let policy = Policy::Adaptive { warmup: 0, vfloor: f64::MIN_POSITIVE };
    let theta = dgp.ate();
    let k = 4.0;
    let hedged = HedgedState::new(HedgedConfig { grid_points: 3, ..HedgedConfig::new(0.05) });
    let (bu, bd) = hedged.bets(hedged.next_lambda(), k, theta);
    let lambda_eb = 0.5;
    let psi = psi_e(lambda_eb).expect("λ in [0, 1)");
    let scale = 1.0 / (k + 1.0);

    let mut rng = seeded_rng(0xfa12, 0);
    let mut x = [0.0; 3];
    let (mut s, mut s2, mut e, mut e2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        dgp.draw_context(&mut rng, &mut x);
        let d = policy.decide(&x, 1, k, &oracle);
        let a = sample_arm(d.pi1, &mut rng);
        let y = dgp.draw_outcome(&mut rng, a, &x);
        let h = score(y, a, oracle.predict(&x, Arm::Treatment).f_hat, oracle.predict(&x, Arm::Control).f_hat, d.pi1)
            .expect("valid propensity");
        let r = 0.5 * (1.0 + bu * (h - theta)) + 0.5 * (1.0 - bd * (h - theta));
        s += r;
        s2 += r * r;
        let xi = h * scale;
        let q = (lambda_eb * (xi - theta * scale) - xi * xi * psi).exp();
        e += q;
        e2 += q * q;
    }
    let nf = n as f64;
    let (m, se) = (s / nf, ((s2 / nf - (s / nf).powi(2)) / nf).sqrt());
    let (me, see) = (e / nf, ((e2 / nf - (e / nf).powi(2)) / nf).sqrt());
    check(
        "martingale_one_step",
        (m - 1.0).abs() <= 3.0 * se && me <= 1.0 + 3.0 * see,
        format!("hedged mean {m:.5} (se {se:.1e}), bernstein mean {me:.5} (se {see:.1e})"),
    )
}

pub fn run(mutation: Option<Mutation>) -> Vec<CheckResult> {
    vec![score_bounds(100_000), psi_values(mutation), rho_optimizer(), martingale_step(20_000)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes_and_mutation_fails() {
        assert!(run(None).iter().all(|c| c.passed));
        let mutated = run(Some(Mutation::Psi));
        assert!(!mutated.iter().find(|c| c.name == "psi_e_values").unwrap().passed);
    }
}
