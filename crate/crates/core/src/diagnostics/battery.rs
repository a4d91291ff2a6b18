//! Randomized check of the pointwise inequalities the analysis rests on.

use crate::material::{h_gamma, DevTensor2, MaterialLaws, SymTensor2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const BATTERY_GAMMAS: [f64; 3] = [1.0, 10.0, 1e3];

/// Counts for one inequality. `worst` is the smallest normalized slack
/// `(rhs − lhs)/scale` seen; negative means a violation.
#[derive(Clone, Debug, PartialEq)]
pub struct Tally {
    pub name: &'static str,
    pub statement: &'static str,
    pub checked: usize,
    pub violations: usize,
    pub worst: f64,
}

impl Tally {
    fn new(name: &'static str, statement: &'static str) -> Tally {
        Tally {
            name,
            statement,
            checked: 0,
            violations: 0,
            worst: f64::INFINITY,
        }
    }

    /// Record `lhs ≤ rhs`, allowing roundoff of a few ulps of `scale`.
    fn le(&mut self, lhs: f64, rhs: f64, scale: f64) {
        let scale = scale.max(f64::MIN_POSITIVE);
        let slack = (rhs - lhs) / scale;
        self.checked += 1;
        self.worst = self.worst.min(slack);
        if !(slack >= -64.0 * f64::EPSILON) {
            self.violations += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryReport {
    pub draws: usize,
    pub tallies: Vec<Tally>,
}

impl BatteryReport {
    pub fn total_violations(&self) -> usize {
        self.tallies.iter().map(|t| t.violations).sum()
    }
}

fn dev_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> DevTensor2 {
    let r = radius * rng.gen::<f64>();
    let a = 2.0 * PI * rng.gen::<f64>();
    // components in the orthonormal basis: |Q| = r
    DevTensor2::new(r * a.cos() / 2f64.sqrt(), r * a.sin() / 2f64.sqrt())
}

fn sym_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> SymTensor2 {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            let s = radius * rng.gen::<f64>() / n2.sqrt().max(1e-300);
            return SymTensor2::from_ortho(&nalgebra::Vector3::new(v[0] * s, v[1] * s, v[2] * s));
        }
    }
}

/// Second point: half the time a small perturbation of the first, so the
/// local constants are exercised as well as the global ones.
fn partner_dev(rng: &mut ChaCha8Rng, q: &DevTensor2, radius: f64) -> DevTensor2 {
    if rng.gen_bool(0.5) {
        dev_in_ball(rng, radius)
    } else {
        let r = 10f64.powf(rng.gen_range(-6.0..0.0));
        *q + dev_in_ball(rng, r)
    }
}

fn partner_sym(rng: &mut ChaCha8Rng, e: &SymTensor2, radius: f64) -> SymTensor2 {
    if rng.gen_bool(0.5) {
        sym_in_ball(rng, radius)
    } else {
        let r = 10f64.powf(rng.gen_range(-6.0..0.0));
        *e + sym_in_ball(rng, r)
    }
}

/// `draws` random `(z, γ, Q₁, Q₂, E₁, E₂)` samples with `z ∈ [−½, 3/2]`,
/// `γ ∈ {1, 10, 10³}` and `|Q|, |E| ≤ 10`.
pub fn run_battery(laws: &MaterialLaws, draws: usize, seed: u64) -> BatteryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h1 = Tally::new("h1", "0 <= |Q| - h_g(Q) <= 1/g");
    let mut h2 = Tally::new("h2", "|h_g(Q1) - h_g(Q2)| <= |Q1 - Q2|");
    let mut h3 = Tally::new("h3", "|grad h_g(Q1) - grad h_g(Q2)| <= 2g|Q1 - Q2|");
    let mut f_mono = Tally::new("F-monotone", "(F(Q1)-F(Q2)).(Q1-Q2) >= (2 a_mu + a_h)|Q1-Q2|^2");
    let mut b_lip = Tally::new("b-lipschitz", "|b(E1) - b(E2)| <= c1|E1 - E2|");
    let mut b_mono = Tally::new("b-monotone", "(b(E1)-b(E2)).(E1-E2) >= c2|E1-E2|^2");
    let mut f_inv = Tally::new("Finv-lipschitz", "|Finv(R1) - Finv(R2)| <= |R1 - R2|/(2 a_mu + a_h)");
    let c_one = laws.flux_monotonicity();
    let c1 = laws.reduced_flux_lipschitz();
    let c2 = laws.reduced_flux_monotonicity();
    let radius = 10.0;
    for _ in 0..draws {
        let z = rng.gen_range(-0.5..1.5);
        let gamma = BATTERY_GAMMAS[rng.gen_range(0..BATTERY_GAMMAS.len())];
        let vals = laws.at(z);
        let q1 = dev_in_ball(&mut rng, radius);
        let q2 = partner_dev(&mut rng, &q1, radius);
        let (g1, g2) = (h_gamma(gamma, &q1), h_gamma(gamma, &q2));
        let dq = (q1 - q2).norm();

        let gap = q1.norm() - g1.value;
        h1.le(0.0, gap, 1.0 + q1.norm());
        h1.le(gap, 1.0 / gamma, 1.0 + q1.norm());
        h2.le((g1.value - g2.value).abs(), dq, q1.norm() + q2.norm());
        h3.le((g1.grad - g2.grad).norm(), 2.0 * gamma * dq, 1.0);

        let (f1, f2) = (vals.flux_f(gamma, &q1), vals.flux_f(gamma, &q2));
        f_mono.le(c_one * dq * dq, (f1 - f2).dot(&(q1 - q2)), (f1 - f2).norm() * dq);

        let r1 = dev_in_ball(&mut rng, radius);
        let r2 = partner_dev(&mut rng, &r1, radius);
        let dr = (r1 - r2).norm();
        let (p1, p2) = (vals.flux_f_inverse(gamma, &r1), vals.flux_f_inverse(gamma, &r2));
        // the root finder is accurate to ~8 eps of |R|, not of |R1 − R2|
        f_inv.le((p1 - p2).norm(), dr / c_one, (p1.norm() + p2.norm()) * 1e2);

        let e1 = sym_in_ball(&mut rng, radius);
        let e2 = partner_sym(&mut rng, &e1, radius);
        let de = (e1 - e2).norm();
        let (b1, b2) = (vals.reduced_flux(gamma, &e1).stress, vals.reduced_flux(gamma, &e2).stress);
        let db = b1 - b2;
        let scale = (b1.norm() + b2.norm()) * 1e2;
        b_lip.le(db.norm(), c1 * de, scale);
        b_mono.le(c2 * de * de, db.dot(&(e1 - e2)), scale * de);
    }
    BatteryReport {
        draws,
        tallies: vec![h1, h2, h3, f_mono, b_lip, b_mono, f_inv],
    }
}
