//! Discrete information-theoretic primitives, all in nats.
//!
//! KL may legitimately be +infinity (absolute-continuity failure); that is a
//! first-class return value, not an error.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability vector over a finite set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Normalizes `weights`; rejects negative entries and sums outside [0.999, 1.001].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty probability vector".into()));
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NegativeProbability(w));
            }
        }
        let sum: f64 = weights.iter().sum();
        if !(0.999..=1.001).contains(&sum) {
            return Err(Error::BadDistributionSum(sum));
        }
        Ok(DiscreteDistribution {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    /// Empirical distribution from counts, with optional additive smoothing:
    /// p(a) = (count_a + alpha) / (n + alpha K).
    pub fn from_counts(counts: &[usize], alpha: f64) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 && alpha == 0.0 {
            return Err(Error::InvalidArgument("no counts and no smoothing".into()));
        }
        let denom = n as f64 + alpha * counts.len() as f64;
        DiscreteDistribution::new(counts.iter().map(|&c| (c as f64 + alpha) / denom).collect())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn p(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

fn check_len(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// KL divergence sum p_i ln(p_i/q_i); +infinity when p charges a q-null atom.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_len(p, q)?;
    let mut total = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total)
}

/// Hellinger distance sqrt(sum (sqrt p_i - sqrt q_i)^2), in [0, sqrt 2].
pub fn hellinger(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_len(p, q)?;
    let sum: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&pi, &qi)| {
            let d = pi.sqrt() - qi.sqrt();
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Shannon entropy -sum p_i ln p_i, with 0 ln 0 = 0.
pub fn entropy(p: &DiscreteDistribution) -> f64 {
    entropy_of_slice(p.probs())
}

pub(crate) fn entropy_of_slice(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&pi| pi > 0.0)
        .map(|&pi| pi * pi.ln())
        .sum::<f64>()
}

/// Joint law of a pair (X, Y) over finite supports.
#[derive(Debug, Clone)]
pub struct JointTable {
    probs: Vec<f64>, // row-major, nx * ny
    nx: usize,
    ny: usize,
}

impl JointTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        if nx == 0 {
            return Err(Error::InvalidArgument("empty joint table".into()));
        }
        let ny = rows[0].len();
        if ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidArgument("ragged joint table".into()));
        }
        let probs: Vec<f64> = rows.into_iter().flatten().collect();
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativeProbability(p));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistributionSum(sum));
        }
        Ok(JointTable { probs, nx, ny })
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.p(x, y)).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|y| (0..self.nx).map(|x| self.p(x, y)).sum())
            .collect()
    }
}

/// Joint law of a triple (X, Y, Z).
#[derive(Debug, Clone)]
pub struct JointTable3 {
    probs: Vec<f64>, // x-major, then y, then z
    nx: usize,
    ny: usize,
    nz: usize,
}

impl JointTable3 {
    pub fn new(probs: Vec<f64>, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if probs.len() != nx * ny * nz || nx * ny * nz == 0 {
            return Err(Error::InvalidArgument("joint table shape mismatch".into()));
        }
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativeProbability(p));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistributionSum(sum));
        }
        Ok(JointTable3 { probs, nx, ny, nz })
    }

    pub fn p(&self, x: usize, y: usize, z: usize) -> f64 {
        self.probs[(x * self.ny + y) * self.nz + z]
    }

    pub fn marginal_z(&self) -> Vec<f64> {
        (0..self.nz)
            .map(|z| {
                let mut s = 0.0;
                for x in 0..self.nx {
                    for y in 0..self.ny {
                        s += self.p(x, y, z);
                    }
                }
                s
            })
            .collect()
    }

    /// Conditional joint of (X, Y) given Z = z; `None` when P(Z=z) = 0.
    pub fn conditional_xy(&self, z: usize) -> Option<JointTable> {
        let pz: f64 = self.marginal_z()[z];
        if pz == 0.0 {
            return None;
        }
        let rows: Vec<Vec<f64>> = (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.p(x, y, z) / pz).collect())
            .collect();
        Some(JointTable::new(rows).expect("renormalized conditional"))
    }
}

/// H(X|Y) = sum_y P(y) H(X|Y=y).
pub fn conditional_entropy(joint: &JointTable) -> f64 {
    let py = joint.marginal_y();
    let mut total = 0.0;
    for (y, &pyv) in py.iter().enumerate() {
        if pyv == 0.0 {
            continue;
        }
        let cond: Vec<f64> = (0..joint.nx()).map(|x| joint.p(x, y) / pyv).collect();
        total += pyv * entropy_of_slice(&cond);
    }
    total
}

/// I(X;Y) = d_KL(joint || product of marginals).
pub fn mutual_information(joint: &JointTable) -> f64 {
    let px = joint.marginal_x();
    let py = joint.marginal_y();
    let mut total = 0.0;
    for x in 0..joint.nx() {
        for y in 0..joint.ny() {
            let pxy = joint.p(x, y);
            if pxy > 0.0 {
                total += pxy * (pxy / (px[x] * py[y])).ln();
            }
        }
    }
    total
}

/// I(X;Y|Z) = sum_z P(z) I(X;Y | Z=z).
pub fn conditional_mutual_information(joint: &JointTable3) -> f64 {
    let pz = joint.marginal_z();
    let mut total = 0.0;
    for (z, &pzv) in pz.iter().enumerate() {
        if pzv == 0.0 {
            continue;
        }
        let cond = joint.conditional_xy(z).expect("positive-mass slice");
        total += pzv * mutual_information(&cond);
    }
    total
}

/// Full-support random distribution: normalized i.i.d. Exponential(1) weights.
pub fn random_distribution(n: usize, rng: &mut impl Rng) -> DiscreteDistribution {
    let weights: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let sum: f64 = weights.iter().sum();
    DiscreteDistribution::new(weights.iter().map(|w| w / sum).collect()).expect("normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, Role};
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let half = dist(&[0.5, 0.5]);
        let point = dist(&[1.0, 0.0]);
        assert_eq!(kl_divergence(&half, &half).unwrap(), 0.0);
        assert!((kl_divergence(&point, &half).unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(kl_divergence(&half, &point).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&half, &dist(&[0.2, 0.3, 0.5])).is_err());
    }

    #[test]
    fn hellinger_examples() {
        let half = dist(&[0.5, 0.5]);
        let e1 = dist(&[1.0, 0.0]);
        let e2 = dist(&[0.0, 1.0]);
        assert_eq!(hellinger(&half, &half).unwrap(), 0.0);
        assert!((hellinger(&e1, &e2).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        let expect = (2.0 - 2.0f64.sqrt()).sqrt();
        assert!((hellinger(&e1, &half).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&dist(&[1.0, 0.0, 0.0])), 0.0);
        assert!((entropy(&dist(&[0.25; 4])) - 4.0f64.ln()).abs() < 1e-12);
        assert!((entropy(&dist(&[0.5, 0.25, 0.25])) - 1.5 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn distribution_constructor_rejects_bad_input() {
        assert!(DiscreteDistribution::new(vec![0.6, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.2, -0.2]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
        // Within tolerance, normalized.
        let d = DiscreteDistribution::new(vec![0.5004, 0.5004]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smoothed_counts_formula() {
        let d = DiscreteDistribution::from_counts(&[100, 0], 0.5).unwrap();
        assert!((d.p(0) - 100.5 / 101.0).abs() < 1e-15);
        assert!((d.p(1) - 0.5 / 101.0).abs() < 1e-15);
    }

    #[test]
    fn independent_joint_has_zero_mi() {
        let joint = JointTable::new(vec![vec![0.2 * 0.3, 0.2 * 0.7], vec![0.8 * 0.3, 0.8 * 0.7]]).unwrap();
        assert!(mutual_information(&joint).abs() < 1e-14);
    }

    #[test]
    fn correlated_uniform_binary_mi_is_ln2() {
        let joint = JointTable::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&joint) - 2.0f64.ln()).abs() < 1e-12);
        // H(X|Y) = 0 for the perfectly correlated table.
        assert!(conditional_entropy(&joint).abs() < 1e-14);
    }

    fn random_joint3(rng: &mut impl Rng) -> JointTable3 {
        let raw: Vec<f64> = (0..8).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = raw.iter().sum();
        JointTable3::new(raw.into_iter().map(|x| x / s).collect(), 2, 2, 2).unwrap()
    }

    #[test]
    fn chain_rule_on_random_joints() {
        let mut rng = derive_stream(51, 0, Role::Environment);
        for _ in 0..200 {
            let j = random_joint3(&mut rng);
            // I(X;(Z1,Z2)) via flattening (Z1,Z2) into one variable.
            let flat = JointTable::new(
                (0..2)
                    .map(|x| {
                        (0..2)
                            .flat_map(|z1| (0..2).map(move |z2| (z1, z2)))
                            .map(|(z1, z2)| j.p(x, z1, z2))
                            .collect()
                    })
                    .collect(),
            )
            .unwrap();
            let lhs = mutual_information(&flat);
            // I(X;Z1): marginalize out Z2.
            let xz1 = JointTable::new(
                (0..2)
                    .map(|x| (0..2).map(|z1| j.p(x, z1, 0) + j.p(x, z1, 1)).collect())
                    .collect(),
            )
            .unwrap();
            // I(X;Z2|Z1): permute so the conditioning variable is the z-axis.
            let mut permuted = vec![0.0; 8];
            for x in 0..2 {
                for z1 in 0..2 {
                    for z2 in 0..2 {
                        permuted[(x * 2 + z2) * 2 + z1] = j.p(x, z1, z2);
                    }
                }
            }
            let xz2_given_z1 = JointTable3::new(permuted, 2, 2, 2).unwrap();
            let rhs = mutual_information(&xz1) + conditional_mutual_information(&xz2_given_z1);
            assert!((lhs - rhs).abs() < 1e-10, "chain rule off by {}", lhs - rhs);
        }
    }

    #[test]
    fn mi_equals_kl_form_on_random_joints() {
        // Fact: I(X;Y) = sum_x P(x) d_KL(P(Y|X=x) || P(Y)).
        let mut rng = derive_stream(52, 0, Role::Environment);
        for _ in 0..200 {
            let raw: Vec<f64> = (0..12).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = raw.iter().sum();
            let rows: Vec<Vec<f64>> = raw.chunks(4).map(|c| c.iter().map(|x| x / s).collect()).collect();
            let j = JointTable::new(rows).unwrap();
            let lhs = mutual_information(&j);
            let px = j.marginal_x();
            let py = DiscreteDistribution::new(j.marginal_y()).unwrap();
            let rhs: f64 = (0..j.nx())
                .map(|x| {
                    let cond =
                        DiscreteDistribution::new((0..j.ny()).map(|y| j.p(x, y) / px[x]).collect())
                            .unwrap();
                    px[x] * kl_divergence(&cond, &py).unwrap()
                })
                .sum();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn fact1_hellinger_squared_below_kl_both_ways() {
        let mut rng = derive_stream(53, 0, Role::Environment);
        for _ in 0..10_000 {
            let n = rng.random_range(2..=10);
            let p = random_distribution(n, &mut rng);
            let q = random_distribution(n, &mut rng);
            let h2 = hellinger(&p, &q).unwrap().powi(2);
            let klpq = kl_divergence(&p, &q).unwrap();
            let klqp = kl_divergence(&q, &p).unwrap();
            assert!(h2 <= klpq.min(klqp) + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn hellinger_symmetric_and_bounded(raw_p in proptest::collection::vec(1e-6..1.0f64, 2..8)) {
            let n = raw_p.len();
            let sp: f64 = raw_p.iter().sum();
            let p = DiscreteDistribution::new(raw_p.iter().map(|x| x / sp).collect()).unwrap();
            let mut raw_q: Vec<f64> = raw_p.iter().rev().cloned().collect();
            raw_q[0] += 0.5;
            let sq: f64 = raw_q.iter().sum();
            let q = DiscreteDistribution::new(raw_q.iter().map(|x| x / sq).collect()).unwrap();
            let h = hellinger(&p, &q).unwrap();
            prop_assert_eq!(h, hellinger(&q, &p).unwrap());
            prop_assert!((0.0..=2.0f64.sqrt() + 1e-12).contains(&h));
            prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
            prop_assert!(entropy(&p) >= -1e-12);
            prop_assert!(entropy(&p) <= (n as f64).ln() + 1e-12);
        }
    }
}
