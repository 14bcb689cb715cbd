//! Discrete mutual-information estimators over exact finite joints.
//!
//! Joints are stored sparsely (only cells with positive mass) so that
//! deterministic-injective maps over large atom sets stay cheap: the
//! chi-square functional reduces to a sum over non-zero cells.

use crate::error::{Error, Result};

/// Chi-square mutual information either converges to a finite value or
/// diverges; divergence is an explicit sentinel, never a floating overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MiEstimate {
    Finite(f64),
    Divergent,
}

impl MiEstimate {
    pub fn value(self) -> Option<f64> {
        match self {
            MiEstimate::Finite(v) => Some(v),
            MiEstimate::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, MiEstimate::Divergent)
    }
}

/// Exact joint distribution over (feature atom, representation atom) pairs.
#[derive(Clone, Debug)]
pub struct DiscreteJoint {
    nx: usize,
    nz: usize,
    /// (x index, z index, probability), probability > 0.
    cells: Vec<(usize, usize, f64)>,
    px: Vec<f64>,
    pz: Vec<f64>,
}

impl DiscreteJoint {
    fn from_cells(nx: usize, nz: usize, cells: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut px = vec![0.0; nx];
        let mut pz = vec![0.0; nz];
        let mut total = 0.0;
        for &(i, j, p) in &cells {
            if i >= nx || j >= nz {
                return Err(Error::argument("joint cell index out of range"));
            }
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::argument("joint cells must be positive and finite"));
            }
            px[i] += p;
            pz[j] += p;
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::argument(format!(
                "joint sums to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(DiscreteJoint { nx, nz, cells, px, pz })
    }

    /// Dense probability table, rows = x atoms, columns = z atoms. Must sum
    /// to 1 within 1e-12.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::argument("empty joint"));
        }
        let nz = rows[0].len();
        if rows.iter().any(|r| r.len() != nz) {
            return Err(Error::argument("ragged joint table"));
        }
        let mut cells = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if p < 0.0 || !p.is_finite() {
                    return Err(Error::argument("joint entries must be non-negative"));
                }
                if p > 0.0 {
                    cells.push((i, j, p));
                }
            }
        }
        Self::from_cells(rows.len(), nz, cells)
    }

    /// Empirical joint by counting (x, z) index pairs.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::argument("no pairs"));
        }
        let nx = 1 + pairs.iter().map(|p| p.0).max().unwrap();
        let nz = 1 + pairs.iter().map(|p| p.1).max().unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for &p in pairs {
            *counts.entry(p).or_insert(0usize) += 1;
        }
        let n = pairs.len() as f64;
        let cells = counts
            .into_iter()
            .map(|((i, j), c)| (i, j, c as f64 / n))
            .collect();
        Self::from_cells(nx, nz, cells)
    }

    /// Deterministic injective representation over `k` equiprobable atoms:
    /// the diagonal joint with mass 1/k per atom.
    pub fn injective_uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::argument("need at least one atom"));
        }
        let p = 1.0 / k as f64;
        Self::from_cells(k, k, (0..k).map(|i| (i, i, p)).collect())
    }

    /// Deterministic injective joint with the given atom masses.
    pub fn injective_with_masses(masses: &[f64]) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::argument("need at least one atom"));
        }
        Self::from_cells(
            masses.len(),
            masses.len(),
            masses.iter().enumerate().map(|(i, &p)| (i, i, p)).collect(),
        )
    }

    /// The truncated staircase joint: atom `i` (1-based) is the interval
    /// `[1/(i+1), 1/i)` with mass `1/(i(i+1))`; everything below
    /// `1/k_trunc` is lumped into the last atom, which therefore carries
    /// mass `1/k_trunc`. The representation is injective, so the joint is
    /// diagonal.
    pub fn staircase(k_trunc: usize) -> Result<Self> {
        if k_trunc == 0 {
            return Err(Error::argument("k_trunc must be at least 1"));
        }
        let mut masses: Vec<f64> = (1..k_trunc)
            .map(|i| 1.0 / (i as f64 * (i as f64 + 1.0)))
            .collect();
        masses.push(1.0 / k_trunc as f64);
        // the analytic telescoping sum is exactly 1; absorb float rounding so
        // the constructor's 1e-12 check reflects the construction, not noise
        let total: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= total;
        }
        Self::injective_with_masses(&masses)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn cells(&self) -> &[(usize, usize, f64)] {
        &self.cells
    }

    pub fn px(&self) -> &[f64] {
        &self.px
    }

    pub fn pz(&self) -> &[f64] {
        &self.pz
    }
}

/// Chi-square mutual information
/// `sum_x p(x) sum_z p(z) (p(z|x)/p(z) - 1)^2`, evaluated sparsely through
/// the algebraic identity `sum_{cells} p(x,z)^2 / (p(x) p(z)) - 1` (the two
/// forms agree because the cross terms telescope against the total mass).
pub fn chi2_mi_discrete(joint: &DiscreteJoint) -> MiEstimate {
    let mut acc = 0.0;
    for &(i, j, p) in joint.cells() {
        let denom = joint.px()[i] * joint.pz()[j];
        if denom == 0.0 {
            // positive conditional mass over a zero marginal: divergent
            return MiEstimate::Divergent;
        }
        acc += (p * p) / denom;
    }
    MiEstimate::Finite(acc - 1.0)
}

/// Shannon mutual information in nats, `sum p ln(p / (p(x) p(z)))` with the
/// `0 ln 0 = 0` convention (zero cells are simply absent from the sparse
/// representation).
pub fn shannon_mi_discrete(joint: &DiscreteJoint) -> f64 {
    let mut acc = 0.0;
    for &(i, j, p) in joint.cells() {
        acc += p * (p / (joint.px()[i] * joint.pz()[j])).ln();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;

    #[test]
    fn independent_joint_has_zero_mi() {
        // product of (0.3, 0.7) and (0.6, 0.4)
        let j = DiscreteJoint::from_dense(&[
            vec![0.18, 0.12],
            vec![0.42, 0.28],
        ])
        .unwrap();
        let chi2 = chi2_mi_discrete(&j).value().unwrap();
        assert!(chi2.abs() < 1e-12, "chi2 {chi2}");
        assert!(shannon_mi_discrete(&j).abs() < 1e-12);
    }

    #[test]
    fn injective_uniform_is_k_minus_one() {
        for k in [1usize, 2, 7, 50] {
            let j = DiscreteJoint::injective_uniform(k).unwrap();
            let chi2 = chi2_mi_discrete(&j).value().unwrap();
            assert!(
                (chi2 - (k as f64 - 1.0)).abs() < 1e-9,
                "k={k}: chi2 {chi2}"
            );
        }
    }

    #[test]
    fn two_by_two_example() {
        let j = DiscreteJoint::from_dense(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        // independent oracle: literal dense double sum over the definition
        let px = [0.5, 0.5];
        let pz = [0.5, 0.5];
        let table = [[0.4, 0.1], [0.1, 0.4]];
        let mut want = 0.0f64;
        for x in 0..2 {
            for z in 0..2 {
                let cond = table[x][z] / px[x];
                let r = cond / pz[z] - 1.0;
                want += px[x] * pz[z] * r * r;
            }
        }
        assert!((want - 0.36).abs() < 1e-15);
        let got = chi2_mi_discrete(&j).value().unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn shannon_perfect_correlation_is_ln2() {
        let j = DiscreteJoint::from_dense(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((shannon_mi_discrete(&j) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn staircase_masses() {
        let j = DiscreteJoint::staircase(100).unwrap();
        assert_eq!(j.cells().len(), 100);
        // atom 1 carries 1/2, atom 2 carries 1/6, last atom the tail 1/100
        assert!((j.cells()[0].2 - 0.5).abs() < 1e-12);
        assert!((j.cells()[1].2 - 1.0 / 6.0).abs() < 1e-12);
        assert!((j.cells()[99].2 - 0.01).abs() < 1e-12);
        let chi2 = chi2_mi_discrete(&j).value().unwrap();
        assert!((chi2 - 99.0).abs() < 1e-9);
    }

    #[test]
    fn staircase_shannon_below_closed_form_cap() {
        let cap = 0.5 * std::f64::consts::LN_2 + 2.0;
        for k in [1usize, 2, 10, 1000] {
            let j = DiscreteJoint::staircase(k).unwrap();
            let sh = shannon_mi_discrete(&j);
            assert!(sh < cap, "k={k}: shannon {sh} >= {cap}");
        }
    }

    #[test]
    fn chi2_dominates_shannon_on_random_joints() {
        let mut rng = Rng::new(2024);
        for _ in 0..1000 {
            let nx = 1 + rng.below(8);
            let nz = 1 + rng.below(8);
            let mut rows = vec![vec![0.0; nz]; nx];
            let mut total = 0.0;
            for row in &mut rows {
                for v in row.iter_mut() {
                    // sparse-ish tables exercise the zero-cell convention
                    *v = if rng.uniform() < 0.3 { 0.0 } else { rng.uniform() };
                    total += *v;
                }
            }
            if total == 0.0 {
                rows[0][0] = 1.0;
                total = 1.0;
            }
            for row in &mut rows {
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
            // renormalise exactly enough for the constructor
            let s: f64 = rows.iter().flatten().sum();
            for row in &mut rows {
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
            let j = match DiscreteJoint::from_dense(&rows) {
                Ok(j) => j,
                Err(_) => continue,
            };
            let chi2 = chi2_mi_discrete(&j).value().unwrap();
            let sh = shannon_mi_discrete(&j);
            assert!(chi2 >= sh - 1e-9, "chi2 {chi2} < shannon {sh}");
        }
    }

    #[test]
    fn empirical_counting() {
        let pairs = [(0usize, 0usize), (0, 0), (1, 1), (1, 0)];
        let j = DiscreteJoint::from_pairs(&pairs).unwrap();
        assert_eq!(j.nx(), 2);
        assert_eq!(j.nz(), 2);
        assert!((j.px()[0] - 0.5).abs() < 1e-15);
        assert!((j.pz()[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn invalid_joints_rejected() {
        assert!(DiscreteJoint::from_dense(&[vec![0.5, 0.6]]).is_err()); // sums to 1.1
        assert!(DiscreteJoint::from_dense(&[vec![-0.1, 1.1]]).is_err());
        assert!(DiscreteJoint::from_dense(&[]).is_err());
        assert!(DiscreteJoint::injective_uniform(0).is_err());
    }

    #[test]
    fn divergent_sentinel_flows() {
        assert!(MiEstimate::Divergent.is_divergent());
        assert_eq!(MiEstimate::Finite(2.0).value(), Some(2.0));
    }
}
