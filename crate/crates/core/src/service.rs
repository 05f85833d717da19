//! Finite-support distributions of i.i.d. integer service times.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// Probability mass function over service times `y >= 1`, sorted by `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceTimeDist {
    support: Vec<(u64, f64)>,
}

impl ServiceTimeDist {
    /// Validates the atoms and renormalizes them to sum to one.
    ///
    /// Atoms may be given in any order; duplicates, zero service times and
    /// non-positive probabilities are rejected.
    pub fn new(atoms: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut support: Vec<(u64, f64)> = atoms.into_iter().collect();
        if support.is_empty() {
            return Err(Error::InvalidDistribution("support is empty".into()));
        }
        support.sort_by_key(|&(y, _)| y);
        if let Some(w) = support.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDistribution(format!("service time {} listed twice", w[0].0)));
        }
        if support[0].0 == 0 {
            return Err(Error::InvalidDistribution("service times must be at least 1".into()));
        }
        if let Some(&(y, p)) = support.iter().find(|(_, p)| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::InvalidDistribution(format!("probability {p} of service time {y} not in (0, 1]")));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        // Skipping already-normalized input keeps Display -> parse exact.
        if (total - 1.0).abs() > 1e-15 {
            for atom in &mut support {
                atom.1 /= total;
            }
        }
        Ok(Self { support })
    }

    pub fn deterministic(y: u64) -> Result<Self> {
        Self::new([(y, 1.0)])
    }

    pub fn support(&self) -> &[(u64, f64)] {
        &self.support
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.support.iter().map(|&(y, _)| y)
    }

    pub fn min(&self) -> u64 {
        self.support[0].0
    }

    pub fn max(&self) -> u64 {
        self.support[self.support.len() - 1].0
    }

    pub fn contains(&self, y: u64) -> bool {
        self.support.binary_search_by_key(&y, |&(v, _)| v).is_ok()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(y, p)| y as f64 * p).sum()
    }

    /// `E[f(Y)]`. Any `+inf` term makes the result `+inf`.
    pub fn expect(&self, mut f: impl FnMut(u64) -> f64) -> f64 {
        let mut acc = 0.0;
        for &(y, p) in &self.support {
            let v = f(y);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += p * v;
        }
        acc
    }

    /// Inverse-CDF draw over the sorted support using one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        for &(y, p) in &self.support {
            cumulative += p;
            if u < cumulative {
                return y;
            }
        }
        self.max()
    }
}

/// `y:prob` pairs separated by commas, e.g. `1:0.5,11:0.5`.
impl FromStr for ServiceTimeDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (y, p) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidDistribution(format!("`{part}` is not a `y:prob` pair")))?;
            let y: u64 = y
                .trim()
                .parse()
                .map_err(|_| Error::InvalidDistribution(format!("`{y}` is not a positive integer service time")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidDistribution(format!("`{p}` is not a probability")))?;
            atoms.push((y, p));
        }
        Self::new(atoms)
    }
}

impl fmt::Display for ServiceTimeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (y, p)) in self.support.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{y}:{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::MarkovSourceModel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_point(a: u64, b: u64) -> ServiceTimeDist {
        ServiceTimeDist::new([(a, 0.5), (b, 0.5)]).unwrap()
    }

    #[test]
    fn means() {
        assert_eq!(two_point(1, 5).mean(), 3.0);
        assert_eq!(two_point(1, 11).mean(), 6.0);
        assert_eq!(ServiceTimeDist::deterministic(4).unwrap().mean(), 4.0);
    }

    #[test]
    fn expectations() {
        assert_eq!(two_point(1, 5).expect(|y| y as f64), 3.0);
        assert_eq!(ServiceTimeDist::deterministic(2).unwrap().expect(|y| (y * y) as f64), 4.0);
        let b = MarkovSourceModel::binary_symmetric(0.1).unwrap();
        // 0.5 r(1) + 0.5 r(11) at 40 digits: 0.26816678834751607970
        assert_abs_diff_eq!(
            two_point(1, 11).expect(|y| b.mutual_information(y)),
            0.268_166_788_347_516_08,
            epsilon = 1e-15
        );
    }

    #[test]
    fn infinity_absorbs() {
        let d = two_point(1, 2);
        assert_eq!(d.expect(|y| if y == 2 { f64::INFINITY } else { -5.0 }), f64::INFINITY);
    }

    #[test]
    fn construction_rejects_bad_atoms() {
        assert!(ServiceTimeDist::new(Vec::<(u64, f64)>::new()).is_err());
        assert!(ServiceTimeDist::new([(0, 1.0)]).is_err());
        assert!(ServiceTimeDist::new([(1, 0.5), (1, 0.5)]).is_err());
        assert!(ServiceTimeDist::new([(1, 0.5), (2, 0.4)]).is_err());
        assert!(ServiceTimeDist::new([(1, 1.0), (2, 0.0)]).is_err());
        assert!(ServiceTimeDist::new([(1, f64::NAN)]).is_err());
    }

    #[test]
    fn construction_sorts_and_renormalizes() {
        let d = ServiceTimeDist::new([(5, 0.5 + 4e-13), (1, 0.5)]).unwrap();
        assert_eq!(d.min(), 1);
        assert_eq!(d.max(), 5);
        let total: f64 = d.support().iter().map(|a| a.1).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn parse_and_display() {
        let d: ServiceTimeDist = "1:0.5, 11:0.5".parse().unwrap();
        assert_eq!(d, two_point(1, 11));
        assert_eq!(d.to_string(), "1:0.5,11:0.5");
        assert_eq!(d.to_string().parse::<ServiceTimeDist>().unwrap(), d);
        assert!("1-0.5".parse::<ServiceTimeDist>().is_err());
        assert!("x:1".parse::<ServiceTimeDist>().is_err());
        assert!("".parse::<ServiceTimeDist>().is_err());
    }

    #[test]
    fn point_mass_always_draws_its_value() {
        let d = ServiceTimeDist::deterministic(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 7));
    }

    #[test]
    fn sampling_frequencies_match_pmf() {
        let d = two_point(1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let ones = (0..n).filter(|_| d.sample(&mut rng) == 1).count();
        let freq = ones as f64 / n as f64;
        // 3 sigma binomial bound at n = 1e6 is 0.0015
        assert!((freq - 0.5).abs() < 0.002, "frequency {freq}");
    }

    #[test]
    fn three_point_sampling_per_atom() {
        let d = ServiceTimeDist::new([(2, 0.2), (3, 0.3), (6, 0.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            match d.sample(&mut rng) {
                2 => counts[0] += 1,
                3 => counts[1] += 1,
                6 => counts[2] += 1,
                other => panic!("drew {other} outside the support"),
            }
        }
        for (&(_, p), &c) in d.support().iter().zip(&counts) {
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() < 3.0 * sd + 1e-12);
        }
    }

    #[test]
    fn sampling_replays_under_fixed_seed() {
        let d = ServiceTimeDist::new([(1, 0.3), (4, 0.7)]).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| d.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    fn any_dist() -> impl Strategy<Value = ServiceTimeDist> {
        proptest::collection::btree_map(1u64..20, 0.05f64..1.0, 1..5).prop_map(|m| {
            let total: f64 = m.values().sum();
            ServiceTimeDist::new(m.into_iter().map(|(y, w)| (y, w / total))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn expectation_of_constant(d in any_dist(), c in -100.0f64..100.0) {
            prop_assert!((d.expect(|_| c) - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }

        #[test]
        fn expectation_is_linear(d in any_dist(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let f = |y: u64| a * y as f64;
            let g = |y: u64| b * (y as f64).sqrt();
            let lhs = d.expect(|y| f(y) + g(y));
            let rhs = d.expect(f) + d.expect(g);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn display_round_trips(d in any_dist()) {
            let back: ServiceTimeDist = d.to_string().parse().unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
