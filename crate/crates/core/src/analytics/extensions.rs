use crate::error::{domain, Result};

fn check_probabilities(op: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(domain(op, "need at least one value"));
    }
    if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(domain(op, format!("entries must lie in [0, 1], got {bad}")));
    }
    Ok(())
}

/// Outage of max-SINR selection over independent users: `prod_u F_u(zeta)`.
pub fn multiuser_outage(per_user_cdf: &[f64]) -> Result<f64> {
    check_probabilities("multiuser_outage", per_user_cdf)?;
    Ok(per_user_cdf.iter().product())
}

/// CDF of the bottleneck SINR over independent hops: `1 - prod_h (1 - F_h)`.
pub fn multihop_cdf(per_hop_cdf: &[f64]) -> Result<f64> {
    check_probabilities("multihop_cdf", per_hop_cdf)?;
    Ok(per_hop_cdf.iter().fold(0.0, |acc, f| acc + (1.0 - acc) * f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identities() {
        assert_eq!(multiuser_outage(&[0.37]).unwrap(), 0.37);
        assert_eq!(multihop_cdf(&[0.37]).unwrap(), 0.37);
        assert_eq!(multihop_cdf(&[0.013]).unwrap(), 0.013);
        assert!((multihop_cdf(&[1e-17, 1e-17]).unwrap() - 2e-17).abs() < 1e-32);
        assert_eq!(multiuser_outage(&[0.4, 0.0, 0.9]).unwrap(), 0.0);
        assert_eq!(multihop_cdf(&[0.4, 1.0]).unwrap(), 1.0);
        assert!((multihop_cdf(&[0.1, 0.2]).unwrap() - 0.28).abs() < 1e-15);
        assert!(multiuser_outage(&[]).is_err());
        assert!(multihop_cdf(&[1.2]).is_err());
    }

    #[test]
    fn three_users_sampling() {
        // F = 0.5 per user: max of three U(0,1) draws below the median
        assert_eq!(multiuser_outage(&[0.5; 3]).unwrap(), 0.125);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| (0..3).map(|_| rng.random::<f64>()).fold(0.0, f64::max) <= 0.5)
            .count();
        let emp = hits as f64 / n as f64;
        let se = (0.125f64 * 0.875 / n as f64).sqrt();
        assert!((emp - 0.125).abs() <= 3.0 * se, "{emp}");
    }
}
