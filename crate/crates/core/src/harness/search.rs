use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hoeffding::project_multiplicity;
use crate::sample::{normal, substream};
use crate::space::ProductSpace;
use crate::tensor::{Exponent, TensorFunction};

pub const LOWER_BOUND_LABEL: &str = "certified lower bound";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub ratio: f64,
}

/// `‖P_m g‖_p / ‖g‖_p` maximized over structured candidates and random-restart ascent.
/// Every reported value is attained by an explicit function, hence a lower bound on the norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub label: String,
    pub m: usize,
    pub p: f64,
    pub value: f64,
    pub witness: String,
    pub candidates: Vec<Candidate>,
}

pub fn projection_ratio(g: &TensorFunction<f64>, m: usize, p: Exponent) -> Result<f64> {
    let den = g.lp_norm(p)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(project_multiplicity(g, m)?.lp_norm(p)? / den)
}

fn structured(space: &Arc<ProductSpace>) -> Result<Vec<(String, TensorFunction<f64>)>> {
    let n = space.n_coords();
    let mut out = Vec::new();
    if space.factors().iter().all(|f| f.is_uniform() && f.outcome_count() == space.factor(1).outcome_count()) {
        let k = space.factor(1).outcome_count();
        let mut table = vec![0.0; k];
        table[k - 1] = k as f64;
        let one = ProductSpace::power(space.factor(1), 1, space.mode())?.shared();
        let f = TensorFunction::new(one, table)?;
        out.push(("tensor power of a point mass density".to_string(), f.tensor_power(n)?.rebind(space.clone())?));
    }
    let mut delta = vec![0.0; space.atom_count()];
    delta[0] = 1.0;
    out.push(("atom indicator".to_string(), TensorFunction::new(space.clone(), delta)?));
    Ok(out)
}

fn ascend(space: &Arc<ProductSpace>, m: usize, p: Exponent, steps: usize, rng: &mut impl Rng) -> Result<f64> {
    let mut g: Vec<f64> = (0..space.atom_count()).map(|_| normal(rng)).collect();
    let mut best = projection_ratio(&TensorFunction::new(space.clone(), g.clone())?, m, p)?;
    let mut sigma = 0.5;
    for _ in 0..steps {
        let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        let trial: Vec<f64> = g.iter().map(|v| v + sigma * scale * normal(rng)).collect();
        let r = projection_ratio(&TensorFunction::new(space.clone(), trial.clone())?, m, p)?;
        if r > best {
            best = r;
            g = trial;
        } else {
            sigma *= 0.97;
        }
    }
    Ok(best)
}

pub fn operator_norm_lower_bound(
    space: &Arc<ProductSpace>,
    m: usize,
    p: f64,
    restarts: usize,
    steps: usize,
    seed: u64,
) -> Result<LowerBoundReport> {
    let exponent = Exponent::Finite(p).check()?;
    if m > space.n_coords() {
        return Err(Error::InvalidParameter(format!("m = {m} exceeds N = {}", space.n_coords())));
    }
    let mut candidates = Vec::new();
    for (label, g) in structured(space)? {
        candidates.push(Candidate { label, ratio: projection_ratio(&g, m, exponent)? });
    }
    let ascents: Vec<f64> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| ascend(space, m, exponent, steps, &mut substream(seed, r)))
        .collect::<Result<_>>()?;
    for (r, ratio) in ascents.into_iter().enumerate() {
        candidates.push(Candidate { label: format!("ascent restart {r}"), ratio });
    }
    let best = candidates
        .iter()
        .fold(None::<&Candidate>, |acc, c| match acc {
            Some(b) if b.ratio >= c.ratio => Some(b),
            _ => Some(c),
        })
        .expect("at least one candidate");
    Ok(LowerBoundReport {
        label: LOWER_BOUND_LABEL.into(),
        m,
        p,
        value: best.ratio,
        witness: best.label.clone(),
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarMode;

    #[test]
    fn l2_bound_never_exceeds_one() {
        let s = ProductSpace::uniform(2, 4, ScalarMode::Real).unwrap().shared();
        let r = operator_norm_lower_bound(&s, 1, 2.0, 2, 30, 3).unwrap();
        assert!(r.value <= 1.0 + 1e-12);
        assert_eq!(r.label, LOWER_BOUND_LABEL);
    }

    #[test]
    fn l1_bound_beats_tensor_candidate() {
        let s = ProductSpace::uniform(2, 4, ScalarMode::Real).unwrap().shared();
        let r = operator_norm_lower_bound(&s, 1, 1.0, 2, 30, 3).unwrap();
        assert!((r.candidates[0].ratio - 1.5).abs() < 1e-12);
        assert!(r.value >= 1.5);
    }
}
