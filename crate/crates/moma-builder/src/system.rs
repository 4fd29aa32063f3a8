use markov_core::{Matrix, PhDistribution, ProbVector};

use crate::error::{BuildError, Result};
use crate::module::ModuleModel;
use crate::structure::StructureSpec;

/// Assembled system model: block-structured generator over the operative
/// macro-states (indexed by the set of failed modules), one aggregated
/// absorbing down state, and the optimal/critical partition.
#[derive(Debug, Clone)]
pub struct SystemModel {
    modules: Vec<ModuleModel>,
    structure: StructureSpec,
    q_sys: Matrix,
    n_up: usize,
    n_u1: usize,
    /// Per operative state and module: extended module state index, or None
    /// when that module has failed in this macro-state.
    components: Vec<Vec<Option<usize>>>,
    labels: Vec<String>,
    alpha_sys: ProbVector,
    beta_sys: ProbVector,
    /// Structure-down product states before aggregation into the single D.
    pre_aggregation_down_states: usize,
}

impl SystemModel {
    pub fn modules(&self) -> &[ModuleModel] {
        &self.modules
    }

    pub fn structure(&self) -> &StructureSpec {
        &self.structure
    }

    pub fn q_sys(&self) -> &Matrix {
        &self.q_sys
    }

    /// Operative state count (|U1| + |U2|); the down state has index `n_up`.
    pub fn up_count(&self) -> usize {
        self.n_up
    }

    /// Optimal states occupy `0..u1_count()`.
    pub fn u1_count(&self) -> usize {
        self.n_u1
    }

    pub fn u2_count(&self) -> usize {
        self.n_up - self.n_u1
    }

    pub fn down_index(&self) -> usize {
        self.n_up
    }

    pub fn state_labels(&self) -> &[String] {
        &self.labels
    }

    /// Module components of operative state `s` (None = module failed).
    pub fn components(&self, s: usize) -> &[Option<usize>] {
        &self.components[s]
    }

    pub fn alpha_sys(&self) -> &ProbVector {
        &self.alpha_sys
    }

    /// Law used for a full system replacement; defaults to the initial law.
    pub fn beta_sys(&self) -> &ProbVector {
        &self.beta_sys
    }

    pub fn set_replacement_law(&mut self, beta: ProbVector) -> Result<()> {
        if beta.len() != self.n_up + 1 {
            return Err(BuildError::Spec(format!(
                "replacement law length {} does not match state count {}",
                beta.len(),
                self.n_up + 1
            )));
        }
        let off_u1: f64 = beta.entries()[self.n_u1..].iter().sum();
        if off_u1 > 1e-10 {
            return Err(BuildError::Spec(
                "replacement law must be supported on the optimal states".into(),
            ));
        }
        self.beta_sys = beta;
        Ok(())
    }

    pub fn pre_aggregation_down_states(&self) -> usize {
        self.pre_aggregation_down_states
    }

    /// System lifetime distribution: initial law over the operative states
    /// with the transient block of the system generator.
    pub fn lifetime_ph(&self) -> Result<PhDistribution> {
        let idx: Vec<usize> = (0..self.n_up).collect();
        let t = self.q_sys.submatrix(&idx, &idx);
        let alpha = ProbVector::sub_stochastic(self.alpha_sys.entries()[..self.n_up].to_vec())?;
        Ok(PhDistribution::new(alpha, t)?)
    }

    /// Marginal law of module `i` (over its extended states, down last) under
    /// a law on the system states.
    pub fn marginal_module_law(&self, law: &[f64], module: usize) -> Vec<f64> {
        let m = &self.modules[module];
        let mut out = vec![0.0; m.ext_total_count()];
        for (s, mass) in law.iter().enumerate().take(self.n_up) {
            match self.components[s][module] {
                Some(c) => out[c] += mass,
                None => out[m.ext_op_count()] += mass,
            }
        }
        if law.len() > self.n_up {
            out[m.ext_op_count()] += law[self.n_up];
        }
        out
    }
}

/// Operative macro-blocks: subsets of failed modules (|S| ascending, then
/// lexicographic) for which the structure is still up. Unreachable blocks
/// (structure already down) are dropped; a series system keeps only the
/// zero-failures block.
fn operative_blocks(k: usize, structure: &StructureSpec) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for mask in 0..(1usize << k) {
        let up: Vec<bool> = (0..k).map(|i| mask & (1 << i) == 0).collect();
        if structure.is_up(&up) {
            let failed: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            blocks.push(failed);
        }
    }
    blocks.sort_by_key(|s| (s.len(), s.clone()));
    blocks
}

/// Builds the system generator from shock-extended module models and the
/// system-level structure.
pub fn build_system_generator(
    modules: Vec<ModuleModel>,
    structure: StructureSpec,
) -> Result<SystemModel> {
    if modules.is_empty() {
        return Err(BuildError::Spec("system needs at least one module".into()));
    }
    let k = modules.len();
    structure.validate(k)?;

    let blocks = operative_blocks(k, &structure);
    let block_pos = |failed: &[usize]| blocks.iter().position(|b| b == failed);

    // Raw (pre-classification) state enumeration: per block, the product of
    // the surviving modules' extended operational spaces, module-major.
    struct RawState {
        components: Vec<Option<usize>>,
    }
    let mut raw: Vec<RawState> = Vec::new();
    let mut block_offsets = Vec::with_capacity(blocks.len());
    for failed in &blocks {
        block_offsets.push(raw.len());
        let survivors: Vec<usize> = (0..k).filter(|i| !failed.contains(i)).collect();
        let dims: Vec<usize> = survivors
            .iter()
            .map(|&i| modules[i].ext_op_count())
            .collect();
        let total: usize = dims.iter().product();
        for mut idx in 0..total {
            let mut comps = vec![None; k];
            for pos in (0..survivors.len()).rev() {
                comps[survivors[pos]] = Some(idx % dims[pos]);
                idx /= dims[pos];
            }
            raw.push(RawState { components: comps });
        }
    }
    let n_raw = raw.len();

    // Index of a raw state from its block and component tuple.
    let raw_index = |failed: &[usize], comps: &[Option<usize>]| -> usize {
        let bpos = block_pos(failed).expect("operative block");
        let survivors: Vec<usize> = (0..k).filter(|i| !failed.contains(i)).collect();
        let mut idx = 0;
        for &i in &survivors {
            idx = idx * modules[i].ext_op_count() + comps[i].expect("surviving module");
        }
        block_offsets[bpos] + idx
    };

    // Assemble the raw generator: within-block Kronecker-sum dynamics plus
    // module-failure transitions, down column aggregated.
    let mut q_raw = Matrix::zeros(n_raw + 1, n_raw + 1);
    for (s, state) in raw.iter().enumerate() {
        let failed: Vec<usize> = (0..k).filter(|i| state.components[*i].is_none()).collect();
        for i in 0..k {
            let Some(ci) = state.components[i] else {
                continue;
            };
            let m = &modules[i];
            let n_ext = m.ext_op_count();
            // Within-block moves of module i (Kronecker-sum pattern).
            for cj in 0..n_ext {
                if cj == ci {
                    continue;
                }
                let rate = m.q_ext().get(ci, cj);
                if rate != 0.0 {
                    let mut comps = state.components.clone();
                    comps[i] = Some(cj);
                    q_raw.add_to(s, raw_index(&failed, &comps), rate);
                }
            }
            // Module i fails: identity on the others, exit column of i.
            let exit = m.q_ext().get(ci, n_ext);
            if exit != 0.0 {
                let mut new_failed = failed.clone();
                new_failed.push(i);
                new_failed.sort_unstable();
                let up: Vec<bool> = (0..k).map(|j| !new_failed.contains(&j)).collect();
                if structure.is_up(&up) {
                    let mut comps = state.components.clone();
                    comps[i] = None;
                    q_raw.add_to(s, raw_index(&new_failed, &comps), exit);
                } else {
                    q_raw.add_to(s, n_raw, exit);
                }
            }
        }
        // Diagonal: negative sum of all outgoing rates.
        let total: f64 = (0..=n_raw)
            .filter(|&j| j != s)
            .map(|j| q_raw.get(s, j))
            .sum();
        q_raw.set(s, s, -total);
    }

    // Classification: optimal iff every surviving module component is in its
    // optimal class and no module has failed.
    let is_u1 = |state: &RawState| -> bool {
        state.components.iter().enumerate().all(|(i, c)| match c {
            Some(ci) => *ci < modules[i].ext_optimal_count(),
            None => false,
        })
    };
    let mut order: Vec<usize> = (0..n_raw).collect();
    order.sort_by_key(|&s| if is_u1(&raw[s]) { 0 } else { 1 });
    let n_u1 = raw.iter().filter(|s| is_u1(s)).count();

    let mut q_sys = Matrix::zeros(n_raw + 1, n_raw + 1);
    for (new_i, &old_i) in order.iter().enumerate() {
        for (new_j, &old_j) in order.iter().enumerate() {
            q_sys.set(new_i, new_j, q_raw.get(old_i, old_j));
        }
        q_sys.set(new_i, n_raw, q_raw.get(old_i, n_raw));
    }

    let components: Vec<Vec<Option<usize>>> =
        order.iter().map(|&s| raw[s].components.clone()).collect();
    let labels: Vec<String> = components
        .iter()
        .map(|comps| {
            comps
                .iter()
                .enumerate()
                .map(|(i, c)| match c {
                    Some(ci) => {
                        let (tuple, ph) = modules[i].split_ext(*ci);
                        if modules[i].map_order() == 1 {
                            modules[i].tuple_label(tuple)
                        } else {
                            format!("{}|{ph}", modules[i].tuple_label(tuple))
                        }
                    }
                    None => "F".into(),
                })
                .collect::<Vec<_>>()
                .join(";")
        })
        .chain(std::iter::once("D".into()))
        .collect();

    // Initial law: product of module initial laws on the zero-failures block.
    let mut alpha = vec![0.0; n_raw + 1];
    for (s, comps) in components.iter().enumerate() {
        let mut p = 1.0;
        for (i, c) in comps.iter().enumerate() {
            p *= match c {
                Some(ci) => modules[i].alpha_ext().get(*ci),
                None => 0.0,
            };
        }
        alpha[s] = p;
    }
    let alpha_sys = ProbVector::sub_stochastic(alpha)?;

    let full_product: usize = modules.iter().map(|m| m.ext_total_count()).product();
    let pre_aggregation_down_states = full_product - n_raw;

    Ok(SystemModel {
        modules,
        structure,
        q_sys,
        n_up: n_raw,
        n_u1,
        components,
        labels,
        alpha_sys: alpha_sys.clone(),
        beta_sys: alpha_sys,
        pre_aggregation_down_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::module::{build_module_wear_generator, ModuleSpec, UnitSpec};
    use markov_core::PhDistribution;

    fn exp_module(name: &str, rates: &[f64], structure: StructureSpec) -> ModuleModel {
        let units = rates
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                UnitSpec::new(
                    format!("{name}-u{i}"),
                    PhDistribution::exponential(r).unwrap(),
                )
            })
            .collect();
        build_module_wear_generator(&ModuleSpec::new(name, units, structure)).unwrap()
    }

    #[test]
    fn single_module_system_equals_module_generator() {
        let m = exp_module("m", &[1.0, 2.0], StructureSpec::Parallel);
        let q_ext = m.q_ext().clone();
        let sys = build_system_generator(vec![m], StructureSpec::Series).unwrap();
        assert_eq!(sys.q_sys(), &q_ext);
        assert_eq!(sys.u1_count(), 1);
    }

    #[test]
    fn two_series_exponential_modules_collapse_to_competing_risks() {
        let m1 = exp_module("a", &[0.7], StructureSpec::Series);
        let m2 = exp_module("b", &[1.1], StructureSpec::Series);
        let sys = build_system_generator(vec![m1, m2], StructureSpec::Series).unwrap();
        assert_eq!(sys.up_count(), 1);
        assert!((sys.q_sys().get(0, 0) + 1.8).abs() < 1e-12);
        assert!((sys.q_sys().get(0, 1) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn parallel_system_keeps_single_failure_blocks() {
        let m1 = exp_module("a", &[0.7], StructureSpec::Series);
        let m2 = exp_module("b", &[1.1], StructureSpec::Series);
        let sys = build_system_generator(vec![m1, m2], StructureSpec::Parallel).unwrap();
        // States: (up,up), (up,F), (F,up) and D.
        assert_eq!(sys.up_count(), 3);
        assert_eq!(sys.u1_count(), 1);
        let labels = sys.state_labels();
        assert!(labels.contains(&"0;F".to_string()));
        assert!(labels.contains(&"F;0".to_string()));
        for rs in sys.q_sys().row_sums() {
            assert!(rs.abs() < 1e-10);
        }
    }

    #[test]
    fn series_reliability_is_product_of_module_reliabilities() {
        let m1 = exp_module("a", &[1.5, 1.5], StructureSpec::Parallel);
        let m2 = exp_module("b", &[0.9, 0.9, 0.9], StructureSpec::KOutOfN(2));
        let ph1 = m1.lifetime_ph().unwrap();
        let ph2 = m2.lifetime_ph().unwrap();
        let sys = build_system_generator(vec![m1, m2], StructureSpec::Series).unwrap();
        let ph = sys.lifetime_ph().unwrap();
        for &t in &[0.05, 0.2, 0.5, 1.0] {
            let joint = ph.reliability(t).unwrap();
            let product = ph1.reliability(t).unwrap() * ph2.reliability(t).unwrap();
            assert!(
                (joint - product).abs() < 1e-8,
                "t={t}: {joint} vs {product}"
            );
        }
    }

    #[test]
    fn all_single_phase_modules_have_singleton_u1() {
        let m1 = exp_module("a", &[1.0], StructureSpec::Series);
        let m2 = exp_module("b", &[2.0], StructureSpec::Series);
        let sys = build_system_generator(vec![m1, m2], StructureSpec::Series).unwrap();
        assert_eq!(sys.u1_count(), 1);
        assert_eq!(sys.alpha_sys().get(0), 1.0);
    }

    #[test]
    fn empty_module_list_rejected() {
        assert!(build_system_generator(vec![], StructureSpec::Series).is_err());
    }
}
