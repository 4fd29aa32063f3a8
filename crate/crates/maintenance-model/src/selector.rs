use markov_core::Matrix;
use moma_builder::SystemModel;

/// Diagonal 0/1 matrix over a module's extended states selecting those that
/// can occur while the system is in a critical state.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorMatrix {
    diag: Vec<f64>,
}

impl SelectorMatrix {
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::diag(&self.diag)
    }

    pub fn admits(&self, state: usize) -> bool {
        self.diag[state] == 1.0
    }
}

/// Enumerates the critical system states and marks every module-state they
/// expose for module `i`, including the aggregated module-down state when a
/// failed module can still leave the system operative.
pub fn build_selector(system: &SystemModel, module: usize) -> SelectorMatrix {
    let m = &system.modules()[module];
    let mut diag = vec![0.0; m.ext_total_count()];
    for s in system.u1_count()..system.up_count() {
        match system.components(s)[module] {
            Some(c) => diag[c] = 1.0,
            None => diag[m.ext_op_count()] = 1.0,
        }
    }
    SelectorMatrix { diag }
}

#[cfg(test)]
mod tests {
    use super::*;
    use markov_core::PhDistribution;
    use moma_builder::{
        build_module_wear_generator, build_system_generator, ModuleSpec, StructureSpec, UnitSpec,
    };

    fn exp_module(name: &str, rates: &[f64], st: StructureSpec) -> moma_builder::ModuleModel {
        let units = rates
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                UnitSpec::new(
                    format!("{name}{i}"),
                    PhDistribution::exponential(r).unwrap(),
                )
            })
            .collect();
        build_module_wear_generator(&ModuleSpec::new(name, units, st)).unwrap()
    }

    #[test]
    fn single_module_selector_marks_exactly_the_critical_states() {
        let m = exp_module("m", &[1.0, 1.0, 1.0], StructureSpec::KOutOfN(2));
        let sys = build_system_generator(vec![m], StructureSpec::Series).unwrap();
        let sel = build_selector(&sys, 0);
        assert_eq!(sel.diag(), &[0.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn series_selector_excludes_module_down() {
        let m1 = exp_module("a", &[1.0, 1.0, 1.0], StructureSpec::KOutOfN(2));
        let m2 = exp_module("b", &[2.0, 2.0], StructureSpec::Parallel);
        let sys = build_system_generator(vec![m1, m2], StructureSpec::Series).unwrap();
        for i in 0..2 {
            let sel = build_selector(&sys, i);
            let m = &sys.modules()[i];
            // All operational states admitted, module-down excluded.
            for s in 0..m.ext_op_count() {
                assert!(sel.admits(s), "module {i} state {s}");
            }
            assert!(!sel.admits(m.ext_op_count()));
        }
    }

    #[test]
    fn parallel_selector_admits_module_down() {
        let m1 = exp_module("a", &[1.0], StructureSpec::Series);
        let m2 = exp_module("b", &[2.0], StructureSpec::Series);
        let sys = build_system_generator(vec![m1, m2], StructureSpec::Parallel).unwrap();
        let sel = build_selector(&sys, 0);
        // Critical system states are (up;F) and (F;up): module 0 shows up both
        // operational and down, so its whole diagonal is admitted.
        assert!(sel.admits(0));
        assert!(sel.admits(1));
    }
}
