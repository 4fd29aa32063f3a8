use markov_core::{transient_occupancy, transient_vec, Matrix, ProbVector, PROB_TOL};
use moma_builder::{ModuleModel, SystemModel};
use serde::{Deserialize, Serialize};

use crate::cost::{CostParams, DownCostForm};
use crate::error::{PolicyError, Result};
use crate::policy::{build_cost_matrix, build_maintenance_matrix, expected_row_costs};
use crate::quad::integrate;
use crate::selector::{build_selector, SelectorMatrix};

/// Absolute tolerance of the downtime quadrature.
pub const DOWNTIME_QUAD_TOL: f64 = 1e-9;

/// Who is charged the inspection cost when the system turns out critical:
/// either every module row carries it (the cost matrices as constructed), or
/// it is charged once globally and stripped from the module rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Accounting {
    PerModule,
    Global,
}

/// How the critical-state and down-state expectations are composed. The
/// formula form multiplies per-module marginal costs (and the unconditional
/// downtime integral) by the class probability; the joint form evaluates the
/// realized-state cost state by state, which is what a path simulation
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectationForm {
    Verbatim,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub accounting: Accounting,
    pub form: ExpectationForm,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            accounting: Accounting::PerModule,
            form: ExpectationForm::Verbatim,
        }
    }
}

/// Law of the system (and its modules) at the start of an operating cycle.
#[derive(Debug, Clone)]
pub struct CycleLaw {
    pub cycle: usize,
    /// Over all system states (down state last); supported on the optimal
    /// class for every post-inspection cycle.
    pub system_law: ProbVector,
    /// Marginal module laws over each module's extended states (down last).
    pub module_laws: Vec<ProbVector>,
}

impl CycleLaw {
    pub fn initial(system: &SystemModel) -> Self {
        let system_law = system.alpha_sys().clone();
        let module_laws = marginals(system, system_law.entries());
        CycleLaw {
            cycle: 0,
            system_law,
            module_laws,
        }
    }
}

fn marginals(system: &SystemModel, law: &[f64]) -> Vec<ProbVector> {
    (0..system.modules().len())
        .map(|i| {
            ProbVector::sub_stochastic(system.marginal_module_law(law, i))
                .expect("marginal law is a probability vector")
        })
        .collect()
}

/// Class occupation probabilities at the end of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseProbabilities {
    pub optimal: f64,
    pub critical: f64,
    pub down: f64,
}

/// Cost of one expected cycle, with its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCost {
    pub total: f64,
    pub cases: CaseProbabilities,
    pub down_cost: f64,
    pub module_costs: Vec<f64>,
}

/// Precomputed maintenance machinery for one system: maintenance and cost
/// matrices, selectors and expected row costs per module.
#[derive(Debug, Clone)]
pub struct MaintenancePolicy {
    system: SystemModel,
    costs: CostParams,
    maintenance: Vec<Matrix>,
    cost_matrices: Vec<Matrix>,
    selectors: Vec<SelectorMatrix>,
    /// (M ⊙ C) e per module, inspection cost included in every row.
    row_costs: Vec<Vec<f64>>,
    /// Same with the inspection cost stripped (rows sum to cost minus C_I).
    row_costs_stripped: Vec<Vec<f64>>,
    /// Exit rates of the operative states into the absorbing down state.
    exit_rates: Vec<f64>,
}

impl MaintenancePolicy {
    pub fn new(system: SystemModel, costs: CostParams) -> Result<Self> {
        costs.validate(&system)?;
        let maintenance: Vec<Matrix> = system
            .modules()
            .iter()
            .map(build_maintenance_matrix)
            .collect::<Result<_>>()?;
        let cost_matrices: Vec<Matrix> = system
            .modules()
            .iter()
            .zip(&maintenance)
            .enumerate()
            .map(|(i, (m, mm))| build_cost_matrix(m, mm, &costs, i))
            .collect::<Result<_>>()?;
        let selectors = (0..system.modules().len())
            .map(|i| build_selector(&system, i))
            .collect();
        let row_costs: Vec<Vec<f64>> = maintenance
            .iter()
            .zip(&cost_matrices)
            .map(|(m, c)| expected_row_costs(m, c))
            .collect();
        let row_costs_stripped = row_costs
            .iter()
            .map(|rc| rc.iter().map(|v| v - costs.inspection).collect())
            .collect();
        let exit_rates = (0..system.up_count())
            .map(|s| system.q_sys().get(s, system.down_index()))
            .collect();
        Ok(MaintenancePolicy {
            system,
            costs,
            maintenance,
            cost_matrices,
            selectors,
            row_costs,
            row_costs_stripped,
            exit_rates,
        })
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn costs(&self) -> &CostParams {
        &self.costs
    }

    pub fn maintenance_matrix(&self, i: usize) -> &Matrix {
        &self.maintenance[i]
    }

    pub fn cost_matrix(&self, i: usize) -> &Matrix {
        &self.cost_matrices[i]
    }

    pub fn selector(&self, i: usize) -> &SelectorMatrix {
        &self.selectors[i]
    }

    /// Expected repair cost of module `i` given its realized extended state,
    /// inspection cost included (`strip` removes it).
    pub fn realized_module_cost(&self, i: usize, state: usize, strip: bool) -> f64 {
        if strip {
            self.row_costs_stripped[i][state]
        } else {
            self.row_costs[i][state]
        }
    }

    /// Class probabilities of the state at cycle end given the cycle-start law.
    pub fn case_probabilities(&self, law: &CycleLaw, tau: f64) -> Result<CaseProbabilities> {
        let v = transient_vec(law.system_law.entries(), self.system.q_sys(), tau)?;
        Ok(self.split_cases(&v))
    }

    fn split_cases(&self, v: &[f64]) -> CaseProbabilities {
        let n_u1 = self.system.u1_count();
        let n_up = self.system.up_count();
        CaseProbabilities {
            optimal: v[..n_u1].iter().sum(),
            critical: v[n_u1..n_up].iter().sum(),
            down: v[n_up],
        }
    }

    /// Post-inspection law of one module:
    /// evolve over the cycle, then apply the maintenance matrix.
    pub fn post_inspection_module_law(
        &self,
        prev: &ProbVector,
        module: usize,
        tau: f64,
    ) -> Result<ProbVector> {
        post_inspection_module_law(
            prev,
            &self.system.modules()[module],
            tau,
            &self.maintenance[module],
        )
    }

    /// Advances the cycle law across one inspection: the three-case mixture
    /// at system level, module laws re-derived from it by marginalization.
    pub fn post_inspection_system_law(&self, prev: &CycleLaw, tau: f64) -> Result<CycleLaw> {
        let n_u1 = self.system.u1_count();
        let n_up = self.system.up_count();
        let total = n_up + 1;
        let v = transient_vec(prev.system_law.entries(), self.system.q_sys(), tau)?;
        let cases = self.split_cases(&v);

        // Case 1: conditional law on the optimal class, no intervention.
        let mut optimal_law = vec![0.0; total];
        if cases.optimal > 0.0 {
            for (s, slot) in optimal_law.iter_mut().enumerate().take(n_u1) {
                *slot = v[s] / cases.optimal;
            }
        }

        // Case 2: per-module maintained laws composed over the optimal class.
        let mut critical_law = vec![0.0; total];
        if cases.critical > 0.0 {
            let mut kron = vec![1.0];
            for (i, m) in self.system.modules().iter().enumerate() {
                let law = self.post_inspection_module_law(&prev.module_laws[i], i, tau)?;
                let opt = &law.entries()[..m.ext_optimal_count()];
                let mut next = Vec::with_capacity(kron.len() * opt.len());
                for &a in &kron {
                    for &b in opt {
                        next.push(a * b);
                    }
                }
                kron = next;
            }
            debug_assert_eq!(kron.len(), n_u1);
            critical_law[..n_u1].copy_from_slice(&kron);
        }

        // Case 3: full replacement.
        let replacement = self.system.beta_sys();

        let mut mixture = vec![0.0; total];
        for s in 0..total {
            mixture[s] = cases.optimal * optimal_law[s]
                + cases.critical * critical_law[s]
                + cases.down * replacement.get(s);
        }
        // The mixture is stochastic in exact arithmetic; remove the float
        // drift of the long vector products so it cannot accumulate across
        // cycles. Anything beyond drift scale is a real error.
        let mass: f64 = mixture.iter().sum();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(PolicyError::Maintenance(format!(
                "post-inspection law has mass {mass}, expected 1"
            )));
        }
        mixture.iter_mut().for_each(|v| *v /= mass);
        let system_law = ProbVector::new(mixture).map_err(|e| {
            PolicyError::Maintenance(format!("post-inspection law is not stochastic: {e}"))
        })?;
        let module_laws = marginals(&self.system, system_law.entries());
        Ok(CycleLaw {
            cycle: prev.cycle + 1,
            system_law,
            module_laws,
        })
    }

    /// Expected downtime cost over one cycle started from `law`:
    /// quadrature of (failure density) x (downtime cost form).
    pub fn expected_down_cost(&self, law: &CycleLaw, tau: f64) -> Result<f64> {
        if tau <= 0.0 || self.costs.down_rate == 0.0 {
            if let DownCostForm::Linear = self.costs.down_cost_form {
                return Ok(0.0);
            }
        }
        let q = self.system.q_sys();
        let start = law.system_law.entries();
        let form = &self.costs.down_cost_form;
        let rate = self.costs.down_rate;
        let density = |t: f64| -> f64 {
            let v = transient_vec(start, q, t).expect("transient law");
            v[..self.system.up_count()]
                .iter()
                .zip(&self.exit_rates)
                .map(|(p, r)| p * r)
                .sum()
        };
        Ok(integrate(
            |t| density(t) * form.cost_at(t, tau, rate),
            0.0,
            tau,
            DOWNTIME_QUAD_TOL,
        ))
    }

    /// Closed form of the linear downtime cost:
    /// `C_down * ∫_0^tau F(t) dt = C_down * (tau - ∫_0^tau R(t) dt)`.
    pub fn expected_down_cost_linear(&self, law: &CycleLaw, tau: f64) -> Result<f64> {
        let occ = transient_occupancy(law.system_law.entries(), self.system.q_sys(), tau)?;
        let survived: f64 = occ[..self.system.up_count()].iter().sum();
        // Initial mass already absorbed contributes tau * mass.
        let alive0: f64 = law.system_law.entries()[..self.system.up_count()]
            .iter()
            .sum();
        let absorbed_time = tau * alive0 - survived + tau * (1.0 - alive0);
        Ok(self.costs.down_rate * absorbed_time)
    }

    fn down_cost_for(&self, law: &CycleLaw, tau: f64) -> Result<f64> {
        match self.costs.down_cost_form {
            // The linear identity is exact and cheap; the quadrature route is
            // kept as the general path and cross-checked in the test suite.
            DownCostForm::Linear => self.expected_down_cost_linear(law, tau),
            DownCostForm::Tabulated(_) => self.expected_down_cost(law, tau),
        }
    }

    /// Expected maintenance cost of module `i` at the end of a cycle:
    /// evolved module law, masked by the selector, against the expected
    /// per-row repair costs.
    pub fn module_cost(
        &self,
        prev_module_law: &ProbVector,
        module: usize,
        tau: f64,
        strip_inspection: bool,
    ) -> Result<f64> {
        let m = &self.system.modules()[module];
        let evolved = transient_vec(prev_module_law.entries(), m.q_ext(), tau)?;
        let sel = &self.selectors[module];
        let rc = if strip_inspection {
            &self.row_costs_stripped[module]
        } else {
            &self.row_costs[module]
        };
        Ok(evolved
            .iter()
            .zip(sel.diag())
            .zip(rc)
            .map(|((p, d), c)| p * d * c)
            .sum())
    }

    /// Expected cost of the cycle that starts from `law` and is inspected at
    /// `tau`, under the configured accounting and expectation form.
    pub fn expected_cycle_cost(
        &self,
        law: &CycleLaw,
        tau: f64,
        opts: EvalOptions,
    ) -> Result<CycleCost> {
        let v = transient_vec(law.system_law.entries(), self.system.q_sys(), tau)?;
        let cases = self.split_cases(&v);
        let c_i = self.costs.inspection;
        let strip = matches!(opts.accounting, Accounting::Global);

        let module_costs: Vec<f64> = (0..self.system.modules().len())
            .map(|i| self.module_cost(&law.module_laws[i], i, tau, strip))
            .collect::<Result<_>>()?;

        let down_cost = self.down_cost_for(law, tau)?;

        let critical_term = match opts.form {
            ExpectationForm::Verbatim => {
                let sum: f64 = module_costs.iter().sum();
                let base = if strip { c_i + sum } else { sum };
                base * cases.critical
            }
            ExpectationForm::Joint => {
                let n_u1 = self.system.u1_count();
                let n_up = self.system.up_count();
                let mut acc = 0.0;
                for s in n_u1..n_up {
                    if v[s] == 0.0 {
                        continue;
                    }
                    let mut state_cost = if strip { c_i } else { 0.0 };
                    for (i, comp) in self.system.components(s).iter().enumerate() {
                        let ext = comp.unwrap_or_else(|| self.system.modules()[i].ext_op_count());
                        state_cost += self.realized_module_cost(i, ext, strip);
                    }
                    acc += v[s] * state_cost;
                }
                acc
            }
        };

        let down_term = match opts.form {
            ExpectationForm::Verbatim => {
                (c_i + down_cost + self.costs.system_replacement) * cases.down
            }
            ExpectationForm::Joint => {
                (c_i + self.costs.system_replacement) * cases.down + down_cost
            }
        };

        let total = c_i * cases.optimal + critical_term + down_term;
        Ok(CycleCost {
            total,
            cases,
            down_cost,
            module_costs,
        })
    }

    /// Total expected cost of `inspections` consecutive cycles of length
    /// `tau`, driving the cycle-law recursion.
    pub fn total_expected_cost(
        &self,
        tau: f64,
        inspections: usize,
        opts: EvalOptions,
    ) -> Result<(f64, Vec<CycleCost>)> {
        let mut law = CycleLaw::initial(&self.system);
        let mut cycle_costs = Vec::with_capacity(inspections);
        let mut total = 0.0;
        for _ in 0..inspections {
            let cc = self.expected_cycle_cost(&law, tau, opts)?;
            total += cc.total;
            cycle_costs.push(cc);
            law = self.post_inspection_system_law(&law, tau)?;
        }
        Ok((total, cycle_costs))
    }
}

/// One module's post-inspection law: `prev * exp(Q_ext tau) * M`.
pub fn post_inspection_module_law(
    prev: &ProbVector,
    model: &ModuleModel,
    tau: f64,
    maintenance: &Matrix,
) -> Result<ProbVector> {
    let evolved = transient_vec(prev.entries(), model.q_ext(), tau)?;
    let maintained = maintenance.vecmat(&evolved)?;
    let law = ProbVector::sub_stochastic(maintained)?;
    debug_assert!((law.sum() - prev.sum()).abs() < PROB_TOL * 10.0);
    Ok(law)
}
