use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use markov_core::{kron_sum, MapProcess, Matrix, PhDistribution, ProbVector};

use crate::error::{BuildError, Result};
use crate::structure::StructureSpec;

/// State of one unit inside a combined module state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitState {
    /// Operational phase index.
    Op(usize),
    Failed,
}

impl UnitState {
    fn label(&self, phase_labels: &[String]) -> String {
        match self {
            UnitState::Op(p) => phase_labels[*p].clone(),
            UnitState::Failed => "F".into(),
        }
    }
}

/// One unit: a phase-type lifetime plus names for its operational phases.
#[derive(Debug, Clone)]
pub struct UnitSpec {
    pub name: String,
    pub lifetime: PhDistribution,
    pub phase_labels: Vec<String>,
}

impl UnitSpec {
    pub fn new(name: impl Into<String>, lifetime: PhDistribution) -> Self {
        let labels = (0..lifetime.order()).map(|p| p.to_string()).collect();
        UnitSpec {
            name: name.into(),
            lifetime,
            phase_labels: labels,
        }
    }

    pub fn with_phase_labels(mut self, labels: Vec<String>) -> Self {
        self.phase_labels = labels;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.phase_labels.len() != self.lifetime.order() {
            return Err(BuildError::Spec(format!(
                "unit {}: {} phase labels for order {}",
                self.name,
                self.phase_labels.len(),
                self.lifetime.order()
            )));
        }
        let mut seen = BTreeSet::new();
        for l in &self.phase_labels {
            if l == "F" || !seen.insert(l) {
                return Err(BuildError::Spec(format!(
                    "unit {}: phase labels must be unique and distinct from \"F\"",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Module specification: units, internal structure, optional shock process,
/// unit repair laws and the module replacement law.
#[derive(Debug, Clone)]
pub struct ModuleSpec {
    pub name: String,
    pub units: Vec<UnitSpec>,
    pub structure: StructureSpec,
    pub shock: Option<(MapProcess, f64)>,
    /// Post-maintenance law for each failed unit, over its operational phases.
    /// Defaults to the unit's initial vector.
    pub repair_laws: Vec<Option<ProbVector>>,
    /// Law used when the whole module is replaced, over the optimal states.
    /// Defaults to the Kronecker product of the unit repair laws.
    pub replacement_law: Option<ProbVector>,
    /// Optional override of the optimal-state class, as combined state labels.
    pub optimal_override: Option<BTreeSet<String>>,
}

impl ModuleSpec {
    pub fn new(name: impl Into<String>, units: Vec<UnitSpec>, structure: StructureSpec) -> Self {
        let repair = vec![None; units.len()];
        ModuleSpec {
            name: name.into(),
            units,
            structure,
            shock: None,
            repair_laws: repair,
            replacement_law: None,
            optimal_override: None,
        }
    }

    pub fn with_shock(mut self, map: MapProcess, p1: f64) -> Self {
        self.shock = Some((map, p1));
        self
    }

    pub fn with_repair_laws(mut self, laws: Vec<ProbVector>) -> Self {
        self.repair_laws = laws.into_iter().map(Some).collect();
        self
    }

    pub fn with_replacement_law(mut self, law: ProbVector) -> Self {
        self.replacement_law = Some(law);
        self
    }

    pub fn with_optimal_override(mut self, labels: BTreeSet<String>) -> Self {
        self.optimal_override = Some(labels);
        self
    }

    /// Effective repair law of unit `j`.
    pub fn repair_law(&self, j: usize) -> ProbVector {
        self.repair_laws[j]
            .clone()
            .unwrap_or_else(|| self.units[j].lifetime.alpha().clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.units.is_empty() {
            return Err(BuildError::Spec(format!("module {}: no units", self.name)));
        }
        self.structure.validate(self.units.len())?;
        for u in &self.units {
            u.validate()?;
        }
        if self.repair_laws.len() != self.units.len() {
            return Err(BuildError::Spec(format!(
                "module {}: {} repair laws for {} units",
                self.name,
                self.repair_laws.len(),
                self.units.len()
            )));
        }
        for (j, law) in self.repair_laws.iter().enumerate() {
            if let Some(law) = law {
                if law.len() != self.units[j].lifetime.order() {
                    return Err(BuildError::Spec(format!(
                        "module {}: repair law for unit {} has length {}, expected {}",
                        self.name,
                        self.units[j].name,
                        law.len(),
                        self.units[j].lifetime.order()
                    )));
                }
            }
        }
        if let Some((_, p1)) = &self.shock {
            if !(0.0..=1.0).contains(p1) {
                return Err(BuildError::Spec(format!(
                    "module {}: shock kill probability {p1} outside [0,1]",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Index partition of a module state space (down state aggregated last).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulePartition {
    /// Number of optimal states; they occupy indices `0..n_optimal`.
    pub n_optimal: usize,
    /// Total operational states; critical ones occupy `n_optimal..n_op`.
    pub n_op: usize,
}

impl ModulePartition {
    pub fn optimal(&self) -> std::ops::Range<usize> {
        0..self.n_optimal
    }

    pub fn critical(&self) -> std::ops::Range<usize> {
        self.n_optimal..self.n_op
    }

    pub fn down_index(&self) -> usize {
        self.n_op
    }
}

/// Tuples grouped by class: (optimal, critical, down).
pub type ClassifiedTuples = (
    Vec<Vec<UnitState>>,
    Vec<Vec<UnitState>>,
    Vec<Vec<UnitState>>,
);

/// Classifies combined unit-state tuples into optimal / critical / down.
///
/// The default optimal class is "operational with zero failed units"; an
/// explicit override (by combined label) may shrink it. Returns the tuples
/// ordered optimal first, then critical, then the down tuples.
pub fn classify_module_states(
    tuples: &[Vec<UnitState>],
    structure: &StructureSpec,
    optimal_override: Option<&BTreeSet<String>>,
    render: impl Fn(&[UnitState]) -> String,
) -> Result<ClassifiedTuples> {
    let mut optimal = Vec::new();
    let mut critical = Vec::new();
    let mut down = Vec::new();
    if let Some(over) = optimal_override {
        let all: BTreeSet<String> = tuples.iter().map(|t| render(t)).collect();
        for label in over {
            if !all.contains(label) {
                return Err(BuildError::Spec(format!(
                    "optimal-state override {label:?} is not a state of the module"
                )));
            }
        }
    }
    for t in tuples {
        let ups: Vec<bool> = t.iter().map(|s| !matches!(s, UnitState::Failed)).collect();
        if !structure.is_up(&ups) {
            down.push(t.clone());
            continue;
        }
        let zero_failed = ups.iter().all(|u| *u);
        let is_optimal = match optimal_override {
            Some(over) => over.contains(&render(t)),
            None => zero_failed,
        };
        if is_optimal {
            optimal.push(t.clone());
        } else {
            critical.push(t.clone());
        }
    }
    Ok((optimal, critical, down))
}

/// Built module: labeled state space, partition, wear-out generator and the
/// shock-extended generator.
#[derive(Debug, Clone)]
pub struct ModuleModel {
    pub name: String,
    units: Vec<UnitSpec>,
    /// Operational combined states (optimal first), without MAP phases.
    op_tuples: Vec<Vec<UnitState>>,
    tuple_index: BTreeMap<Vec<UnitState>, usize>,
    partition: ModulePartition,
    /// Operational-to-operational wear transitions.
    q_op: Matrix,
    /// Operational-to-down wear exit rates (down states aggregated).
    q_fail: Vec<f64>,
    /// Wear-out generator over op states plus one absorbing down state.
    q_wear: Matrix,
    /// Number of down tuples merged into the aggregated down state.
    down_tuple_count: usize,
    /// Attached shock process, if any.
    shock: Option<(MapProcess, f64)>,
    /// Shock-extended generator: (op x map phases) + aggregated down state.
    q_ext: Matrix,
    /// Initial law over the extended operational states.
    alpha_ext: ProbVector,
    /// Unit repair laws (resolved).
    repair_laws: Vec<ProbVector>,
    /// Module replacement law over the optimal states (resolved).
    replacement_law: ProbVector,
}

impl ModuleModel {
    pub fn units(&self) -> &[UnitSpec] {
        &self.units
    }

    pub fn partition(&self) -> &ModulePartition {
        &self.partition
    }

    /// MAP order of the attached shock process (1 when there is none).
    pub fn map_order(&self) -> usize {
        self.shock.as_ref().map_or(1, |(m, _)| m.order())
    }

    pub fn shock(&self) -> Option<&(MapProcess, f64)> {
        self.shock.as_ref()
    }

    /// Operational state count of the extended space (op tuples x MAP phases).
    pub fn ext_op_count(&self) -> usize {
        self.op_tuples.len() * self.map_order()
    }

    /// Number of extended states in the optimal class.
    pub fn ext_optimal_count(&self) -> usize {
        self.partition.n_optimal * self.map_order()
    }

    /// Extended state space size including the aggregated down state.
    pub fn ext_total_count(&self) -> usize {
        self.ext_op_count() + 1
    }

    pub fn op_tuples(&self) -> &[Vec<UnitState>] {
        &self.op_tuples
    }

    pub fn tuple_index(&self, tuple: &[UnitState]) -> Option<usize> {
        self.tuple_index.get(tuple).copied()
    }

    pub fn q_op(&self) -> &Matrix {
        &self.q_op
    }

    pub fn q_fail(&self) -> &[f64] {
        &self.q_fail
    }

    pub fn q_wear(&self) -> &Matrix {
        &self.q_wear
    }

    /// Shock-extended module generator (equals the wear generator when no
    /// shock process is attached).
    pub fn q_ext(&self) -> &Matrix {
        &self.q_ext
    }

    pub fn alpha_ext(&self) -> &ProbVector {
        &self.alpha_ext
    }

    pub fn repair_law(&self, j: usize) -> &ProbVector {
        &self.repair_laws[j]
    }

    pub fn replacement_law(&self) -> &ProbVector {
        &self.replacement_law
    }

    pub fn down_tuple_count(&self) -> usize {
        self.down_tuple_count
    }

    /// Label of an operational tuple state (no MAP phase).
    pub fn tuple_label(&self, idx: usize) -> String {
        render_tuple(&self.op_tuples[idx], &self.units)
    }

    /// Labels of the extended state space, down state last.
    pub fn ext_state_labels(&self) -> Vec<String> {
        let b = self.map_order();
        let mut labels = Vec::with_capacity(self.ext_total_count());
        for (idx, _) in self.op_tuples.iter().enumerate() {
            for ph in 0..b {
                let base = self.tuple_label(idx);
                if b == 1 {
                    labels.push(base);
                } else {
                    labels.push(format!("{base}|{ph}"));
                }
            }
        }
        labels.push("D".into());
        labels
    }

    /// Splits an extended state index into (tuple index, MAP phase).
    pub fn split_ext(&self, ext: usize) -> (usize, usize) {
        let b = self.map_order();
        (ext / b, ext % b)
    }

    /// Phase-type distribution of the module lifetime under wear-out and
    /// shocks: initial law over extended op states, transient block of q_ext.
    pub fn lifetime_ph(&self) -> Result<PhDistribution> {
        let n = self.ext_op_count();
        let idx: Vec<usize> = (0..n).collect();
        let t = self.q_ext.submatrix(&idx, &idx);
        Ok(PhDistribution::new(self.alpha_ext.clone(), t)?)
    }
}

fn render_tuple(tuple: &[UnitState], units: &[UnitSpec]) -> String {
    tuple
        .iter()
        .zip(units)
        .map(|(s, u)| s.label(&u.phase_labels))
        .collect::<Vec<_>>()
        .join(",")
}

/// Builds the wear-out part of a module model: combined state space from the
/// Kronecker sum of full unit generators, classified and reordered so the
/// partition is contiguous, with the down states aggregated.
pub fn build_module_wear_generator(spec: &ModuleSpec) -> Result<ModuleModel> {
    spec.validate()?;
    let n_units = spec.units.len();

    // Full product generator over all unit-state tuples, failure included.
    let mut q_full: Option<Matrix> = None;
    for unit in &spec.units {
        let m = unit.lifetime.order();
        let mut q_unit = Matrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                q_unit.set(i, j, unit.lifetime.sub_generator().get(i, j));
            }
            q_unit.set(i, m, unit.lifetime.exit_rates()[i]);
        }
        q_full = Some(match q_full {
            None => q_unit,
            Some(acc) => kron_sum(&acc, &q_unit)?,
        });
    }
    let q_full = q_full.expect("at least one unit");

    // Enumerate tuples in the Kronecker (first-unit-major) order.
    let radices: Vec<usize> = spec.units.iter().map(|u| u.lifetime.order() + 1).collect();
    let total: usize = radices.iter().product();
    let mut tuples = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut tuple = vec![UnitState::Failed; n_units];
        for j in (0..n_units).rev() {
            let r = radices[j];
            let digit = idx % r;
            idx /= r;
            tuple[j] = if digit == radices[j] - 1 {
                UnitState::Failed
            } else {
                UnitState::Op(digit)
            };
        }
        tuples.push(tuple);
    }
    let flat_index = |tuple: &[UnitState]| -> usize {
        let mut idx = 0;
        for (j, s) in tuple.iter().enumerate() {
            let digit = match s {
                UnitState::Op(p) => *p,
                UnitState::Failed => radices[j] - 1,
            };
            idx = idx * radices[j] + digit;
        }
        idx
    };

    let render = |t: &[UnitState]| render_tuple(t, &spec.units);
    let (optimal, critical, down) = classify_module_states(
        &tuples,
        &spec.structure,
        spec.optimal_override.as_ref(),
        render,
    )?;
    if optimal.is_empty() {
        return Err(BuildError::Spec(format!(
            "module {}: empty optimal class",
            spec.name
        )));
    }

    let op_tuples: Vec<Vec<UnitState>> = optimal.iter().chain(critical.iter()).cloned().collect();
    let n_op = op_tuples.len();
    let partition = ModulePartition {
        n_optimal: optimal.len(),
        n_op,
    };
    let down_flat: Vec<usize> = down.iter().map(|t| flat_index(t)).collect();

    let mut q_op = Matrix::zeros(n_op, n_op);
    let mut q_fail = vec![0.0; n_op];
    for (oi, t) in op_tuples.iter().enumerate() {
        let fi = flat_index(t);
        for (oj, u) in op_tuples.iter().enumerate() {
            q_op.set(oi, oj, q_full.get(fi, flat_index(u)));
        }
        q_fail[oi] = down_flat.iter().map(|&d| q_full.get(fi, d)).sum();
    }

    let mut q_wear = Matrix::zeros(n_op + 1, n_op + 1);
    for i in 0..n_op {
        for j in 0..n_op {
            q_wear.set(i, j, q_op.get(i, j));
        }
        q_wear.set(i, n_op, q_fail[i]);
    }

    // Initial law over operational tuples from the unit initial vectors.
    let mut alpha_op = vec![0.0; n_op];
    for (oi, t) in op_tuples.iter().enumerate() {
        let mut p = 1.0;
        for (j, s) in t.iter().enumerate() {
            p *= match s {
                UnitState::Op(ph) => spec.units[j].lifetime.alpha().get(*ph),
                UnitState::Failed => 0.0,
            };
        }
        alpha_op[oi] = p;
    }
    let alpha = ProbVector::sub_stochastic(alpha_op)?;

    let tuple_index: BTreeMap<Vec<UnitState>, usize> = op_tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();

    let repair_laws: Vec<ProbVector> = (0..n_units).map(|j| spec.repair_law(j)).collect();
    let replacement_law = resolve_replacement_law(spec, &partition, &repair_laws)?;

    let mut model = ModuleModel {
        name: spec.name.clone(),
        units: spec.units.clone(),
        op_tuples,
        tuple_index,
        partition,
        q_op,
        q_fail,
        q_wear: q_wear.clone(),
        down_tuple_count: down.len(),
        shock: None,
        q_ext: q_wear,
        alpha_ext: alpha,
        repair_laws,
        replacement_law,
    };

    if let Some((map, p1)) = spec.shock.clone() {
        model = attach_shocks(model, map, p1)?;
    }
    Ok(model)
}

fn resolve_replacement_law(
    spec: &ModuleSpec,
    partition: &ModulePartition,
    repair_laws: &[ProbVector],
) -> Result<ProbVector> {
    if let Some(law) = &spec.replacement_law {
        if law.len() != partition.n_optimal {
            return Err(BuildError::Spec(format!(
                "module {}: replacement law length {} does not match {} optimal states",
                spec.name,
                law.len(),
                partition.n_optimal
            )));
        }
        return Ok(law.clone());
    }
    // Default: Kronecker product of the unit repair laws. In the default
    // classification the optimal states are exactly the zero-failure tuples
    // in that same product order, so the lengths agree.
    let mut law = repair_laws[0].clone();
    for b in &repair_laws[1..] {
        law = law.kron(b);
    }
    if law.len() != partition.n_optimal {
        // An optimal-class override shrank the class; the product law no
        // longer lines up and the caller must supply one explicitly.
        return Err(BuildError::Spec(format!(
            "module {}: optimal-class override requires an explicit replacement law \
             ({} optimal states, default law has length {})",
            spec.name,
            partition.n_optimal,
            law.len()
        )));
    }
    Ok(law)
}

/// Extends a wear-out module model with a shock process.
///
/// Operational states become (tuple, MAP phase) pairs, phase innermost; the
/// within-block dynamics are `Q_op ⊕ (D0 + p0 D1)` and the aggregated exit
/// rate of (s, ph) is the wear exit of `s` plus `p1` times the arrival rate
/// in phase `ph`.
pub fn attach_shocks(model: ModuleModel, map: MapProcess, p1: f64) -> Result<ModuleModel> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(BuildError::Spec(format!(
            "shock kill probability {p1} outside [0,1]"
        )));
    }
    let b = map.order();
    let n_op = model.op_tuples.len();
    let d_mod = map.d0().add(&map.d1().scale(1.0 - p1))?;
    let q_s = kron_sum(&model.q_op, &d_mod)?;
    let d1_rows = map.d1().row_sums();

    let n_ext = n_op * b;
    let mut q_ext = Matrix::zeros(n_ext + 1, n_ext + 1);
    for i in 0..n_ext {
        for j in 0..n_ext {
            q_ext.set(i, j, q_s.get(i, j));
        }
        let (s, ph) = (i / b, i % b);
        q_ext.set(i, n_ext, model.q_fail[s] + p1 * d1_rows[ph]);
    }

    let alpha_ext = model.alpha_ext.kron(map.initial());

    Ok(ModuleModel {
        shock: Some((map, p1)),
        q_ext,
        alpha_ext,
        ..model
    })
}
