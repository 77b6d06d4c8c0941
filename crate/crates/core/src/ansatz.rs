//! Variational ansätze behind a name-keyed registry.
//!
//! Every method owns its initial state, its per-layer evolution and the
//! energy table its dynamics see. Reported energies always use the plain
//! cost table, so penalized and constrained methods compare on equal terms.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    build_phi_i, build_phi_ii, dicke_gate_counts, phi_i_counts, plus_state, x_layer_counts, x_qaoa_step,
    xy_layers, xy_mixer_counts, xy_mixer_step, PenaltyProblem, DEFAULT_PENALTY,
};
use crate::error::{Error, Result};
use crate::evolution::{
    apply_mixer, apply_phase, synthesize_mixer_circuit, synthesize_phase_circuit, ExactMixer, IsingForm, MixerLayout,
    MixerOp,
};
use crate::ladder::{hopping_scale, LadderDriver, OrbitalSelection};
use crate::problem::{build_diagonal, DiagonalHamiltonian, PortfolioInstance};
use crate::schedule::Schedule;
use crate::sim::{Circuit, GateCounts, StateVector};
use crate::stateprep::{givens_decompose, prepare_slater_state, synthesize_init_circuit, SlaterDecomposition};

/// Instance plus its enumerated cost table, shared by every ansatz built on it.
#[derive(Clone, Debug)]
pub struct Problem {
    pub instance: PortfolioInstance,
    pub ham: DiagonalHamiltonian,
}

impl Problem {
    pub fn new(instance: PortfolioInstance) -> Result<Arc<Self>> {
        instance.validate()?;
        let ham = build_diagonal(&instance)?;
        Ok(Arc::new(Self { instance, ham }))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixerBackend {
    #[default]
    Trotter,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzOptions {
    /// Penalty amplitude `A` for methods that need one.
    pub penalty: f64,
    pub mixer: MixerBackend,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        Self { penalty: DEFAULT_PENALTY, mixer: MixerBackend::Trotter }
    }
}

/// Gate totals per circuit component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCounts {
    pub init: GateCounts,
    pub phase: GateCounts,
    pub mixer: GateCounts,
}

impl ComponentCounts {
    pub fn total(&self, p: usize) -> GateCounts {
        self.init + (self.phase + self.mixer) * p as i64
    }
}

/// Synthesized circuits of the initial state and one layer.
#[derive(Clone, Debug)]
pub struct ComponentCircuits {
    pub init: Circuit,
    pub phase: Circuit,
    pub mixer: Circuit,
}

impl ComponentCircuits {
    pub fn counts(&self) -> ComponentCounts {
        ComponentCounts { init: self.init.counts(), phase: self.phase.counts(), mixer: self.mixer.counts() }
    }
}

pub trait Ansatz: Send + Sync {
    fn name(&self) -> &'static str;

    fn problem(&self) -> &Problem;

    /// True when every layer keeps the state inside the feasible sector.
    fn hard_constraint(&self) -> bool;

    /// True when the initial state is the driver ground state, so the
    /// discretized anneal is a meaningful schedule.
    fn supports_fixed_angle(&self) -> bool;

    fn initial_state(&self) -> Result<StateVector>;

    /// One layer: phase by `gamma`, then mixer by `beta`.
    fn layer(&self, state: &mut StateVector, gamma: f64, beta: f64) -> Result<()>;

    /// Energy table driving the phase separator (and the optimizer).
    fn objective(&self) -> &[f64];

    /// `gamma` per unit of optimizer parameter.
    fn gamma_unit(&self) -> f64 {
        1.0 / self.problem().ham.w
    }

    /// `beta` per unit of optimizer parameter; `1/W` when the mixer is
    /// scaled to the cost range, `1` for mixers with unit couplings.
    fn beta_unit(&self) -> f64;

    fn gate_counts(&self) -> Result<ComponentCounts>;

    /// Free-form metadata recorded with each run.
    fn notes(&self) -> Vec<String> {
        Vec::new()
    }

    fn prepare(&self, schedule: &Schedule) -> Result<StateVector> {
        let mut state = self.initial_state()?;
        for (&g, &b) in schedule.gammas.iter().zip(&schedule.betas) {
            self.layer(&mut state, g, b)?;
        }
        Ok(state)
    }
}

impl fmt::Debug for dyn Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ansatz({})", self.name())
    }
}

/// `<H_p>` of the prepared state and the state itself.
pub fn evaluate_ansatz(ansatz: &dyn Ansatz, schedule: &Schedule) -> Result<(f64, StateVector)> {
    let state = ansatz.prepare(schedule)?;
    let e = state.expectation_diagonal(&ansatz.problem().ham.energies)?;
    if !e.is_finite() {
        return Err(Error::NonFinite("ansatz energy"));
    }
    Ok((e, state))
}

pub type AnsatzBuilder = fn(Arc<Problem>, &AnsatzOptions) -> Result<Box<dyn Ansatz>>;

#[derive(Clone)]
pub struct AnsatzRegistry {
    builders: BTreeMap<String, AnsatzBuilder>,
}

impl AnsatzRegistry {
    pub fn empty() -> Self {
        Self { builders: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, builder: AnsatzBuilder) {
        self.builders.insert(name.to_string(), builder);
    }

    pub fn names(&self) -> Vec<String> {
        self.builders.keys().cloned().collect()
    }

    pub fn build(&self, name: &str, problem: Arc<Problem>, opts: &AnsatzOptions) -> Result<Box<dyn Ansatz>> {
        let builder = self.builders.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: "method",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        builder(problem, opts)
    }
}

impl Default for AnsatzRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("fqaoa", |p, o| Ok(Box::new(Fqaoa::new(p, o.mixer)?)));
        r.register("x_qaoa", |p, o| Ok(Box::new(XQaoa::new(p, o.penalty)?)));
        r.register("xy_qaoa_1", |p, _| Ok(Box::new(XyQaoa::new(p, XyInitial::PhiI)?)));
        r.register("xy_qaoa_2", |p, _| Ok(Box::new(XyQaoa::new(p, XyInitial::PhiII)?)));
        r
    }
}

enum Mixer {
    Trotter(Vec<MixerOp>),
    Exact(ExactMixer),
}

/// Free-fermion driver on the ladder, started from its ground state.
pub struct Fqaoa {
    problem: Arc<Problem>,
    pub driver: LadderDriver,
    pub selection: OrbitalSelection,
    pub decomposition: SlaterDecomposition,
    mixer: Mixer,
    initial: StateVector,
}

impl Fqaoa {
    pub fn new(problem: Arc<Problem>, backend: MixerBackend) -> Result<Self> {
        let shape = problem.instance.shape();
        let m_prime = problem.instance.m_prime();
        let (t_par, t_perp) = hopping_scale(problem.ham.w, shape, m_prime)?;
        let driver = LadderDriver::new(shape, t_par, t_perp)?;
        let selection = driver.select_occupied(m_prime)?;
        let decomposition = givens_decompose(&driver.occupied_orbitals(&selection))?;
        let initial = prepare_slater_state(&decomposition)?;
        let layout = MixerLayout::new(shape).ok();
        let mixer = match (backend, layout) {
            (MixerBackend::Trotter, Some(l)) => Mixer::Trotter(l.sequence(t_par, t_perp)),
            (MixerBackend::Trotter, None) => {
                return Err(Error::Incompatible {
                    method: "fqaoa".into(),
                    reason: format!("the swap-network mixer needs even N and D, got {}x{}", shape.n, shape.d),
                })
            }
            (MixerBackend::Exact, _) => Mixer::Exact(ExactMixer::new(&driver)?),
        };
        Ok(Self { problem, driver, selection, decomposition, mixer, initial })
    }

    /// Gate-level circuits of the initial state and of one layer at `(gamma, beta)`.
    pub fn circuits(&self, gamma: f64, beta: f64) -> Result<ComponentCircuits> {
        synthesize_components(&self.problem.instance, &self.driver, &self.decomposition, gamma, beta)
    }
}

fn synthesize_components(
    instance: &PortfolioInstance,
    driver: &LadderDriver,
    decomposition: &SlaterDecomposition,
    gamma: f64,
    beta: f64,
) -> Result<ComponentCircuits> {
    let layout = MixerLayout::new(instance.shape()).map_err(|_| Error::Incompatible {
        method: "fqaoa".into(),
        reason: "circuit synthesis needs the swap-network layout (even N and D)".into(),
    })?;
    let form = IsingForm::from_instance(instance, None);
    Ok(ComponentCircuits {
        init: synthesize_init_circuit(decomposition),
        phase: synthesize_phase_circuit(gamma, &form),
        mixer: synthesize_mixer_circuit(beta, &layout, driver.t_par, driver.t_perp)?,
    })
}

/// Fermionic ansatz circuits at unit hopping; gate counts do not depend on
/// the hopping scale, so this also covers budgets with a single feasible string.
pub fn reference_circuits(instance: &PortfolioInstance) -> Result<ComponentCircuits> {
    instance.validate()?;
    let driver = LadderDriver::new(instance.shape(), 1.0, 1.0)?;
    let selection = driver.select_occupied(instance.m_prime())?;
    let decomposition = givens_decompose(&driver.occupied_orbitals(&selection))?;
    synthesize_components(instance, &driver, &decomposition, 1.0, 1.0)
}

impl Ansatz for Fqaoa {
    fn name(&self) -> &'static str {
        "fqaoa"
    }

    fn problem(&self) -> &Problem {
        &self.problem
    }

    fn hard_constraint(&self) -> bool {
        true
    }

    fn supports_fixed_angle(&self) -> bool {
        true
    }

    fn initial_state(&self) -> Result<StateVector> {
        Ok(self.initial.clone())
    }

    fn layer(&self, state: &mut StateVector, gamma: f64, beta: f64) -> Result<()> {
        apply_phase(state, gamma, &self.problem.ham)?;
        match &self.mixer {
            Mixer::Trotter(ops) => apply_mixer(state, beta, ops),
            Mixer::Exact(m) => m.apply(state, beta),
        }
    }

    fn objective(&self) -> &[f64] {
        &self.problem.ham.energies
    }

    fn beta_unit(&self) -> f64 {
        // hopping is scaled so the driver's sector range equals W
        1.0 / self.problem.ham.w
    }

    fn gate_counts(&self) -> Result<ComponentCounts> {
        Ok(self.circuits(1.0, 1.0)?.counts())
    }

    fn notes(&self) -> Vec<String> {
        let mut out = vec![format!("hopping t = {:.12e}", self.driver.t_par)];
        if !self.selection.closed_shell {
            out.push("open shell: degenerate Fermi level, filled by (energy, m, k) order".into());
        }
        if let Mixer::Exact(_) = self.mixer {
            out.push("exact mixer backend".into());
        }
        out
    }
}

/// Transverse-field mixer from `|+>^n` with a quadratic budget penalty.
pub struct XQaoa {
    problem: Arc<Problem>,
    pub penalty: PenaltyProblem,
}

impl XQaoa {
    pub fn new(problem: Arc<Problem>, amplitude: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty amplitude must be >= 0, got {amplitude}")));
        }
        let penalty = PenaltyProblem::new(&problem.ham, problem.instance.m, amplitude);
        Ok(Self { problem, penalty })
    }
}

impl Ansatz for XQaoa {
    fn name(&self) -> &'static str {
        "x_qaoa"
    }

    fn problem(&self) -> &Problem {
        &self.problem
    }

    fn hard_constraint(&self) -> bool {
        false
    }

    fn supports_fixed_angle(&self) -> bool {
        true
    }

    fn initial_state(&self) -> Result<StateVector> {
        plus_state(self.problem.ham.num_qubits())
    }

    fn layer(&self, state: &mut StateVector, gamma: f64, beta: f64) -> Result<()> {
        x_qaoa_step(state, gamma, beta, &self.penalty)
    }

    fn objective(&self) -> &[f64] {
        &self.penalty.penalized
    }

    fn beta_unit(&self) -> f64 {
        1.0
    }

    fn gate_counts(&self) -> Result<ComponentCounts> {
        let n = self.problem.ham.num_qubits();
        Ok(ComponentCounts { init: x_layer_counts(n), phase: crate::evolution::phase_counts(n), mixer: x_layer_counts(n) })
    }

    fn notes(&self) -> Vec<String> {
        vec![format!("penalty A = {}", self.penalty.amplitude)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XyInitial {
    PhiI,
    PhiII,
}

/// Ring-exchange mixer along each leg of a two-leg ladder.
pub struct XyQaoa {
    problem: Arc<Problem>,
    kind: XyInitial,
    layers: [Vec<(usize, usize)>; 3],
    initial: StateVector,
}

impl XyQaoa {
    pub fn new(problem: Arc<Problem>, kind: XyInitial) -> Result<Self> {
        let shape = problem.instance.shape();
        let name = match kind {
            XyInitial::PhiI => "xy_qaoa_1",
            XyInitial::PhiII => "xy_qaoa_2",
        };
        let incompatible = |reason: String| Error::Incompatible { method: name.into(), reason };
        if shape.d != 2 {
            return Err(incompatible(format!("needs D = 2, got D = {}", shape.d)));
        }
        let budget = problem.instance.m;
        if budget < 0 || budget as usize > shape.n {
            return Err(incompatible(format!("needs 0 <= M <= N, got M = {budget}")));
        }
        let layers = xy_layers(shape).map_err(|e| incompatible(e.to_string()))?;
        let initial = match kind {
            XyInitial::PhiI => build_phi_i(shape, budget as usize)?,
            XyInitial::PhiII => build_phi_ii(shape, budget as usize)?,
        };
        Ok(Self { problem, kind, layers, initial })
    }
}

impl Ansatz for XyQaoa {
    fn name(&self) -> &'static str {
        match self.kind {
            XyInitial::PhiI => "xy_qaoa_1",
            XyInitial::PhiII => "xy_qaoa_2",
        }
    }

    fn problem(&self) -> &Problem {
        &self.problem
    }

    fn hard_constraint(&self) -> bool {
        true
    }

    fn supports_fixed_angle(&self) -> bool {
        false
    }

    fn initial_state(&self) -> Result<StateVector> {
        Ok(self.initial.clone())
    }

    fn layer(&self, state: &mut StateVector, gamma: f64, beta: f64) -> Result<()> {
        apply_phase(state, gamma, &self.problem.ham)?;
        xy_mixer_step(state, beta, &self.layers)
    }

    fn objective(&self) -> &[f64] {
        &self.problem.ham.energies
    }

    fn beta_unit(&self) -> f64 {
        1.0
    }

    fn gate_counts(&self) -> Result<ComponentCounts> {
        let (n, m) = (self.problem.instance.n, self.problem.instance.m as usize);
        let init = match self.kind {
            XyInitial::PhiI => phi_i_counts(n, m),
            XyInitial::PhiII => dicke_gate_counts(n, m)?.phi_ii,
        };
        Ok(ComponentCounts {
            init,
            phase: crate::evolution::phase_counts(2 * n),
            mixer: xy_mixer_counts(n),
        })
    }

    fn notes(&self) -> Vec<String> {
        match self.kind {
            XyInitial::PhiI => vec![format!("long stocks 1..={}", self.problem.instance.m)],
            XyInitial::PhiII => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_instance, RiskModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(n: usize, d: usize, m: i64, seed: u64) -> Arc<Problem> {
        Problem::new(generate_instance(seed, n, d, m, 0.9, &RiskModel::default()).unwrap()).unwrap()
    }

    #[test]
    fn registry_lists_and_rejects() {
        let reg = AnsatzRegistry::default();
        assert_eq!(reg.names(), vec!["fqaoa", "x_qaoa", "xy_qaoa_1", "xy_qaoa_2"]);
        let err = reg.build("qaoa", problem(4, 2, 2, 0), &AnsatzOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownStrategy { .. }));
    }

    #[test]
    fn xy_needs_two_legs() {
        let reg = AnsatzRegistry::default();
        let err = reg.build("xy_qaoa_2", problem(2, 4, 1, 0), &AnsatzOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Incompatible { .. }));
    }

    #[test]
    fn identity_layers_match_p0() {
        let reg = AnsatzRegistry::default();
        let prob = problem(4, 2, 1, 3);
        for name in reg.names() {
            let a = reg.build(&name, prob.clone(), &AnsatzOptions::default()).unwrap();
            let (e0, _) = evaluate_ansatz(a.as_ref(), &Schedule::new(vec![], vec![]).unwrap()).unwrap();
            let (e3, _) = evaluate_ansatz(a.as_ref(), &Schedule::new(vec![0.0; 3], vec![0.0; 3]).unwrap()).unwrap();
            assert!((e0 - e3).abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn p0_energy_matches_determinant_oracle() {
        let prob = problem(4, 2, 1, 5);
        let a = Fqaoa::new(prob.clone(), MixerBackend::Trotter).unwrap();
        let oracle = crate::stateprep::slater_amplitudes(&a.driver.occupied_orbitals(&a.selection)).unwrap();
        let expect = oracle.expectation_diagonal(&prob.ham.energies).unwrap();
        let (e, _) = evaluate_ansatz(&a, &Schedule::new(vec![], vec![]).unwrap()).unwrap();
        assert!((e - expect).abs() < 1e-12);
    }

    #[test]
    fn constrained_methods_stay_in_sector() {
        let reg = AnsatzRegistry::default();
        let prob = problem(4, 2, 1, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = prob.ham.w;
        for name in ["fqaoa", "xy_qaoa_1", "xy_qaoa_2"] {
            let a = reg.build(name, prob.clone(), &AnsatzOptions::default()).unwrap();
            let g: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..6.0) / w).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..6.0) / w).collect();
            let s = a.prepare(&Schedule::new(g, b).unwrap()).unwrap();
            assert!((s.sector_weight(prob.ham.m_prime).unwrap() - 1.0).abs() < 1e-10, "{name}");
            assert!((s.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_backend_tracks_trotter_at_small_angles() {
        let prob = problem(6, 2, 3, 2);
        let t = Fqaoa::new(prob.clone(), MixerBackend::Trotter).unwrap();
        let x = Fqaoa::new(prob.clone(), MixerBackend::Exact).unwrap();
        let s = Schedule::fixed_angles(20, 0.05 / prob.ham.w).unwrap();
        let (et, _) = evaluate_ansatz(&t, &s).unwrap();
        let (ex, _) = evaluate_ansatz(&x, &s).unwrap();
        assert!((et - ex).abs() / prob.ham.w < 1e-4);
    }

    #[test]
    fn anchor_counts() {
        let a = Fqaoa::new(problem(8, 2, 4, 0), MixerBackend::Trotter).unwrap();
        let c = a.gate_counts().unwrap();
        assert_eq!(c.init, GateCounts::new(52, 144));
        assert_eq!(c.phase, GateCounts::new(136, 240));
        assert_eq!(c.mixer, GateCounts::new(368, 272));
        assert_eq!(c.total(1), GateCounts::new(556, 656));
    }

    #[test]
    fn xy_i_counts_match_table() {
        let a = XyQaoa::new(problem(8, 2, 4, 0), XyInitial::PhiI).unwrap();
        assert_eq!(a.gate_counts().unwrap().total(4), GateCounts::new(936, 1092));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn layers_are_unitary_and_keep_the_budget(
            seed in 0u64..1000,
            m in 1i64..=3,
            angles in proptest::collection::vec(-10.0f64..10.0, 2..=8),
        ) {
            let prob = problem(4, 2, m, seed);
            let m_prime = prob.instance.m_prime();
            let half = angles.len() / 2;
            let schedule = Schedule::new(angles[..half].to_vec(), angles[half..2 * half].to_vec()).unwrap();
            let reg = AnsatzRegistry::default();
            for name in ["fqaoa", "xy_qaoa_1", "xy_qaoa_2", "x_qaoa"] {
                let a = reg.build(name, prob.clone(), &AnsatzOptions::default()).unwrap();
                let s = a.prepare(&schedule).unwrap();
                proptest::prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12, "{}", name);
                if a.hard_constraint() {
                    proptest::prop_assert!((s.sector_weight(m_prime).unwrap() - 1.0).abs() < 1e-10, "{}", name);
                }
            }
        }
    }
}
