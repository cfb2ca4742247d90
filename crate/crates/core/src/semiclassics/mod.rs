pub mod asymptotic;
pub mod model;
pub mod plateau;
pub mod resonance;
pub mod timescales;

pub use asymptotic::{
    asi_amplitude, gaussian_decay_coherent, gaussian_decay_corrected, resonant_actions,
    stationary_phase_amplitude, stationary_points, StationaryPoint,
};
pub use model::{IntegrableModel, MultiModeModel, TopModel, TOL_RES};
pub use plateau::{
    check_nonresonant, nu_coherent, nu_random, pi_resonance_fidelity, plateau_coherent,
    plateau_coherent_general, plateau_random, plateau_random_singular,
    plateau_random_singular_with_tol, tilde_v, tilde_v_mode, SKIP_FACTOR,
};
pub use resonance::{resonance_predictor, resonance_profile, Resonance, ResonanceKind};
pub use timescales::{
    coherent_theory, random_theory, t1_coherent, theory_bundle, CoherentTheory, RandomTheory,
    TheoryBundle,
};
