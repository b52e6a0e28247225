//! Automatic choice of the objective weights and one-vs-rest separation.

mod pipeline;
mod ratios;
mod search;

pub use pipeline::{
    separate_all, separate_heads, separate_one, train_df_dnn, train_joint, Arch, DfDnnResult, DfDnnTrainer,
    SearchOptions, SeedPlan, TrainingSpectra,
};
pub use ratios::{energy_ratios, error_ratio, ProbeNorms, RATIO_CAP, RATIO_EPS};
pub use search::{
    find_mu, first_argmax, mu_stop_rule, sweep_gamma, CandidateTrainer, GammaOutcome, GammaStep, HyperParams,
    MuOutcome, MuSearch, MuStep, TuneTrace,
};
