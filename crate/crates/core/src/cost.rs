//! Per-frame operation-count model for LPCC scoring and K-preselected MLP
//! residual scoring.
//!
//! Units are multiply-accumulate equivalents: one unit per compared cepstral
//! coefficient, one per weight or bias of the predictor, and `c_tg` per
//! evaluation of the nonlinear transfer function. [`crate::identify`] charges
//! the same units to an [`OpCounter`] while it runs.

/// Sizes entering the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostModel {
    /// LPCC codebook size.
    pub t_cl: u64,
    /// MLP codebook size.
    pub t_cnl: u64,
    /// Number of preselected speakers.
    pub k: u64,
    /// Frame length.
    pub l_t: u64,
    /// Input-layer neurons.
    pub n_i: u64,
    pub n_h1: u64,
    pub n_h2: u64,
    /// Units per nonlinear transfer function evaluation.
    pub c_tg: u64,
    /// Cepstral order.
    pub p: u64,
    /// Number of enrolled speakers.
    pub n: u64,
}

/// Units per `tanh`; see [`solve_c_tg`].
pub const DEFAULT_C_TG: u64 = 9;

impl Default for CostModel {
    fn default() -> Self {
        Self {
            t_cl: 128,
            t_cnl: 32,
            k: 2,
            l_t: 240,
            n_i: 10,
            n_h1: 4,
            n_h2: 2,
            c_tg: DEFAULT_C_TG,
            p: 12,
            n: 1,
        }
    }
}

impl CostModel {
    /// `T_cl * p * N`.
    pub fn cost_lpcc(&self) -> u64 {
        self.t_cl * self.p * self.n
    }

    /// Units for one forward pass of the predictor network.
    pub fn units_per_prediction(&self) -> u64 {
        self.n_i * self.n_h1
            + self.n_h1
            + self.n_h1 * self.n_h2
            + 2 * self.n_h2
            + 1
            + self.c_tg * (self.n_h1 + self.n_h2)
    }

    /// Residual scoring of the K preselected speakers, without the LPCC part.
    pub fn cost_residual(&self) -> u64 {
        self.k * self.t_cnl * self.l_t.saturating_sub(self.n_i) * self.units_per_prediction()
    }

    /// `N_LPCC + K * T_cnl * (l_t - n_i) * (units per prediction)`.
    pub fn cost_mlp(&self) -> u64 {
        self.cost_lpcc() + self.cost_residual()
    }
}

/// Smallest-error integer `c_tg` such that the residual term of the default
/// configuration lands on `target` units (e.g. `1.6e6`).
pub fn solve_c_tg(target: f64) -> u64 {
    let base = CostModel {
        c_tg: 0,
        ..CostModel::default()
    };
    let per_frame_predictions = (base.k * base.t_cnl * (base.l_t - base.n_i)) as f64;
    let per_prediction = target / per_frame_predictions;
    let tanh_count = (base.n_h1 + base.n_h2) as f64;
    let raw = (per_prediction - base.units_per_prediction() as f64) / tanh_count;
    libm::round(raw.max(0.0)) as u64
}

/// Running tally of accounting units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter(u64);

impl OpCounter {
    #[inline]
    pub fn add(&mut self, units: u64) {
        self.0 += units;
    }

    pub fn total(&self) -> u64 {
        self.0
    }
}
