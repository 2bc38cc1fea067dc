//! Achievable rates (bits per channel use) with interference treated as noise.
//!
//! Every rate has the form log₂ det(I + Σ_s G_s G_sᴴ · S⁻¹) where G_s are
//! path-loss-scaled signal terms a·H·V and S = σ²I + Σ_k G_k G_kᴴ is the
//! interference-plus-noise covariance. With S = L·Lᴴ this equals
//! log₂ det(I + Σ_s (L⁻¹G_s)(L⁻¹G_s)ᴴ), which is Hermitian PD and is what gets
//! factored.

use crate::codebook::Precoder;
use crate::numerics::{cholesky, forward_solve, hermitian_logdet, ComplexMatrix, NumericsError};
use crate::scenario::{path_loss_amplitude, ChannelSet, Distances, Scenario};

/// Macro and femto rates for one joint action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePair {
    pub macro_rate: f64,
    pub femto_rate: f64,
}

impl RatePair {
    pub fn new(macro_rate: f64, femto_rate: f64) -> Self {
        Self { macro_rate, femto_rate }
    }

    pub fn sum(&self) -> f64 {
        self.macro_rate + self.femto_rate
    }
}

/// Amplitude path loss d^(−α) on each of the four links.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkGains {
    pub im: f64,
    pub if_: f64,
    pub jm: f64,
    pub jf: f64,
}

impl LinkGains {
    pub fn from_distances(d: &Distances, alpha: f64) -> Self {
        Self {
            im: path_loss_amplitude(d.d_im, alpha),
            if_: path_loss_amplitude(d.d_if, alpha),
            jm: path_loss_amplitude(d.d_jm, alpha),
            jf: path_loss_amplitude(d.d_jf, alpha),
        }
    }
}

/// One a·H·V contribution at a receiver.
struct Term<'a> {
    channel: &'a ComplexMatrix,
    amplitude: f64,
    precoder: &'a Precoder,
}

impl Term<'_> {
    fn received(&self) -> Result<ComplexMatrix, NumericsError> {
        Ok(self.channel.matmul(self.precoder.matrix())?.scale(self.amplitude))
    }
}

fn log2_det_sinr(signals: &[Term<'_>], interference: &[Term<'_>], noise: f64) -> Result<f64, NumericsError> {
    let r = signals
        .first()
        .or(interference.first())
        .map(|t| t.channel.rows())
        .ok_or(NumericsError::DimensionMismatch {
            expected: (1, 1),
            found: (0, 0),
        })?;
    let mut cov = ComplexMatrix::identity(r).scale(noise);
    for t in interference {
        cov = &cov + &t.received()?.gram();
    }
    let l = cholesky(&cov)?;
    let mut m = ComplexMatrix::identity(r);
    for t in signals {
        let w = forward_solve(&l, &t.received()?)?;
        m = &m + &w.gram();
    }
    hermitian_logdet(&m)
}

/// The four rate formulas over fixed channels, link gains and noise.
#[derive(Clone, Copy, Debug)]
pub struct RateModel<'a> {
    pub channels: &'a ChannelSet,
    pub gains: LinkGains,
    pub noise: f64,
}

impl<'a> RateModel<'a> {
    pub fn new(s: &'a Scenario) -> Self {
        Self {
            channels: &s.channels,
            gains: LinkGains::from_distances(&s.distances(), s.geometry.alpha),
            noise: s.noise,
        }
    }

    pub fn with_gains(channels: &'a ChannelSet, gains: LinkGains, noise: f64) -> Self {
        Self { channels, gains, noise }
    }

    fn term<'p>(&self, channel: &'p ComplexMatrix, amplitude: f64, precoder: &'p Precoder) -> Term<'p> {
        Term {
            channel,
            amplitude,
            precoder,
        }
    }

    /// MUE rate, uncoordinated: MBS signal over FBS interference.
    pub fn uncoord_macro(&self, v_m: &Precoder, v_f: &Precoder) -> Result<f64, NumericsError> {
        let h = self.channels;
        log2_det_sinr(
            &[self.term(&h.h_im, self.gains.im, v_m)],
            &[self.term(&h.h_if, self.gains.if_, v_f)],
            self.noise,
        )
    }

    /// FUE rate, uncoordinated: FBS signal over MBS interference.
    pub fn uncoord_femto(&self, v_m: &Precoder, v_f: &Precoder) -> Result<f64, NumericsError> {
        let h = self.channels;
        log2_det_sinr(
            &[self.term(&h.h_jf, self.gains.jf, v_f)],
            &[self.term(&h.h_jm, self.gains.jm, v_m)],
            self.noise,
        )
    }

    /// MUE rate under joint transmission: both BSs carry MUE streams.
    pub fn coord_macro(&self, v_m: &Precoder, v_if: &Precoder) -> Result<f64, NumericsError> {
        let h = self.channels;
        log2_det_sinr(
            &[self.term(&h.h_im, self.gains.im, v_m), self.term(&h.h_if, self.gains.if_, v_if)],
            &[],
            self.noise,
        )
    }

    /// FUE rate under joint transmission; MBS signal is still interference.
    pub fn coord_femto(&self, v_m: &Precoder, v_jf: &Precoder) -> Result<f64, NumericsError> {
        self.uncoord_femto(v_m, v_jf)
    }

    /// The MUE's coordinated rate with the MBS term removed.
    pub fn coord_macro_floor(&self, v_if: &Precoder) -> Result<f64, NumericsError> {
        let h = self.channels;
        log2_det_sinr(&[self.term(&h.h_if, self.gains.if_, v_if)], &[], self.noise)
    }
}

pub fn rate_uc_m(s: &Scenario, v_m: &Precoder, v_f: &Precoder) -> Result<f64, NumericsError> {
    RateModel::new(s).uncoord_macro(v_m, v_f)
}

pub fn rate_uc_f(s: &Scenario, v_m: &Precoder, v_f: &Precoder) -> Result<f64, NumericsError> {
    RateModel::new(s).uncoord_femto(v_m, v_f)
}

pub fn rate_c_m(s: &Scenario, v_m: &Precoder, v_if: &Precoder) -> Result<f64, NumericsError> {
    RateModel::new(s).coord_macro(v_m, v_if)
}

pub fn rate_c_f(s: &Scenario, v_m: &Precoder, v_jf: &Precoder) -> Result<f64, NumericsError> {
    RateModel::new(s).coord_femto(v_m, v_jf)
}

/// Lower bound on [`rate_c_m`], attained when the MBS contributes nothing.
pub fn gamma_lower_bound(s: &Scenario, v_if: &Precoder) -> Result<f64, NumericsError> {
    RateModel::new(s).coord_macro_floor(v_if)
}
