//! Parameters, valuations and the trade rule.
//!
//! A buyer holding a good of quality `k_a` meets a seller offering quality `k`.
//! The offer is perceived as `q = beta*k + (1-beta)*k_a` and valued at `A*q`,
//! while the seller will not part with it for less than `B*k^alpha`. Dividing
//! through by `A`, a trade happens iff `q >= lambda*k^alpha` with
//! `lambda = B/A`. Everything downstream (the chain kernel, the statistics
//! and the simulator) goes through [`ModelParams::trades_unchecked`] so the
//! boundary is decided in exactly one place.

use serde::Serialize;

use crate::error::{Error, Result};

/// Integer quality level, `1..=kappa`.
pub type Quality = u32;

/// Scalar parameters of the market. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    alpha: f64,
    beta: f64,
    a: f64,
    b: f64,
    lambda: f64,
    kappa: u32,
    n_sellers: u32,
    n_buyers: u32,
}

impl ModelParams {
    /// Builds parameters from `lambda` directly, taking `A = 1` and `B = lambda`.
    pub fn new(
        alpha: f64,
        beta: f64,
        lambda: f64,
        kappa: u32,
        n_sellers: u32,
        n_buyers: u32,
    ) -> Result<Self> {
        Self::from_scales(alpha, beta, 1.0, lambda, kappa, n_sellers, n_buyers)
    }

    /// Builds parameters from the buyer rate `A` and seller scale `B`.
    pub fn from_scales(
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
        kappa: u32,
        n_sellers: u32,
        n_buyers: u32,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain("alpha", alpha, "must be finite and > 0"));
        }
        check_beta(beta)?;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain("A", a, "must be finite and > 0"));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::domain("B", b, "must be finite and > 0"));
        }
        if kappa < 2 {
            return Err(Error::domain("kappa", kappa, "must be >= 2"));
        }
        if n_sellers == 0 {
            return Err(Error::domain("sellers", n_sellers, "must be >= 1"));
        }
        if n_buyers == 0 {
            return Err(Error::domain("buyers", n_buyers, "must be >= 1"));
        }
        if !n_sellers.is_multiple_of(kappa) {
            return Err(Error::Configuration(format!(
                "sellers ({n_sellers}) must be a multiple of kappa ({kappa}) so qualities are equally represented"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            a,
            b,
            lambda: b / a,
            kappa,
            n_sellers,
            n_buyers,
        })
    }

    /// Same market with a different information degree.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            beta,
            ..self.clone()
        })
    }

    pub fn with_buyers(&self, n_buyers: u32) -> Result<Self> {
        Self::from_scales(
            self.alpha,
            self.beta,
            self.a,
            self.b,
            self.kappa,
            self.n_sellers,
            n_buyers,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn kappa(&self) -> u32 {
        self.kappa
    }
    pub fn n_sellers(&self) -> u32 {
        self.n_sellers
    }
    pub fn n_buyers(&self) -> u32 {
        self.n_buyers
    }

    /// Sellers offering each quality level.
    pub fn sellers_per_quality(&self) -> u32 {
        self.n_sellers / self.kappa
    }

    fn check_quality(&self, field: &'static str, k: Quality) -> Result<()> {
        if k == 0 || k > self.kappa {
            return Err(Error::domain(field, k, "quality must lie in 1..=kappa"));
        }
        Ok(())
    }

    /// `beta*k + (1-beta)*k_a`.
    pub fn perceived_quality(&self, k: Quality, k_a: Quality) -> Result<f64> {
        self.check_quality("k", k)?;
        self.check_quality("k_a", k_a)?;
        Ok(self.perceived_unchecked(k, k_a))
    }

    /// `A * q`.
    pub fn buyer_valuation(&self, k: Quality, k_a: Quality) -> Result<f64> {
        Ok(self.a * self.perceived_quality(k, k_a)?)
    }

    /// `B * k^alpha`.
    pub fn seller_valuation(&self, k: Quality) -> Result<f64> {
        self.check_quality("k", k)?;
        Ok(self.b * quality_power(k, self.alpha))
    }

    /// Buyer in state `k_a` accepts seller `k`.
    pub fn trade_occurs(&self, k: Quality, k_a: Quality) -> Result<bool> {
        self.check_quality("k", k)?;
        self.check_quality("k_a", k_a)?;
        Ok(self.trades_unchecked(k, k_a))
    }

    #[inline]
    pub(crate) fn perceived_unchecked(&self, k: Quality, k_a: Quality) -> f64 {
        self.beta * f64::from(k) + (1.0 - self.beta) * f64::from(k_a)
    }

    /// `lambda * k^alpha`, the seller's reservation in units of `A`.
    #[inline]
    pub(crate) fn reservation(&self, k: Quality) -> f64 {
        self.lambda * quality_power(k, self.alpha)
    }

    /// Equality trades.
    #[inline]
    pub(crate) fn trades_unchecked(&self, k: Quality, k_a: Quality) -> bool {
        self.perceived_unchecked(k, k_a) >= self.reservation(k)
    }

    /// `V^b / V^s` for a given perceived quality offered at `k`.
    #[inline]
    pub(crate) fn valuation_ratio(&self, k: Quality, perceived: f64) -> f64 {
        perceived / self.reservation(k)
    }

    /// A buyer in `k_a` can never trade again: every offer is refused.
    pub fn is_dead_state(&self, k_a: Quality) -> bool {
        (1..=self.kappa).all(|k| !self.trades_unchecked(k, k_a))
    }

    /// Critical information degree below which state 1 absorbs.
    pub fn critical_beta(&self) -> CriticalBeta {
        let kappa = f64::from(self.kappa);
        let raw = (self.lambda * kappa.powf(self.alpha) - 1.0) / (kappa - 1.0);
        CriticalBeta {
            raw,
            clamped: raw.clamp(0.0, 1.0),
            in_unit_interval: (0.0..=1.0).contains(&raw),
        }
    }

    /// Range of `lambda` over which the critical degree lies in `[0, 1]`:
    /// `[kappa^-alpha, kappa^(1-alpha)]`.
    pub fn lambda_viability_interval(&self) -> (f64, f64) {
        let kappa = f64::from(self.kappa);
        (kappa.powf(-self.alpha), kappa.powf(1.0 - self.alpha))
    }

    /// Whether every state is accessible: `kappa >= (lambda - beta)/(1 - beta)`.
    pub fn completeness(&self) -> Completeness {
        if self.beta >= 1.0 {
            return Completeness::NotApplicable;
        }
        let bound = (self.lambda - self.beta) / (1.0 - self.beta);
        if f64::from(self.kappa) >= bound {
            Completeness::Complete
        } else {
            Completeness::Incomplete
        }
    }

    /// [`Self::completeness`] as a `Result`, with `beta = 1` an error.
    pub fn completeness_condition(&self) -> Result<bool> {
        match self.completeness() {
            Completeness::Complete => Ok(true),
            Completeness::Incomplete => Ok(false),
            Completeness::NotApplicable => Err(Error::NotApplicable),
        }
    }

    pub fn classify_regime(&self) -> RegimeReport {
        let regime = if self.alpha > 1.0 {
            Regime::ForbiddenHighQuality
        } else if self.alpha < 1.0 {
            Regime::ForbiddenLowQuality
        } else {
            Regime::Neutral
        };
        let k_hat = match regime {
            Regime::Neutral => None,
            _ => Some(self.lambda.powf(1.0 / (1.0 - self.alpha))),
        };
        let market_exists = if self.alpha >= 1.0 {
            self.lambda <= 1.0
        } else {
            self.lambda <= f64::from(self.kappa).powf(1.0 - self.alpha)
        };
        RegimeReport {
            regime,
            k_hat,
            market_exists,
            complete: self.completeness(),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain("beta", beta, "must lie in [0, 1]"));
    }
    Ok(())
}

#[inline]
fn quality_power(k: Quality, alpha: f64) -> f64 {
    f64::from(k).powf(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalBeta {
    /// Unclamped value; `<= 0` means asymmetry never kills the market, `>= 1` means it never lives.
    pub raw: f64,
    pub clamped: f64,
    pub in_unit_interval: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `alpha > 1`: qualities above `k_hat` never trade.
    ForbiddenHighQuality,
    /// `alpha < 1`: qualities below `k_hat` are shut out under symmetric information.
    ForbiddenLowQuality,
    /// `alpha = 1`.
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Completeness {
    Complete,
    Incomplete,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub k_hat: Option<f64>,
    pub market_exists: bool,
    pub complete: Completeness,
}
