//! Statistical machinery behind the verdicts: streaming moments,
//! distributional tests and log-time slope regression.

mod hypothesis;
mod moments;
mod regression;
mod report;

pub use hypothesis::{
    anderson_darling_cdf, anderson_darling_statistic, circular_uniformity, circular_uniformity_detail,
    kolmogorov_sf, ks_statistic, ks_test, ks_two_sample, normality_test, CircularTest, AD_MIN_SAMPLES,
    KS_MIN_SAMPLES,
};
pub use moments::{moments_accumulate, CoMoments, MomentSummary, Moments};
pub use regression::{log_slope_regression, ols_slope, SlopeEstimate, MIN_CHECKPOINTS, MIN_SPAN};
pub use report::{write_reports_csv, Check, Estimate, MCReport, Verdict, MAX_REJECTION_RATE};
