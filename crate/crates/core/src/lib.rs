//! Signed Kullback-Leibler indicators for assessment score distributions.
//!
//! The crate measures two dimensions of educational quality for a group of
//! students: the *level* attained, as the divergence between the group's
//! score distribution and a reference distribution, and the *inequality*
//! between social groups, as the divergence between the low- and high-SES
//! score distributions. Divergences carry a sign taken from the relative
//! distribution so that groups sitting below their reference are negative.
//!
//! Modules, bottom-up:
//!
//! - [`empirical`]: sorted samples, ECDF, inf-quantiles, percentile tables and
//!   floored density estimates on shared grids.
//! - [`reldist`]: relative ranks, the relative CDF `G(r)`, relative density and
//!   the rank-area summary.
//! - [`divergence`]: KL divergence (continuous and discrete), signed KL,
//!   entropy, the Theil index and the expected likelihood-ratio statistic.
//! - [`reference`]: percentile-table arithmetic and sampling, used to build the
//!   reference ("typical country") distribution.
//! - [`levels`]: learning-level profiles, k-means derived cut-points and
//!   classification into five KL bands.
//! - [`pipeline`]: CSV ingestion, eligibility rules, municipality indicators
//!   and report files.

pub mod divergence;
pub mod empirical;
pub mod error;
pub mod levels;
pub mod pipeline;
pub mod reference;
pub mod reldist;

pub use error::{Error, Result};
