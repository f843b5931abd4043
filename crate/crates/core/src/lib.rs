//! Out-of-band aided spatial covariance estimation for hybrid mmWave MIMO.
//!
//! The crate covers the full chain used to configure a mmWave link from
//! sub-6 GHz side information:
//!
//! - [`channel`]: wideband clustered ULA channels and their OFDM forms,
//! - [`covariance`]: Gram and closed-form (PAS) spatial covariances,
//! - [`translation`]: parametric sub-6 GHz to mmWave covariance translation,
//! - [`compressed`]: hybrid-receiver compressed covariance estimation with
//!   optional logit prior weights,
//! - [`precoding`]: digital and phase-quantized hybrid precoders,
//! - [`metrics`]: subspace efficiency, effective rate and SNR-loss theory.
//!
//! Every routine is generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`). The `*64` / `*32` aliases below name the common
//! instantiations.

pub mod channel;
pub mod compressed;
pub mod covariance;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod precoding;
pub mod scalar;
pub mod translation;

pub use error::{Error, Result};
pub use scalar::{Real, C, CMat, CVec};

pub use channel::{ChannelRealization, Cluster, ClusterSet, FreqChannel, Ray, UlaGeometry};
pub use compressed::{CompressedEstimate, Dictionary, PriorWeights, SnapshotSet};
pub use covariance::{CovarianceMatrix, PasKind, Side, SubspaceDecomposition};
pub use metrics::{Perturbation, RateConfig};
pub use precoding::{HybridPrecoder, PhaseCodebook};
pub use translation::{ClusterEstimate, TranslationResult};

pub type UlaGeometry64 = UlaGeometry<f64>;
pub type UlaGeometry32 = UlaGeometry<f32>;
pub type ClusterSet64 = ClusterSet<f64>;
pub type ClusterSet32 = ClusterSet<f32>;
pub type ChannelRealization64 = ChannelRealization<f64>;
pub type FreqChannel64 = FreqChannel<f64>;
pub type CovarianceMatrix64 = CovarianceMatrix<f64>;
pub type CovarianceMatrix32 = CovarianceMatrix<f32>;
pub type SubspaceDecomposition64 = SubspaceDecomposition<f64>;
pub type Dictionary64 = Dictionary<f64>;
pub type Dictionary32 = Dictionary<f32>;
pub type SnapshotSet64 = SnapshotSet<f64>;
pub type PriorWeights64 = PriorWeights<f64>;
pub type CompressedEstimate64 = CompressedEstimate<f64>;
pub type HybridPrecoder64 = HybridPrecoder<f64>;
pub type TranslationResult64 = TranslationResult<f64>;
pub type Perturbation64 = Perturbation<f64>;
pub type RateConfig64 = RateConfig<f64>;
