//! Query-efficient recovery of two sparse vectors from a mixed linear
//! regression oracle.
//!
//! - [`oracle`]: the simulated sample oracle and its query ledger.
//! - [`gmm`]: scalar two-component Gaussian mixture estimators.
//! - [`alignment`]: sum/difference queries that label mean estimates consistently.
//! - [`recovery`]: Gaussian designs, basis pursuit and the end-to-end pipelines.
//! - [`harness`]: configs, seeded trial runs, sweeps and plot data.

pub mod alignment;
pub mod gmm;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod recovery;
pub mod seed;

pub use alignment::{align_all, align_pair, AlignError, AlignedMeans, PairwiseVerdict};
pub use gmm::{test_and_estimate, BatchPolicy, EstimatorBranch, GmmError, MeanEstimatePair};
pub use oracle::{MixtureOracle, OracleError, QueryLedger, QueryTag, SparseVectorPair};
