//! Edge-weighted quantitative bipolar argumentation frameworks.
//!
//! Arguments carry base scores in `[0, 1]` and are linked by weighted attack
//! and support edges. The crate evaluates them under four gradual semantics,
//! attributes the strength of a topic argument to individual edges by
//! gradients, and searches for edge weights that give the topic a desired
//! strength.
//!
//! ```
//! use ewqbaf::{parse_qbaf, compute_strengths, SemanticsKind, SemanticsSpec};
//!
//! let q = parse_qbaf(br#"{
//!     "arguments": [{"id": "a", "base_score": 0.5}, {"id": "b", "base_score": 0.5}],
//!     "edges": [{"source": "a", "target": "b", "polarity": "support", "weight": 1.0}]
//! }"#).unwrap();
//! let s = compute_strengths(&q, &SemanticsSpec::new(SemanticsKind::DfQuad)).unwrap();
//! assert_eq!(s.value("b"), Some(0.75));
//! ```

pub mod attribution;
pub mod bench;
pub mod contest;
pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod semantics;

pub use attribution::{classify_influence, DEFAULT_PERTURBATION, DEFAULT_ZERO_TOLERANCE, grae_approx, grae_exact, AttributionInfluence, GradientMethod, GraeMap};
pub use contest::{
    attainable_interval, contest, contest_with_progress, max_min_weight_functions, AttainableInterval,
    ContestOutcome, ContestProgress, ContestRequest, ContestStatus,
};
pub use error::{QbafError, Result};
pub use model::{
    parse_qbaf, serialize_qbaf, validate, Argument, ArgumentId, Edge, EdgeClass, PathCount, Polarity, Qbaf,
    QbafData, Violation,
};
pub use semantics::{compute_strengths, strength_of, Aggregation, SemanticsKind, SemanticsSpec, StrengthMap};
