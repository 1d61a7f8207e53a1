use crate::geometry::NodePosition;
use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{quantity} out of domain: {value} ({constraint})")]
    Domain {
        quantity: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("direction undefined: point {0} coincides with the origin")]
    DegenerateDirection(NodePosition),

    #[error("evaluation point {point} is co-located with emitter #{index}")]
    CoLocated { index: usize, point: NodePosition },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("position {0} lies outside the {1}x{2} grid")]
    OffGrid(NodePosition, u32, u32),

    #[error("empirical CDF needs at least one finite sample")]
    EmptySamples,

    #[error("heatmap has no unmasked cells")]
    FullyMasked,
}

pub type Result<T> = std::result::Result<T, Error>;
