//! Concatenation of games with gadget graphs, and robustness audits.

mod audit;
mod bound;
mod concat;

pub use audit::{
    audit_distance, audit_exact, audit_game, necessity_bound, AuditMode, AuditOptions, AuditReport, Engine, Rectangle,
    Verdict, DEFAULT_RECTANGLE_BUDGET,
};
pub use bound::{deviation_bound, DeviationBound};
pub use concat::{concatenate, concatenate_symmetric, ConcatenatedGame, DerivedEdge};
