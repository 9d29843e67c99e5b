//! Streamline topology: critical points, level sets, the singular streamline
//! and island geometry.

pub mod contour;
pub mod critical;
pub mod interp;
pub mod islands;
pub mod streamline;

pub use contour::{trace_lattice, trace_level_set, Contour, ContourKind, Lattice};
pub use critical::{find_critical_points, find_critical_points_interp, CriticalKind, CriticalPoint, TAU_HESS};
pub use interp::{FieldInterp, PhysDerivs, RefDerivs};
pub use islands::{
    detect_islands, detect_islands_at, detect_islands_interp, hessian_diagnostic, max_island_height, HessianDiagnostic, IslandLevel, IslandReport,
    DEFAULT_DELTAS,
};
pub use streamline::{search_window, search_window_at, singular_streamline, singular_streamline_interp, StreamlineCurve};
