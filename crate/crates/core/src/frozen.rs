//! Constants frozen from the first oracle run. Values are the measured
//! suprema rounded up in the last kept digit.

/// `sup |J̃_ν(s)| / ν^{1/6}` on `[ν, ν + ν^{1/3}]`, over `ν = 1, …, 256`.
pub const TURNING_ENVELOPE_CONSTANT: f64 = 0.8157;
/// `sup |J̃_ν(s)| (s − ν)^{1/4} / ν^{1/4}` on `[ν + ν^{1/3}, 2ν]`, same orders.
pub const TRANSITION_ENVELOPE_CONSTANT: f64 = 0.8574;

// TT* majorant constants: ν ∈ {2, 8, 32}, I = [1/2, 16ν], r, ρ ∈ {1/8, …, 1},
// Δt ∈ {0, 1/(2ν), 2/ν, 1/10}.
pub const TT_STAR_T4_CONSTANT: f64 = 0.4476;
pub const TT_STAR_T5_CONSTANT: f64 = 6.2e-4;
pub const TT_STAR_T6_CONSTANT: f64 = 1.4384;

/// `sup h_ν(νu)² / envelope` over `u ∈ [1 + ν^{−2/3}, 2]` (2000 points),
/// `2ν ∈ [4, 4096]`; it still creeps up slowly at the top of that range.
pub const REMAINDER_SQUARE_CONSTANT: f64 = 0.0228;
