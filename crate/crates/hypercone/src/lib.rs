//! Uniform hyperbolicity of finite families of SL(2,R) matrices over subshifts of finite type.
//!
//! The crate is organised bottom-up:
//!
//! * [`projgeom`]: the projective circle, cross-ratios, Hilbert metrics and multicones.
//! * [`sl2core`]: unimodular matrices, trace classes, canonical pairs and bounded normalization.
//! * [`symdyn`]: subshifts of finite type, words, cocycle products and periodic orbits.
//! * [`multicone`]: multicone certification, unstable and stable cores, tightness.
//! * [`twoshift`]: the exact decision procedure for pairs over the full 2-shift.
//! * [`fareycomb`]: rotation words, the cyclic order on them and the explicit core model.
//! * [`corrdyn`]: combinatorial multicones, monotonic correspondences and winding numbers.
//! * [`witness`]: searches for elliptic, parabolic and heteroclinic boundary witnesses.

pub mod corrdyn;
pub mod fareycomb;
pub mod multicone;
pub mod projgeom;
pub mod sl2core;
pub mod symdyn;
pub mod twoshift;
pub mod witness;

pub use projgeom::{ArcP1, MultiCone, ProjPoint};
pub use sl2core::{Mat2, MatClass, Tolerances};
pub use symdyn::{Sft, Word};

