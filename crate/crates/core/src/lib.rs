//! Distillation, augmentation planning, alignment, and evaluation for
//! sports game-clock OCR streams.
//!
//! Text detectors and recognizers pointed at broadcast scoreboard crops
//! produce noisy per-frame output. This crate turns those streams into
//! usable training labels and searchable video segments without any
//! human annotation, using only what every game clock must satisfy:
//!
//! * [`kc`] distills noisy records into clean labels through existence,
//!   selection, and temporal-monotonicity constraints, mining the
//!   failures as hard negatives.
//! * [`surface_form`] defines the time/quarter/team text grammars those
//!   constraints run on, per league profile.
//! * [`geometry`] moves crop sizes onto the detector's pixel grid with
//!   minimal distortion and provides the IoU primitives.
//! * [`augment`] plans size-bias-correcting rescales and stratified
//!   samples.
//! * [`align`] joins cleaned readings to play-by-play feeds through the
//!   (teams, quarter, time) composite key.
//! * [`eval`] scores detection, recognition, and end-to-end quality.
//! * [`synth`] generates seeded synthetic games with controlled noise,
//!   the ground-truth oracle for everything above.
//!
//! Corpus-level drivers parallelize across videos, images, or sizes when
//! the default `parallel` feature is on; disabling it yields the same
//! results sequentially.

pub mod align;
pub mod augment;
pub mod eval;
pub mod geometry;
pub mod kc;
pub mod model;
pub mod surface_form;
pub mod synth;

pub use model::{
    BBox, ClockRecord, GameClockReading, LeagueProfile, MonotonicDirection, Period,
    SemanticClass, TextDetection, TimeFormId,
};
