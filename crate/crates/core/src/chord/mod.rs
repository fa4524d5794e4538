//! Energy shells, their chords, actions, amplitudes and angle charts.

mod chords;
mod curve;
mod shell;

pub use chords::{
    amplitude_prefactor, angle_jacobian, caustic_indicator, chord_action, chord_amplitude,
    chord_from_angles, find_chords, traversal_time, AngleChart, Chord,
};
pub use curve::{ShellCurve, TrigSeries};
pub use shell::{build_shell, build_shell_with, quantized_energy, ShellSpec, CAUSTIC_FRACTION, DEFAULT_MASLOV};
