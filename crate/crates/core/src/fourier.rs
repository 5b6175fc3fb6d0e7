//! Centered 2-D transforms between the momentum lattice and its conjugate
//! position lattice.
//!
//! With `q_m = −Q + m·dq` and `x_j = −X + j·dx`, `dx·dq = 2π/N`, the phase
//! `x_j q_m` splits into `Nπ/2 − mπ − jπ + 2πjm/N`, so a plain FFT plus a
//! checkerboard sign on both sides and one global phase gives the continuum
//! transform. Scaling is unitary: `Σ|ψ|²dx² = Σ|D|²dq²`.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Sign of the exponent in `Σ_x e^{±i x·q} f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kernel {
    /// `e^{+i x·q}`: position samples to momentum samples.
    ToMomentum,
    /// `e^{−i x·q}`: momentum samples to position samples.
    ToPosition,
}

fn checkerboard(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `e^{±i N π/2}` for one axis.
fn axis_phase(n: usize, kernel: Kernel) -> Complex64 {
    let quarter = match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    match kernel {
        Kernel::ToMomentum => quarter,
        Kernel::ToPosition => quarter.conj(),
    }
}

/// Applies the centered transform along both axes. `sample_spacing` is the
/// spacing of the input lattice; the output is scaled by
/// `(sample_spacing/√(2π))²`.
pub(crate) fn centered_transform(
    input: &Array2<Complex64>,
    kernel: Kernel,
    sample_spacing: f64,
) -> Array2<Complex64> {
    let (rows, cols) = input.dim();
    debug_assert_eq!(rows, cols);
    let n = rows;
    let direction = match kernel {
        Kernel::ToMomentum => FftDirection::Inverse,
        Kernel::ToPosition => FftDirection::Forward,
    };
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(n, direction);

    let mut work = Array2::from_shape_fn((n, n), |(i, j)| {
        input[[i, j]] * (checkerboard(i) * checkerboard(j))
    });
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // rows are contiguous in standard layout
    for mut row in work.axis_iter_mut(Axis(0)) {
        let slice = row.as_slice_mut().expect("standard layout");
        fft.process_with_scratch(slice, &mut scratch);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            column[i] = work[[i, j]];
        }
        fft.process_with_scratch(&mut column, &mut scratch);
        for i in 0..n {
            work[[i, j]] = column[i];
        }
    }

    let scale = sample_spacing * sample_spacing / (2.0 * PI);
    let phase = axis_phase(n, kernel) * axis_phase(n, kernel) * scale;
    work.indexed_iter_mut()
        .for_each(|((i, j), z)| *z *= phase * (checkerboard(i) * checkerboard(j)));
    work
}
