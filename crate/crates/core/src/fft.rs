//! Unnormalized DFTs over square grids, backed by a process-wide plan cache.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::signal::Grid;

type PlanKey = (usize, bool);
type PlanCache = RwLock<HashMap<PlanKey, Arc<dyn Fft<f64>>>>;

fn plans() -> &'static PlanCache {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    PLANS.get_or_init(|| RwLock::new(HashMap::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let key = (n, inverse);
    if let Some(p) = plans().read().expect("fft plan cache poisoned").get(&key) {
        return Arc::clone(p);
    }
    let mut cache = plans().write().expect("fft plan cache poisoned");
    Arc::clone(cache.entry(key).or_insert_with(|| {
        let direction = if inverse {
            FftDirection::Inverse
        } else {
            FftDirection::Forward
        };
        FftPlanner::new().plan_fft(n, direction)
    }))
}

fn transpose(n: usize, src: &[Complex64], dst: &mut [Complex64]) {
    const BLOCK: usize = 16;
    for rb in (0..n).step_by(BLOCK) {
        for cb in (0..n).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(n) {
                for c in cb..(cb + BLOCK).min(n) {
                    dst[c * n + r] = src[r * n + c];
                }
            }
        }
    }
}

/// In-place DFT without any scaling in either direction.
pub(crate) fn dft_in_place(data: &mut [Complex64], grid: &Grid, inverse: bool) {
    let n = grid.n;
    debug_assert_eq!(data.len(), grid.len());
    if n == 1 {
        return;
    }
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    match grid.dim {
        1 => fft.process_with_scratch(data, &mut scratch),
        _ => {
            fft.process_with_scratch(data, &mut scratch);
            let mut t = vec![Complex64::default(); data.len()];
            transpose(n, data, &mut t);
            fft.process_with_scratch(&mut t, &mut scratch);
            transpose(n, &t, data);
        }
    }
}

/// Space samples to the continuous-normalized spectrum `Δ^d · DFT(f)`.
pub(crate) fn forward(data: &mut [Complex64], grid: &Grid) {
    dft_in_place(data, grid, false);
    let w = grid.cell();
    data.iter_mut().for_each(|v| *v *= w);
}

/// Inverse of [`forward`].
pub(crate) fn inverse(data: &mut [Complex64], grid: &Grid) {
    dft_in_place(data, grid, true);
    let w = 1.0 / (grid.cell() * grid.len() as f64);
    data.iter_mut().for_each(|v| *v *= w);
}
