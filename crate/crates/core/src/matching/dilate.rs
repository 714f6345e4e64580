//! Separable binary dilation over a (time x row x col) byte mask.
//!
//! A Chebyshev ball of radius `k` is the product of two 1-D windows of width
//! `2k + 1`, so the spatial dilation runs as a pass along columns followed
//! by a pass along rows; the temporal `+-dt` window is a third pass across
//! slices. Every pass is linear in the number of cells regardless of radius.

use crate::grid::GridSpec;

/// Dilates `mask` (0/1 bytes, flat layout) by spatial radius `k` and
/// temporal radius `dt`.
pub(crate) fn dilate(mask: &[u8], spec: &GridSpec, k: u32, dt: u32) -> Vec<u8> {
    debug_assert_eq!(mask.len(), spec.total_cells());
    let rows = spec.n_rows() as usize;
    let cols = spec.n_cols() as usize;
    let slice = spec.slice_len();

    let mut out = if k == 0 {
        mask.to_vec()
    } else {
        let k = k as usize;
        let mut along_cols = vec![0u8; mask.len()];
        for (src, dst) in mask.chunks_exact(cols).zip(along_cols.chunks_exact_mut(cols)) {
            dilate_line(src, dst, k);
        }
        let mut spatial = vec![0u8; mask.len()];
        let mut counts = vec![0u32; cols];
        for (src, dst) in along_cols.chunks_exact(slice).zip(spatial.chunks_exact_mut(slice)) {
            window_or(src, dst, cols, rows, k, &mut counts);
        }
        spatial
    };

    if dt > 0 && spec.n_times() > 1 {
        let mut counts = vec![0u32; slice];
        let mut temporal = vec![0u8; out.len()];
        window_or(&out, &mut temporal, slice, spec.n_times() as usize, dt as usize, &mut counts);
        out = temporal;
    }
    out
}

/// 1-D dilation of a contiguous line: `dst[i] = 1` iff some set bit lies
/// within `k` positions of `i`.
fn dilate_line(src: &[u8], dst: &mut [u8], k: usize) {
    let mut since_last = usize::MAX;
    for (s, d) in src.iter().zip(dst.iter_mut()) {
        since_last = if *s != 0 { 0 } else { since_last.saturating_add(1) };
        *d = (since_last <= k) as u8;
    }
    let mut until_next = usize::MAX;
    for (s, d) in src.iter().zip(dst.iter_mut()).rev() {
        until_next = if *s != 0 { 0 } else { until_next.saturating_add(1) };
        if until_next <= k {
            *d = 1;
        }
    }
}

/// Dilation along the outer axis of a `(n_blocks x block)` array using a
/// running per-position count over the window `[j - radius, j + radius]`.
fn window_or(src: &[u8], dst: &mut [u8], block: usize, n_blocks: usize, radius: usize, counts: &mut [u32]) {
    counts.iter_mut().for_each(|c| *c = 0);
    let add = |counts: &mut [u32], j: usize| {
        for (c, &s) in counts.iter_mut().zip(&src[j * block..(j + 1) * block]) {
            *c += s as u32;
        }
    };
    for j in 0..radius.min(n_blocks) {
        add(counts, j);
    }
    for j in 0..n_blocks {
        if j + radius < n_blocks {
            add(counts, j + radius);
        }
        for (d, &c) in dst[j * block..(j + 1) * block].iter_mut().zip(counts.iter()) {
            *d = (c > 0) as u8;
        }
        if j >= radius {
            let leaving = j - radius;
            for (c, &s) in counts.iter_mut().zip(&src[leaving * block..(leaving + 1) * block]) {
                *c -= s as u32;
            }
        }
    }
}
