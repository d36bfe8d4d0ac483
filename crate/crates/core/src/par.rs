//! Data-parallel kernels with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the helpers below dispatch to
//! rayon; without it they run on the calling thread. The [`serial`] module is
//! always available so both paths can be compared side by side.
//!
//! Reductions never use rayon's adaptive splitting: values are summed in
//! fixed-size chunks and the chunk partials are combined left to right, so a
//! sum is bit-identical across runs and thread counts.

/// Chunk length for deterministic reductions.
pub const REDUCE_CHUNK: usize = 1024;

pub use imp::*;

/// Always-sequential versions of the dispatching helpers.
pub mod serial {
    use super::REDUCE_CHUNK;

    pub fn map<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        (0..n).map(f).collect()
    }

    pub fn fill<T, F>(out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    pub fn sum_by<F>(n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Send + Sync,
    {
        let mut total = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + REDUCE_CHUNK).min(n);
            total += (start..end).map(&f).sum::<f64>();
            start = end;
        }
        total
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        sum_by(a.len(), |i| a[i] * b[i])
    }

    pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        (a(), b())
    }

    pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        map(n, f)
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub use super::serial::{dot, fill, join, map, map_tasks, sum_by};
}

#[cfg(feature = "parallel")]
mod imp {
    use super::REDUCE_CHUNK;
    use rayon::prelude::*;

    /// Below this size the rayon overhead outweighs the work.
    const MIN_PARALLEL: usize = 4096;

    pub fn map<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        if n < MIN_PARALLEL {
            return super::serial::map(n, f);
        }
        (0..n).into_par_iter().map(f).collect()
    }

    pub fn fill<T, F>(out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        if out.len() < MIN_PARALLEL {
            return super::serial::fill(out, f);
        }
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }

    pub fn sum_by<F>(n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Send + Sync,
    {
        if n < MIN_PARALLEL {
            return super::serial::sum_by(n, f);
        }
        let chunks = n.div_ceil(REDUCE_CHUNK);
        let partials: Vec<f64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * REDUCE_CHUNK;
                let end = (start + REDUCE_CHUNK).min(n);
                (start..end).map(&f).sum::<f64>()
            })
            .collect();
        partials.iter().sum()
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        sum_by(a.len(), |i| a[i] * b[i])
    }

    pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        rayon::join(a, b)
    }

    /// Like [`map`] but without the size threshold, for a handful of
    /// expensive independent tasks.
    pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_serial_sums_agree_bitwise() {
        let xs: Vec<f64> = (0..50_000).map(|i| ((i as f64) * 0.37).sin() / 3.0).collect();
        let a = sum_by(xs.len(), |i| xs[i]);
        let b = serial::sum_by(xs.len(), |i| xs[i]);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(dot(&xs, &xs).to_bits(), serial::dot(&xs, &xs).to_bits());
    }

    #[test]
    fn map_preserves_order() {
        let v = map(10_000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
