#![allow(dead_code)]

use fvns::mesh::{Mesh, Rect};
use fvns::verification::boundary_vertices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn structured(n: usize) -> Mesh {
    Mesh::generate_structured(n, n, Rect::UNIT).expect("structured mesh")
}

/// Structured mesh with interior vertices moved by up to `amp` times the
/// smallest edge, passed through the text format. The amplitude is halved
/// until the result is admissible with angle margin 0.01.
pub fn jittered(n: usize, amp: f64, seed: u64) -> Mesh {
    let base = structured(n);
    let on = boundary_vertices(&base);
    let emin = base.edges().iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
    let tris: Vec<[usize; 3]> = base.triangles().iter().map(|t| t.vertices).collect();
    let mut a = amp;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let verts: Vec<[f64; 2]> = base
            .vertices()
            .iter()
            .zip(&on)
            .map(|(v, &b)| {
                let d = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                if b {
                    *v
                } else {
                    [v[0] + a * emin * d[0], v[1] + a * emin * d[1]]
                }
            })
            .collect();
        if let Ok(m) = Mesh::build(verts, &tris) {
            if m.validate(0.01).admissible {
                return Mesh::load(&m.to_text()).expect("round trip");
            }
        }
        a *= 0.5;
        assert!(a > 1e-6, "no admissible jitter found");
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
