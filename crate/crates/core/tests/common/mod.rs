#![allow(dead_code)]

use natmap_core::hypgeo::{sl2c_to_lorentz, upper_half_space_ideal};
use natmap_core::volume::{FacePairing, FundamentalDomain};
use natmap_core::{CuspData, Endpoint, RepresentationData};
use num_complex::Complex64;

pub fn omega() -> Complex64 {
    Complex64::new(-0.5, 0.75f64.sqrt())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Figure-eight knot group acting on upper half-space, with its identity
/// representation into `Isom(H^3)`.
pub fn figure_eight() -> RepresentationData {
    let a = sl2c_to_lorentz(&[[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
    let b = sl2c_to_lorentz(&[[c(1.0, 0.0), c(0.0, 0.0)], [omega(), c(1.0, 0.0)]]).unwrap();
    let gens = vec![a, b];
    RepresentationData::new(
        3,
        3,
        gens.clone(),
        gens,
        vec![vec![1, 2, 1, -2, -1, 2, 1, 2, -1, -2]],
        vec![CuspData::new(vec![
            vec![1],
            vec![2, 1, -2, -1, -1, -2, 1, 2],
        ])],
    )
    .unwrap()
}

/// Two regular ideal tetrahedra `{∞, 0, 1, 1+ω}` and `{∞, 0, 1+ω, ω}`.
pub fn figure_eight_domain(data: &RepresentationData, truncation: f64) -> FundamentalDomain {
    let w = omega();
    let pts = [
        None,
        Some(c(0.0, 0.0)),
        Some(c(1.0, 0.0)),
        Some(w + 1.0),
        Some(w),
    ];
    let vertices: Vec<Endpoint> = pts
        .iter()
        .map(|p| Endpoint::Ideal(upper_half_space_ideal(*p)))
        .collect();
    let simplices = vec![vec![0, 1, 2, 3], vec![0, 1, 3, 4]];
    // (simplex, omitted vertex id, target simplex, omitted vertex id, word)
    let glue: [(usize, usize, usize, usize, Vec<i32>); 3] = [
        (0, 1, 1, 3, vec![-1]),
        (0, 3, 1, 0, vec![-2, -1]),
        (0, 0, 1, 1, vec![-2, -1, 2]),
    ];
    let slot = |s: usize, v: usize| simplices[s].iter().position(|&x| x == v).unwrap();
    let pairings = glue
        .iter()
        .map(|(s, v, t, u, word)| FacePairing {
            simplex: *s,
            face: slot(*s, *v),
            target_simplex: *t,
            target_face: slot(*t, *u),
            isometry: data.eval_domain(word).unwrap(),
            word: Some(word.clone()),
        })
        .collect();
    FundamentalDomain::new(3, vertices, simplices, pairings, truncation).unwrap()
}
