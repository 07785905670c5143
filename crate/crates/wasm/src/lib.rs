//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns a JSON document,
//! so the page needs no generated type glue beyond the functions themselves.

use framekit::cli::{cmd_stability, ExperimentConfig};
use framekit::fa::{fa_invariant, FaError};
use framekit::frame::{
    graph_sort_frame, pca_frame, quotient, DEFAULT_EPS_EIG, DEFAULT_EPS_SPEC, DEFAULT_MAX_ENUMERATION,
};
use framekit::graphio::{automorphisms, laplacian, parse_graph6, write_graph6};
use framekit::group::{Action, EuclideanMotion, GroupElement, GroupKind, Permutation, PointCloud};
use framekit::numeric::{
    min_normalized_spacing, sym_eig, Matrix, Rng, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS, DEFAULT_TAU_LEX,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Parses one `x,y` (or whitespace separated) point per line.
fn parse_points(text: &str) -> Result<Matrix, String> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().map(str::trim).enumerate().filter(|(_, l)| !l.is_empty()) {
        let v: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", i + 1))?;
        if v.len() != 2 || v.iter().any(|x| !x.is_finite()) {
            return Err(format!("line {}: expected two finite coordinates", i + 1));
        }
        pts.push(v);
    }
    if pts.len() < 3 {
        return Err("need at least three points".into());
    }
    Ok(Matrix::from_rows(&pts))
}

/// A deliberately non-symmetric readout of a planar cloud.
fn readout(c: &PointCloud) -> Result<Matrix, FaError> {
    let n = c.len() as f64;
    let mut out = vec![0.0; 4];
    for i in 0..c.len() {
        let p = c.points.row(i);
        out[0] += p[0] / n;
        out[1] += p[0] * p[0] / n;
        out[2] += p[0] * p[1] / n;
        out[3] += (p[1] - p[0]).max(0.0) / n;
    }
    Ok(Matrix::from_vec(1, 4, out).expect("four entries"))
}

fn pca_summary(x: &PointCloud, kind: GroupKind) -> Result<Value, String> {
    let frame = pca_frame(x, kind, DEFAULT_EPS_SPEC).map_err(fail)?;
    let canonical = frame
        .elements()
        .iter()
        .map(|g| g.apply_inverse_rows(&x.points).map(|m| rows(&m)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail)?;
    let averaged = fa_invariant(readout, &frame, x).map_err(fail)?;
    Ok(json!({
        "frame_size": frame.len(),
        "rotations": frame.elements().iter().map(|g| rows(g.rotation())).collect::<Vec<_>>(),
        "translation": frame.elements()[0].translation(),
        "canonical": canonical,
        "raw": readout(x).map_err(fail)?.as_slice(),
        "averaged": averaged.as_slice(),
    }))
}

/// PCA frame of a planar cloud and of its copy rotated by `angle` radians
/// (and mirrored when `mirror` is set). Shows that the canonical poses and
/// the frame-averaged readout agree while the raw readout does not.
#[wasm_bindgen]
pub fn pca_demo(points: &str, angle: f64, mirror: bool, proper: bool) -> Result<String, String> {
    let x = PointCloud::new(parse_points(points)?);
    let kind = if proper { GroupKind::SpecialEuclidean } else { GroupKind::Euclidean };
    let (s, c) = angle.sin_cos();
    let flip = if mirror && !proper { -1.0 } else { 1.0 };
    let rot = Matrix::from_rows(&[[c, -s * flip], [s, c * flip]]);
    let g = EuclideanMotion::new(rot, vec![0.0, 0.0]).map_err(fail)?;
    let moved = x.act(&g).map_err(fail)?;

    let cov = {
        let t = x.centroid();
        let mut y = x.points.clone();
        for i in 0..y.rows() {
            y.row_mut(i).iter_mut().zip(&t).for_each(|(v, m)| *v -= m);
        }
        y.transpose().matmul(&y)
    };
    let eig = sym_eig(&cov, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS).map_err(fail)?;
    let spacing = min_normalized_spacing(&eig.values).map_err(fail)?;
    let doc = json!({
        "points": rows(&x.points),
        "moved": rows(&moved.points),
        "eigenvalues": eig.values,
        "spacing": spacing,
        "original": pca_summary(&x, kind)?,
        "transformed": pca_summary(&moved, kind)?,
    });
    Ok(doc.to_string())
}

/// Sort frame, automorphism group and orbit structure of a graph6 graph,
/// plus the same data for a random relabelling to show `F(hG) = F(G)h⁻¹`.
#[wasm_bindgen]
pub fn graph_demo(graph6: &str, relabel_seed: u32) -> Result<String, String> {
    let g = parse_graph6(graph6.trim().as_bytes()).map_err(fail)?;
    let n = g.n();
    let h = Permutation::new(Rng::new(u64::from(relabel_seed)).permutation_map(n)).map_err(fail)?;
    let hg = g.act(&h).map_err(fail)?;
    let describe = |g: &framekit::graphio::Graph| -> Result<(Value, Option<Vec<Permutation>>), String> {
        let frame = graph_sort_frame(g, DEFAULT_TAU_LEX, DEFAULT_EPS_EIG, DEFAULT_MAX_ENUMERATION).map_err(fail)?;
        let aut = automorphisms(g).map_err(fail)?.order();
        let spectrum = sym_eig(&laplacian(g), DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS).map_err(fail)?.values;
        let (m_f, elements) = match frame.as_enumerated() {
            Some(f) => (Some(quotient(f, g).map_err(fail)?.m_f()), Some(f.elements().to_vec())),
            None => (None, None),
        };
        let code = String::from_utf8(write_graph6(g).map_err(fail)?).map_err(fail)?;
        let doc = json!({
            "graph6": code,
            "edges": g.edges(),
            "spectrum": spectrum,
            "frame_size": frame.size().map(|s| s.to_string()),
            "automorphisms": aut,
            "orbits": m_f,
        });
        Ok((doc, elements))
    };
    let (base, f) = describe(&g)?;
    let (relabelled, fh) = describe(&hg)?;
    let right_equivariant = match (f, fh) {
        (Some(f), Some(mut fh)) => {
            let mut expected: Vec<Permutation> =
                f.iter().map(|e| e.compose(&h.inverse())).collect::<Result<_, _>>().map_err(fail)?;
            expected.sort();
            fh.sort();
            Some(expected == fh)
        }
        _ => None,
    };
    let doc = json!({
        "n": n,
        "relabelling": h.as_slice(),
        "graph": base,
        "relabelled": relabelled,
        "right_equivariant": right_equivariant,
    });
    Ok(doc.to_string())
}

/// Frame-stability curve: mean distance between PCA frames of clean and
/// noisy random clouds for each noise level in `sigmas` (comma separated).
#[wasm_bindgen]
pub fn stability_demo(seed: u32, clouds: u32, points: u32, sigmas: &str) -> Result<String, String> {
    let sigmas: Vec<f64> = sigmas
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    if sigmas.is_empty() || sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err("noise levels must be finite and non-negative".into());
    }
    if !(1..=2000).contains(&clouds) || !(4..=500).contains(&points) {
        return Err("use 1 to 2000 clouds of 4 to 500 points".into());
    }
    let mut cfg = ExperimentConfig::with_seed(u64::from(seed));
    cfg.stability.clouds = clouds as usize;
    cfg.stability.points = points as usize;
    cfg.stability.sigmas = sigmas;
    let table = cmd_stability(&cfg).map_err(fail)?;
    let doc = json!({
        "columns": table.columns(),
        "rows": table.rows().iter().map(|r| r.iter().map(|v| v.as_f64()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "metadata": table.metadata(),
    });
    Ok(doc.to_string())
}
