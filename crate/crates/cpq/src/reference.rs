//! Checked-in reference values and the cases they belong to.
//!
//! The file is a JSON array of [`ReferenceValue`]. Each entry carries a hash
//! of the configuration it was computed for, so stale entries are detected
//! when a case definition changes.

use std::fs;
use std::path::{Path, PathBuf};

use cpq_core::{CurvedTriangle, DensityPolynomial, Point2, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh_io::{read_msh, SurfaceMesh};
use crate::oracle::{
    reference_pair_with, reference_single_with, Estimate, OracleOptions, OuterStrategy, Strategy,
};

pub const REFERENCE_ENV: &str = "CPQ_REFERENCE_FILE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub case_id: String,
    /// `(re, im)`.
    pub value: (f64, f64),
    pub est_error: f64,
    pub method: String,
    pub config_hash: String,
}

/// Path of the reference file: `$CPQ_REFERENCE_FILE` if set, else the file
/// shipped with this crate.
pub fn reference_path() -> PathBuf {
    match std::env::var_os(REFERENCE_ENV) {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("data/references.json"),
    }
}

/// The 84-triangle sphere mesh shipped with the tests.
pub fn sphere_mesh_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/sphere84.msh")
}

pub fn load(path: &Path) -> Result<Vec<ReferenceValue>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save(path: &Path, values: &[ReferenceValue]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(values)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn find<'a>(values: &'a [ReferenceValue], case_id: &str) -> Result<&'a ReferenceValue> {
    values
        .iter()
        .find(|v| v.case_id == case_id)
        .ok_or_else(|| Error::UnknownCase(case_id.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseSpec {
    Single {
        tri: CurvedTriangle,
        density: DensityPolynomial,
        x0: Vec3,
    },
    /// Unit densities on both triangles.
    Pair { tri_x: CurvedTriangle, tri_y: CurvedTriangle },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub id: String,
    pub spec: CaseSpec,
    pub tol: f64,
}

fn fmt_points(points: &[Vec3]) -> String {
    points
        .iter()
        .map(|p| format!("({:e},{:e},{:e})", p[0], p[1], p[2]))
        .collect::<Vec<_>>()
        .join(";")
}

impl Case {
    /// Canonical description hashed into `config_hash`.
    pub fn describe(&self) -> String {
        match &self.spec {
            CaseSpec::Single { tri, density, x0 } => format!(
                "single|tri={}|density={:?}|x0={}|tol={:e}",
                fmt_points(tri.control_points()),
                density,
                fmt_points(&[*x0]),
                self.tol
            ),
            CaseSpec::Pair { tri_x, tri_y } => format!(
                "pair|x={}|y={}|tol={:e}",
                fmt_points(tri_x.control_points()),
                fmt_points(tri_y.control_points()),
                self.tol
            ),
        }
    }

    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.describe().as_bytes()))
    }

    /// Runs the oracle with both strategies and keeps the first value; the
    /// estimate is widened to cover their disagreement.
    pub fn compute(&self) -> Result<ReferenceValue> {
        let opts = OracleOptions::default();
        let (a, b): (Estimate, Estimate) = match &self.spec {
            CaseSpec::Single { tri, density, x0 } => (
                reference_single_with(tri, density, x0, self.tol, Strategy::Graded, &opts)?,
                reference_single_with(tri, density, x0, self.tol, Strategy::Quadtree, &opts)?,
            ),
            CaseSpec::Pair { tri_x, tri_y } => (
                reference_pair_with(tri_x, tri_y, self.tol, OuterStrategy::TanhSinh, &opts)?,
                reference_pair_with(tri_x, tri_y, self.tol, OuterStrategy::Sigmoidal, &opts)?,
            ),
        };
        let spread = (a.value - b.value).abs();
        Ok(ReferenceValue {
            case_id: self.id.clone(),
            value: (a.value, 0.0),
            est_error: a.est_error.max(spread),
            method: format!("{} (cross-check {}: |diff| = {:.1e})", a.method, b.method, spread),
            config_hash: self.config_hash(),
        })
    }
}

pub const SINGULAR: &str = "patch-singular";
pub const NEAR_SINGULAR: &str = "patch-near-singular";
pub const PAIR_IDENTICAL: &str = "patch-pair-identical";
pub const PAIR_SHIFTED: &str = "patch-pair-shifted";
pub const SPHERE_IDENTICAL: &str = "sphere84-identical-0-0";
pub const SPHERE_EDGE: &str = "sphere84-edge-0-1";
pub const SPHERE_VERTEX: &str = "sphere84-vertex-0-3";

/// Element pairs of the sphere fixture used for the mesh scenarios.
pub const SPHERE_PAIRS: [(&str, usize, usize); 3] = [(SPHERE_IDENTICAL, 0, 0), (SPHERE_EDGE, 0, 1), (SPHERE_VERTEX, 0, 3)];

pub fn test_patch() -> CurvedTriangle {
    CurvedTriangle::paper_triangle(0.6, 0.7, 0.5).expect("test triangle is valid")
}

/// `F(0.2, 0.4)` on the test triangle, optionally pushed by `-dz` along `z`.
pub fn patch_point(dz: f64) -> Vec3 {
    test_patch().map_point(&Point2::new(0.2, 0.4)) - Vec3::new(0.0, 0.0, dz)
}

pub fn shifted_test_patch() -> CurvedTriangle {
    test_patch().translated(&Vec3::new(5e-2, 5e-2, 0.0))
}

/// All cases with checked-in reference values.
pub fn standard_cases(sphere: &SurfaceMesh) -> Result<Vec<Case>> {
    let t = test_patch();
    let one = DensityPolynomial::one();
    let mut cases = vec![
        Case {
            id: SINGULAR.into(),
            spec: CaseSpec::Single {
                tri: t.clone(),
                density: one.clone(),
                x0: patch_point(0.0),
            },
            tol: 1e-13,
        },
        Case {
            id: NEAR_SINGULAR.into(),
            spec: CaseSpec::Single {
                tri: t.clone(),
                density: one,
                x0: patch_point(1e-4),
            },
            tol: 1e-12,
        },
        Case {
            id: PAIR_IDENTICAL.into(),
            spec: CaseSpec::Pair {
                tri_x: t.clone(),
                tri_y: t.clone(),
            },
            tol: 1e-9,
        },
        Case {
            id: PAIR_SHIFTED.into(),
            spec: CaseSpec::Pair {
                tri_x: t,
                tri_y: shifted_test_patch(),
            },
            tol: 1e-8,
        },
    ];
    for (id, a, b) in SPHERE_PAIRS {
        cases.push(Case {
            id: id.into(),
            spec: CaseSpec::Pair {
                tri_x: sphere.triangle(a)?,
                tri_y: sphere.triangle(b)?,
            },
            tol: 1e-10,
        });
    }
    Ok(cases)
}

pub fn standard_cases_from_fixture() -> Result<Vec<Case>> {
    standard_cases(&read_msh(sphere_mesh_path())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_configuration() {
        let cases = standard_cases_from_fixture().unwrap();
        assert_eq!(cases.len(), 7);
        let mut c = cases[0].clone();
        let h = c.config_hash();
        assert_eq!(h.len(), 64);
        c.tol *= 2.0;
        assert_ne!(c.config_hash(), h);
    }

    #[test]
    fn json_round_trip() {
        let v = vec![ReferenceValue {
            case_id: "x".into(),
            value: (0.1 + 0.2, -1e-300),
            est_error: 1e-13,
            method: "m".into(),
            config_hash: "00".into(),
        }];
        let dir = std::env::temp_dir().join(format!("cpq-ref-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("r.json");
        save(&p, &v).unwrap();
        assert_eq!(load(&p).unwrap(), v);
        assert!(matches!(find(&v, "y"), Err(Error::UnknownCase(_))));
    }
}
