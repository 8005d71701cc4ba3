//! JSON description of an IFS:
//! `{"maps": [{"A": [[a11,a12],[a21,a22]], "t": [t1,t2]}, ...], "weights": [...]}`.
//! Systems on the line use `"A": [[a]]` and `"t": [t]`.

use super::{AffineMap2, Ifs};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct MapSpec {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    t: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IfsSpec {
    maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl Ifs {
    pub fn from_json(text: &str) -> Result<Ifs> {
        let spec: IfsSpec = serde_json::from_str(text)?;
        if spec.maps.is_empty() {
            return Err(Error::InvalidIfs("no maps".into()));
        }
        let dim = spec.maps[0].t.len();
        let mut maps = Vec::with_capacity(spec.maps.len());
        for (i, m) in spec.maps.iter().enumerate() {
            let square = m.a.len() == dim && m.a.iter().all(|r| r.len() == dim);
            if m.t.len() != dim || !square || !(dim == 1 || dim == 2) {
                return Err(Error::Parse(format!(
                    "map {i}: expected a {dim}×{dim} matrix and a length-{dim} translation"
                )));
            }
            maps.push(if dim == 1 {
                let a = m.a[0][0];
                AffineMap2::new(Mat2::diag(a, a), Vec2::new(m.t[0], 0.0))
            } else {
                AffineMap2::new(
                    Mat2::new(m.a[0][0], m.a[0][1], m.a[1][0], m.a[1][1]),
                    Vec2::new(m.t[0], m.t[1]),
                )
            });
        }
        Ifs::build(dim as u8, maps, spec.weights)
    }

    pub fn to_json(&self) -> String {
        let maps = self
            .maps()
            .iter()
            .map(|m| {
                if self.dim() == 1 {
                    MapSpec { a: vec![vec![m.a.a]], t: vec![m.t.x] }
                } else {
                    MapSpec {
                        a: vec![vec![m.a.a, m.a.b], vec![m.a.c, m.a.d]],
                        t: vec![m.t.x, m.t.y],
                    }
                }
            })
            .collect();
        let spec = IfsSpec {
            maps,
            weights: self.weights().map(|w| w.to_vec()),
        };
        serde_json::to_string_pretty(&spec).expect("plain data serializes")
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Ifs> {
        Ifs::from_json(&std::fs::read_to_string(path)?)
    }
}
