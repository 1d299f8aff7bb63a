//! JSON scene files.

use std::path::Path;

use anyhow::{bail, Context};
use lightning_heat::asym::{AsymModel, Shape};
use lightning_heat::geometry::{Body, BoundaryData, Polygon, Scene, Source};
use lightning_heat::{c64, Complex64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub diffusivity: f64,
    #[serde(default)]
    pub bodies: Vec<BodySpec>,
    pub source: SourceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runge_centers: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_tag: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            kind: "zero".into(),
            params: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_vertices: Option<Vec<[f64; 2]>>,
}

fn point(p: &[f64; 2]) -> Complex64 {
    c64(p[0], p[1])
}

fn points(ps: &[[f64; 2]]) -> Vec<Complex64> {
    ps.iter().map(point).collect()
}

impl BoundarySpec {
    fn to_data(&self) -> anyhow::Result<BoundaryData> {
        let want = |n: usize| -> anyhow::Result<()> {
            if self.params.len() != n {
                bail!("boundary type `{}` takes {n} parameter(s), got {}", self.kind, self.params.len());
            }
            Ok(())
        };
        match self.kind.as_str() {
            "zero" => {
                want(0)?;
                Ok(BoundaryData::Zero)
            }
            "constant" => {
                want(1)?;
                Ok(BoundaryData::Constant(self.params[0]))
            }
            "re_pow" => {
                want(1)?;
                let p = self.params[0];
                if p.fract() != 0.0 || p.abs() > i32::MAX as f64 {
                    bail!("re_pow exponent must be an integer, got {p}");
                }
                Ok(BoundaryData::RePow(p as i32))
            }
            other => bail!("unknown boundary type `{other}` (expected zero, constant or re_pow)"),
        }
    }
}

impl SourceSpec {
    fn to_source(&self) -> anyhow::Result<Source> {
        match self.kind.as_str() {
            "delta" => {
                let at = self.location.as_ref().context("delta source needs `location`")?;
                Ok(Source::Delta(point(at)))
            }
            "region" => {
                let vs = self.region_vertices.as_ref().context("region source needs `region_vertices`")?;
                Ok(Source::Region(Polygon::new(points(vs))?))
            }
            "none" => Ok(Source::None),
            other => bail!("unknown source type `{other}` (expected delta, region or none)"),
        }
    }
}

impl SceneFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn scene(&self) -> anyhow::Result<Scene> {
        let bodies = self
            .bodies
            .iter()
            .enumerate()
            .map(|(i, b)| Body::new(points(&b.vertices)).with_context(|| format!("body {i}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let boundary = self
            .bodies
            .iter()
            .enumerate()
            .map(|(i, b)| b.boundary.to_data().with_context(|| format!("body {i}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Scene::new(bodies, self.diffusivity, self.source.to_source()?, boundary)?)
    }

    pub fn runge_centers(&self) -> Option<Vec<Complex64>> {
        self.runge_centers.as_deref().map(points)
    }

    /// Point-absorber model from tagged bodies: centroid as center and the
    /// shortest edge as side length.
    pub fn asym_model(&self, scene: &Scene) -> anyhow::Result<AsymModel> {
        let Source::Delta(z0) = scene.source() else {
            bail!("the asymptotic model needs a delta source");
        };
        let mut shapes = Vec::with_capacity(self.bodies.len());
        for (i, (spec, body)) in self.bodies.iter().zip(scene.bodies()).enumerate() {
            let tag = spec.shape_tag.as_deref().with_context(|| format!("body {i} has no shape_tag"))?;
            let shape: Shape = tag.parse().with_context(|| format!("body {i}"))?;
            let h = body.edge_lengths().iter().copied().fold(f64::INFINITY, f64::min);
            shapes.push((shape, body.centroid(), h));
        }
        Ok(AsymModel::from_shapes(&shapes, *z0, scene.diffusivity())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{
        "diffusivity": 1.0,
        "bodies": [{"vertices": [[-0.5,-0.5],[0.5,-0.5],[0.5,0.5],[-0.5,0.5]], "shape_tag": "square"}],
        "source": {"type": "delta", "location": [2, 0]}
    }"#;

    #[test]
    fn parses_minimal_scene() {
        let file: SceneFile = serde_json::from_str(SQUARE).unwrap();
        let scene = file.scene().unwrap();
        assert_eq!(scene.bodies().len(), 1);
        assert_eq!(scene.boundary()[0], BoundaryData::Zero);
        assert_eq!(*scene.source(), Source::Delta(c64(2.0, 0.0)));
        let model = file.asym_model(&scene).unwrap();
        assert!((model.capacitances()[0] - 0.590_170).abs() < 1e-6);
    }

    #[test]
    fn round_trips_through_json() {
        let file: SceneFile = serde_json::from_str(SQUARE).unwrap();
        let again: SceneFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
        assert_eq!(file, again);
    }

    #[test]
    fn rejects_bad_fields() {
        let bad_boundary = SQUARE.replace(r#""shape_tag": "square""#, r#""boundary": {"type": "constant"}"#);
        let file: SceneFile = serde_json::from_str(&bad_boundary).unwrap();
        assert!(file.scene().is_err());
        let unknown = SQUARE.replace("diffusivity", "diffusion");
        assert!(serde_json::from_str::<SceneFile>(&unknown).is_err());
        let no_location = SQUARE.replace(r#", "location": [2, 0]"#, "");
        let file: SceneFile = serde_json::from_str(&no_location).unwrap();
        assert!(file.scene().is_err());
        let bad_tag = SQUARE.replace(r#""square""#, r#""circle""#);
        let file: SceneFile = serde_json::from_str(&bad_tag).unwrap();
        assert!(file.asym_model(&file.scene().unwrap()).is_err());
    }
}
