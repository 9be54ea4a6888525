//! Declarative pipeline description (TOML) and the built-in profiles.
//!
//! ```toml
//! n_steps = 100
//!
//! [mesh]
//! kind = "rpp"            # or "blob", or "file" with `path = "..."`
//! long_side = 1.0
//! ...
//!
//! [[sampling]]
//! mode = "box"
//! region = "tip"
//! extents = [0.4, 0.8, 0.8]
//! spacing = 0.08
//!
//! [session]
//! k = 5
//! ...
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eval::{ReferenceMetrics, SessionConfig};
use crate::fem::{elasticity_matrix, Elasticity, MaterialParams};
use crate::mesh::{
    generate_blob, generate_rpp, load_mesh, BlobRegion, BlobSpec, LatticeBox, NearestSelector, RppRegion, RppSpec,
    ScaleConvention, TetMesh,
};
use crate::nn::TrainConfig;
use crate::sampling::{NormalChoice, ReferenceLength, RegionSampling};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshSource {
    Rpp(RppSpec),
    Blob(BlobSpec),
    /// Relative paths resolve against the config file's directory.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// FEM increments per sample.
    pub n_steps: usize,
    #[serde(default)]
    pub keep_forces: bool,
    #[serde(default)]
    pub material: MaterialParams,
    #[serde(default)]
    pub scale: ScaleConvention,
    pub mesh: MeshSource,
    pub sampling: Vec<RegionSampling>,
    pub session: SessionConfig,
}

pub const PROFILE_NAMES: [&str; 4] = ["rpp1-paper", "liver1-paper", "rpp1-desk", "rpp6-desk"];

/// 1.0 × 0.2 × 0.2 bar on a 0.1 lattice (11 × 3 × 3 vertices).
/// The x = 0 end face is fixed; observations sit on far edges and corners.
fn rpp_spec(regions: Vec<RppRegion>) -> RppSpec {
    RppSpec {
        long_side: 1.0,
        short_side: 0.2,
        spacing: 0.1,
        fixed: vec![LatticeBox { min: [0, 0, 0], max: [0, 2, 2] }],
        regions,
        observation: vec![[3, 0, 0], [6, 2, 2], [9, 0, 2]],
    }
}

fn region(name: &str, min: [usize; 3], max: [usize; 3]) -> RppRegion {
    RppRegion { name: name.into(), boxes: vec![LatticeBox { min, max }] }
}

fn rpp1(spacing: f64, n_steps: usize, session: SessionConfig) -> PipelineConfig {
    PipelineConfig {
        n_steps,
        keep_forces: false,
        material: MaterialParams::default(),
        scale: ScaleConvention::default(),
        mesh: MeshSource::Rpp(rpp_spec(vec![region("tip", [10, 0, 0], [10, 2, 2])])),
        // 102.4 mm along the bar, 204.8 mm across it.
        sampling: vec![RegionSampling::Box { region: "tip".into(), extents: [0.4, 0.8, 0.8], spacing }],
        session,
    }
}

/// Six three-vertex patches on the top, side, bottom and end faces.
fn rpp6_regions() -> Vec<RppRegion> {
    vec![
        region("top-mid", [4, 1, 2], [6, 1, 2]),
        region("top-end", [8, 1, 2], [10, 1, 2]),
        region("side-mid", [4, 0, 1], [6, 0, 1]),
        region("side-end", [8, 2, 1], [10, 2, 1]),
        region("bottom-mid", [4, 1, 0], [6, 1, 0]),
        region("end", [10, 0, 1], [10, 2, 1]),
    ]
}

/// Liver-sized irregular blob: about 0.86 units long (221 mm), fixed near the
/// middle of its underside, nine surface observation points.
pub fn liver_blob() -> BlobSpec {
    BlobSpec {
        radii: [0.43, 0.2, 0.15],
        spacing: 0.0655,
        taper: 0.45,
        jitter: 0.12,
        seed: 11,
        fixed: NearestSelector { point: [0.0, 0.0, -0.08], count: 34, surface_only: false },
        regions: vec![BlobRegion {
            name: "lobe".into(),
            select: NearestSelector { point: [0.38, 0.1, 0.12], count: 6, surface_only: true },
        }],
        observation: vec![
            [-0.43, 0.0, 0.0],
            [-0.2, 0.2, 0.1],
            [-0.2, -0.2, 0.1],
            [0.0, 0.3, 0.15],
            [0.0, -0.3, 0.15],
            [0.2, 0.3, -0.1],
            [0.2, -0.3, -0.1],
            [0.43, 0.0, -0.05],
            [0.1, 0.0, 0.2],
        ],
    }
}

impl PipelineConfig {
    pub fn profile(name: &str) -> Result<Self> {
        let full_train = |batch_size, inner_iters| TrainConfig {
            epochs: 100,
            batch_size,
            inner_iters,
            eval_every: 100,
            ..TrainConfig::default()
        };
        let desk_train =
            TrainConfig { epochs: 20, batch_size: 20, inner_iters: 10, eval_every: 50, ..TrainConfig::default() };
        Ok(match name {
            "rpp1-paper" => rpp1(
                0.02,
                1000,
                SessionConfig {
                    k: 5,
                    repeats: 10,
                    hidden: [90, 90],
                    train: full_train(1000, 10),
                    reference: Some(ReferenceMetrics { label: "RPP1".into(), rmse_mm: 0.114, rmse_pct: 0.074 }),
                    ..SessionConfig::default()
                },
            ),
            "rpp1-desk" => rpp1(
                0.08,
                100,
                SessionConfig { k: 5, repeats: 1, hidden: [90, 90], train: desk_train, ..SessionConfig::default() },
            ),
            "rpp6-desk" => PipelineConfig {
                n_steps: 100,
                keep_forces: false,
                material: MaterialParams::default(),
                scale: ScaleConvention::default(),
                mesh: MeshSource::Rpp(rpp_spec(rpp6_regions())),
                sampling: rpp6_regions()
                    .into_iter()
                    .map(|r| RegionSampling::Ellipsoid {
                        region: r.name,
                        r_para: 0.05,
                        r_perp: 0.2,
                        spacing: 0.03,
                        reference: ReferenceLength::FixedToContact,
                        normal: NormalChoice::Surface,
                    })
                    .collect(),
                session: SessionConfig {
                    k: 5,
                    repeats: 1,
                    hidden: [90, 90],
                    train: desk_train,
                    ..SessionConfig::default()
                },
            },
            "liver1-paper" => PipelineConfig {
                n_steps: 1000,
                keep_forces: false,
                material: MaterialParams::default(),
                scale: ScaleConvention::default(),
                mesh: MeshSource::Blob(liver_blob()),
                sampling: vec![RegionSampling::Ellipsoid {
                    region: "lobe".into(),
                    r_para: 0.2,
                    r_perp: 0.3,
                    spacing: 0.01,
                    reference: ReferenceLength::LongestDiameter,
                    normal: NormalChoice::None,
                }],
                session: SessionConfig {
                    k: 5,
                    repeats: 10,
                    hidden: [295, 295],
                    train: full_train(500, 40),
                    reference: Some(ReferenceMetrics { label: "Liver1".into(), rmse_mm: 0.041, rmse_pct: 0.062 }),
                    ..SessionConfig::default()
                },
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown profile {other:?}; available: {}",
                    PROFILE_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let MeshSource::File { path: mesh_path } = &mut cfg.mesh {
            if mesh_path.is_relative() {
                *mesh_path = path.parent().unwrap_or(Path::new(".")).join(&*mesh_path);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config serializes to TOML")
    }

    /// Checks every numeric field; region names are checked against the
    /// mesh by [`PipelineConfig::build_mesh`].
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1".into());
        }
        if self.sampling.is_empty() {
            return bad("at least one sampling plan is required".into());
        }
        self.material.validate()?;
        ScaleConvention::new(self.scale.mm_per_unit)?;
        let s = &self.session;
        if s.k < 2 || s.repeats == 0 || s.hidden.contains(&0) {
            return bad(format!(
                "session needs k >= 2, repeats >= 1 and positive hidden sizes (k = {}, repeats = {}, hidden = {:?})",
                s.k, s.repeats, s.hidden
            ));
        }
        s.train.validate()?;
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<TetMesh> {
        let mesh = match &self.mesh {
            MeshSource::Rpp(spec) => generate_rpp(spec)?,
            MeshSource::Blob(spec) => generate_blob(spec)?,
            MeshSource::File { path } => load_mesh(path)?,
        };
        for plan in &self.sampling {
            mesh.region(plan.region())
                .map_err(|_| Error::Config(format!("sampling plan references unknown region {:?}", plan.region())))?;
        }
        Ok(mesh)
    }

    pub fn elasticity(&self) -> Result<Elasticity> {
        Ok(elasticity_matrix(&self.material)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_profile_validates_and_round_trips() {
        for name in PROFILE_NAMES {
            let cfg = PipelineConfig::profile(name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml();
            assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), cfg, "{name}");
        }
        assert!(PipelineConfig::profile("nope").is_err());
    }

    #[test]
    fn rpp_profiles_build_the_99_vertex_bar() {
        for name in ["rpp1-desk", "rpp6-desk"] {
            let mesh = PipelineConfig::profile(name).unwrap().build_mesh().unwrap();
            assert_eq!(mesh.vertex_count(), 99);
            assert_eq!(mesh.fixed_ids().len(), 9);
            assert_eq!(mesh.observation_ids().len(), 3);
        }
    }

    #[test]
    fn invalid_fields_are_rejected() {
        let mut cfg = PipelineConfig::profile("rpp1-desk").unwrap();
        cfg.session.k = 1;
        assert!(PipelineConfig::from_toml_str(&cfg.to_toml()).is_err());
        let text = PipelineConfig::profile("rpp1-desk").unwrap().to_toml().replace("n_steps = 100", "n_steps = 0");
        assert!(PipelineConfig::from_toml_str(&text).is_err());
        let text =
            PipelineConfig::profile("rpp1-desk").unwrap().to_toml().replace("region = \"tip\"", "region = \"nope\"");
        assert!(PipelineConfig::from_toml_str(&text).unwrap().build_mesh().is_err());
        assert!(PipelineConfig::from_toml_str("n_steps = 1\nbogus = 2").is_err());
    }
}
