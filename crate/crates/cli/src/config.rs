//! INI pipeline configuration. Unknown sections and keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use coronal_core::classify::{AreaMode, FeatureSet};
use coronal_core::initseg::InitParams;
use coronal_core::levelset::LevelSetParams;
use coronal_core::matchcluster::{MahalanobisModel, MatchConfig, CHI2_2_99_DISTANCE, DEFAULT_CLUSTER_THRESHOLD};
use ini::Ini;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::synth::SynthSpec;

/// Which mask plays the reference role when matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Consensus,
    Segmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub data: PathBuf,
    pub work: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub params: InitParams,
    /// External initializer mask names, one file `<name>.csv` per date.
    pub external: Vec<String>,
    /// Filter candidates with trained per-initializer selectors.
    pub selectors: bool,
    pub selector_trees: usize,
    pub selector_splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingConfig {
    pub cluster_threshold: f64,
    pub mahalanobis_threshold: f64,
    /// Standard deviation of `|ln area ratio|` for matching pairs.
    pub area_sd: f64,
    /// Standard deviation of the set distance for matching pairs.
    pub distance_sd: f64,
    pub reference: Reference,
    /// Closing radius in pixels applied to every mask before matching.
    pub close_radius: usize,
    /// Clear the polar bands before matching.
    pub remove_polar: bool,
}

impl MatchingConfig {
    pub fn to_core(&self) -> Result<MatchConfig<f64>> {
        let mm = MahalanobisModel::new(
            [0.0, 0.0],
            [[self.area_sd * self.area_sd, 0.0], [0.0, self.distance_sd * self.distance_sd]],
            self.mahalanobis_threshold,
        )
        .map_err(|e| CliError::Config(format!("[matching] {e}")))?;
        Ok(MatchConfig { cluster_threshold: self.cluster_threshold, mahalanobis: mm })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSection {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub train_fraction: f64,
    pub features: FeatureSet,
    pub area_mode: AreaMode,
    pub oob_trees: Vec<usize>,
    pub oob_depths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSection {
    pub max_evals: usize,
    pub min_step: f64,
    /// Number of leading dates used as training images.
    pub images: usize,
    /// Iterations per evolution while tuning; 0 keeps `[levelset] n_iters`.
    pub n_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub levelset: LevelSetParams,
    pub init: InitConfig,
    pub matching: MatchingConfig,
    pub forest: ForestSection,
    pub tune: TuneSection,
    pub synth: SynthSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            paths: Paths { data: PathBuf::from("data"), work: PathBuf::from("work") },
            levelset: LevelSetParams { alpha: 1.0, ..LevelSetParams::default() },
            init: InitConfig {
                params: InitParams::default(),
                external: vec!["ext_a".into(), "ext_b".into()],
                selectors: false,
                selector_trees: 50,
                selector_splits: 50,
            },
            matching: MatchingConfig {
                cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
                mahalanobis_threshold: CHI2_2_99_DISTANCE,
                area_sd: 0.5,
                distance_sd: 0.1,
                reference: Reference::Consensus,
                close_radius: 1,
                remove_polar: true,
            },
            forest: ForestSection {
                n_trees: 20,
                max_depth: 11,
                min_leaf: 1,
                train_fraction: 0.7,
                features: FeatureSet::Six,
                area_mode: AreaMode::Mixed,
                oob_trees: vec![5, 10, 20, 40],
                oob_depths: vec![3, 5, 8, 11],
            },
            tune: TuneSection { max_evals: 50, min_step: 1e-2, images: 6, n_iters: 0 },
            synth: SynthSpec::default(),
        }
    }
}

/// Reads typed values out of one INI section, remembering which keys were used.
struct Section<'a> {
    name: &'a str,
    props: Option<&'a ini::Properties>,
    used: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn get<T: FromStr>(&mut self, key: &'static str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        self.used.push(key);
        if let Some(raw) = self.props.and_then(|p| p.get(key)) {
            *slot =
                raw.trim().parse().map_err(|e| CliError::Config(format!("[{}] {key} = '{raw}': {e}", self.name)))?;
        }
        Ok(())
    }

    fn get_with<T>(&mut self, key: &'static str, slot: &mut T, parse: impl Fn(&str) -> Option<T>) -> Result<()> {
        self.used.push(key);
        if let Some(raw) = self.props.and_then(|p| p.get(key)) {
            *slot = parse(raw.trim())
                .ok_or_else(|| CliError::Config(format!("[{}] {key} = '{raw}': invalid value", self.name)))?;
        }
        Ok(())
    }

    fn get_list<T: FromStr>(&mut self, key: &'static str, slot: &mut Vec<T>) -> Result<()> {
        self.get_with(key, slot, |s| {
            if s.is_empty() {
                return Some(Vec::new());
            }
            s.split(',').map(|t| t.trim().parse().ok()).collect()
        })
    }

    fn finish(self) -> Result<()> {
        if let Some(p) = self.props {
            for (k, _) in p.iter() {
                if !self.used.contains(&k) {
                    return Err(CliError::Config(format!("unknown key '{k}' in [{}]", self.name)));
                }
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 8] = ["run", "paths", "levelset", "init", "matching", "forest", "tune", "synth"];

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CliError::Config(format!("config file not found: {}", path.display())));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("config syntax: {e}")))?;
        for (name, props) in ini.iter() {
            match name {
                None if props.is_empty() => {}
                None => {
                    let k = props.iter().next().map(|(k, _)| k).unwrap_or_default();
                    return Err(CliError::Config(format!("key '{k}' outside any section")));
                }
                Some(n) if !SECTIONS.contains(&n) => {
                    return Err(CliError::Config(format!("unknown section [{n}]")));
                }
                Some(_) => {}
            }
        }
        let sec = |name: &'static str| Section { name, props: ini.section(Some(name)), used: Vec::new() };
        let mut c = Self::default();

        let mut s = sec("run");
        s.get("seed", &mut c.seed)?;
        s.finish()?;

        let mut s = sec("paths");
        s.get("data", &mut c.paths.data)?;
        s.get("work", &mut c.paths.work)?;
        s.finish()?;

        let mut s = sec("levelset");
        let l = &mut c.levelset;
        s.get("mu", &mut l.mu)?;
        s.get("lambda", &mut l.lambda)?;
        s.get("alpha", &mut l.alpha)?;
        s.get("epsilon", &mut l.epsilon)?;
        s.get("sigma", &mut l.sigma)?;
        s.get("timestep", &mut l.timestep)?;
        s.get("n_iters", &mut l.n_iters)?;
        s.get("kernel_size", &mut l.kernel_size)?;
        s.get("init_step", &mut l.init_step)?;
        s.finish()?;

        let mut s = sec("init");
        s.get("dark_quantile", &mut c.init.params.dark_quantile)?;
        s.get("unipolarity_min", &mut c.init.params.unipolarity_min)?;
        s.get_list("external", &mut c.init.external)?;
        s.get("selectors", &mut c.init.selectors)?;
        s.get("selector_trees", &mut c.init.selector_trees)?;
        s.get("selector_splits", &mut c.init.selector_splits)?;
        s.finish()?;

        let mut s = sec("matching");
        let m = &mut c.matching;
        s.get("cluster_threshold", &mut m.cluster_threshold)?;
        s.get("mahalanobis_threshold", &mut m.mahalanobis_threshold)?;
        s.get("area_sd", &mut m.area_sd)?;
        s.get("distance_sd", &mut m.distance_sd)?;
        s.get_with("reference", &mut m.reference, |v| match v {
            "consensus" => Some(Reference::Consensus),
            "segmented" => Some(Reference::Segmented),
            _ => None,
        })?;
        s.get("close_radius", &mut m.close_radius)?;
        s.get("remove_polar", &mut m.remove_polar)?;
        s.finish()?;

        let mut s = sec("forest");
        let f = &mut c.forest;
        s.get("n_trees", &mut f.n_trees)?;
        s.get("max_depth", &mut f.max_depth)?;
        s.get("min_leaf", &mut f.min_leaf)?;
        s.get("train_fraction", &mut f.train_fraction)?;
        s.get_with("features", &mut f.features, |v| match v {
            "six" => Some(FeatureSet::Six),
            "five" => Some(FeatureSet::Five),
            _ => None,
        })?;
        s.get_with("area_mode", &mut f.area_mode, |v| match v {
            "mixed" => Some(AreaMode::Mixed),
            "spherical" => Some(AreaMode::Spherical),
            _ => None,
        })?;
        s.get_list("oob_trees", &mut f.oob_trees)?;
        s.get_list("oob_depths", &mut f.oob_depths)?;
        s.finish()?;

        let mut s = sec("tune");
        s.get("max_evals", &mut c.tune.max_evals)?;
        s.get("min_step", &mut c.tune.min_step)?;
        s.get("images", &mut c.tune.images)?;
        s.get("n_iters", &mut c.tune.n_iters)?;
        s.finish()?;

        let mut s = sec("synth");
        let y = &mut c.synth;
        s.get("n_dates", &mut y.n_dates)?;
        s.get("rows", &mut y.rows)?;
        s.get("cols", &mut y.cols)?;
        s.get("holes_min", &mut y.holes_min)?;
        s.get("holes_max", &mut y.holes_max)?;
        s.get("axis_min", &mut y.axis_min)?;
        s.get("axis_max", &mut y.axis_max)?;
        s.get("polar_prob", &mut y.polar_prob)?;
        s.get("separation", &mut y.separation)?;
        s.get("nobs_rows", &mut y.nobs_rows)?;
        s.get("background", &mut y.background)?;
        s.get("background_var", &mut y.background_var)?;
        s.get("noise", &mut y.noise)?;
        s.get("edge_depth", &mut y.edge_depth)?;
        s.get("edge_width", &mut y.edge_width)?;
        s.get("halo_depth", &mut y.halo_depth)?;
        s.get("halo_scale", &mut y.halo_scale)?;
        s.get("hole_flux", &mut y.hole_flux)?;
        s.get("background_flux", &mut y.background_flux)?;
        s.get("flux_wavelength", &mut y.flux_wavelength)?;
        s.get("unipolar_margin", &mut y.unipolar_margin)?;
        s.get("n_models", &mut y.n_models)?;
        s.get("good_fraction", &mut y.good_fraction)?;
        s.get("jitter_good", &mut y.jitter_good)?;
        s.get("jitter_bad", &mut y.jitter_bad)?;
        s.get("scale_sd_good", &mut y.scale_sd_good)?;
        s.get("scale_sd_bad", &mut y.scale_sd_bad)?;
        s.get("remove_good", &mut y.remove_good)?;
        s.get("remove_bad", &mut y.remove_bad)?;
        s.get("add_good", &mut y.add_good)?;
        s.get("add_bad", &mut y.add_bad)?;
        s.get("label_threshold", &mut y.label_threshold)?;
        s.get("ext_fakes_max", &mut y.ext_fakes_max)?;
        s.get("start", &mut y.start)?;
        s.finish()?;

        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: coronal_core::Error| CliError::Config(e.to_string());
        self.levelset.validate().map_err(cfg)?;
        self.init.params.validate().map_err(cfg)?;
        self.matching.to_core()?.validate().map_err(cfg)?;
        let f = &self.forest;
        if f.n_trees == 0 || f.max_depth == 0 || f.min_leaf == 0 {
            return Err(CliError::Config("[forest] n_trees, max_depth and min_leaf must be positive".into()));
        }
        if !(f.train_fraction > 0.0 && f.train_fraction < 1.0) {
            return Err(CliError::Config("[forest] train_fraction must lie in (0, 1)".into()));
        }
        if f.oob_trees.iter().chain(&f.oob_depths).any(|&v| v == 0) {
            return Err(CliError::Config("[forest] OOB grid values must be positive".into()));
        }
        if self.init.selector_trees == 0 {
            return Err(CliError::Config("[init] selector_trees must be positive".into()));
        }
        if self.tune.max_evals == 0 || !(self.tune.min_step > 0.0) || self.tune.images == 0 {
            return Err(CliError::Config("[tune] max_evals, min_step and images must be positive".into()));
        }
        self.synth.validate()
    }
}
