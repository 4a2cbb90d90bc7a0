//! Flat `key = value` run configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dwtunnel::geometry::{ShapeKind, ShapeSpec};
use dwtunnel::qsolver::DEFAULT_TOLERANCE;

use crate::CliError;

/// Everything one run needs. Built from defaults, then the config file,
/// then command-line overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub shape: ShapeSpec,
    pub h: f64,
    /// Second grid spacing for Richardson refinement of the splittings.
    pub refine_h: Option<f64>,
    pub e_max: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub n_traj: usize,
    pub n_bounces: usize,
    pub husimi_n_y0: usize,
    pub husimi_n_py: usize,
    /// Pair ordinals whose Husimi grids are drawn as heatmaps.
    pub husimi_heatmaps: Vec<usize>,
    pub oned_well_width: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            shape: ShapeSpec::new(ShapeKind::Rectangle),
            h: 0.02,
            refine_h: None,
            e_max: 300.0,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            n_traj: 400,
            n_bounces: 400,
            husimi_n_y0: 64,
            husimi_n_py: 64,
            husimi_heatmaps: Vec::new(),
            oned_well_width: 2.0,
            out: PathBuf::from("out"),
        }
    }
}

fn config_error(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| config_error(line, format!("cannot parse `{value}` for `{key}`")))
}

fn positive(line: usize, key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = parse(line, key, value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(config_error(line, format!("`{key}` must be positive, got {value}")))
    }
}

fn count(line: usize, key: &str, value: &str) -> Result<usize, CliError> {
    let v: usize = parse(line, key, value)?;
    if v > 0 {
        Ok(v)
    } else {
        Err(config_error(line, format!("`{key}` must be positive")))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses config text. `shape` may appear anywhere; shape parameters
    /// (`param.<name>`) are applied after it.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(n + 1, format!("expected key = value, got `{line}`")))?;
            entries.push((n + 1, key.trim().to_string(), value.trim().to_string()));
        }

        let mut cfg = RunConfig::default();
        if let Some((n, _, v)) = entries.iter().rev().find(|(_, k, _)| k == "shape") {
            let kind: ShapeKind = v.parse().map_err(|e| config_error(*n, e))?;
            cfg.shape = ShapeSpec::new(kind);
        }
        for (n, key, value) in &entries {
            let (n, v) = (*n, value.as_str());
            match key.as_str() {
                "shape" => {}
                "h" => cfg.h = positive(n, key, v)?,
                "refine_h" => cfg.refine_h = Some(positive(n, key, v)?),
                "e_max" => cfg.e_max = positive(n, key, v)?,
                "tolerance" => cfg.tolerance = positive(n, key, v)?,
                "seed" => cfg.seed = parse(n, key, v)?,
                "n_traj" => cfg.n_traj = count(n, key, v)?,
                "n_bounces" => cfg.n_bounces = count(n, key, v)?,
                "husimi_n_y0" => cfg.husimi_n_y0 = count(n, key, v)?,
                "husimi_n_py" => cfg.husimi_n_py = count(n, key, v)?,
                "husimi_heatmaps" => {
                    cfg.husimi_heatmaps = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse(n, key, s))
                        .collect::<Result<_, _>>()?
                }
                "oned_well_width" => cfg.oned_well_width = positive(n, key, v)?,
                "barrier_width" => cfg.shape.barrier_width = positive(n, key, v)?,
                "barrier_height" => cfg.shape.barrier_height = positive(n, key, v)?,
                "well_area" => cfg.shape.well_area = positive(n, key, v)?,
                "out" => cfg.out = PathBuf::from(v),
                other => match other.strip_prefix("param.") {
                    Some(name) => {
                        let value = positive(n, key, v)?;
                        cfg.shape.params.set(name, value).map_err(|e| config_error(n, e))?;
                    }
                    None => return Err(config_error(n, format!("unknown key `{other}`"))),
                },
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dwtunnel::geometry::ShapeParams;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = RunConfig::parse(
            "# butterfly run\nparam.sagitta = 0.5\nshape = butterfly\nh=0.025 # coarse\nseed = 9\nhusimi_heatmaps = 0, 4\n",
        )
        .unwrap();
        assert_eq!(cfg.shape.params, ShapeParams::Butterfly { height: 2.4, sagitta: 0.5 });
        assert_eq!(cfg.h, 0.025);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.husimi_heatmaps, vec![0, 4]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "shape = hexagon",
            "colour = red",
            "h = -0.1",
            "n_traj = 0",
            "e_max",
            "param.radius = 1.0",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }
}
