use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{BilateralParams, StructuringElement};
use crate::threshold::OtsuMode;

/// Every tunable of the segmentation pipeline. Defaults reproduce the
/// published settings, so a bare run needs no config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Patch size for both localisation and thresholding.
    pub loc_patch: usize,
    pub loc_stride: usize,
    pub thr_stride: usize,
    pub bilateral_sigma_s: f64,
    /// Range deviation on the 0..255 intensity scale.
    pub bilateral_sigma_r: f64,
    pub bilateral_d: usize,
    pub erosion_size: usize,
    pub erosion_iterations: usize,
    pub closing_size: usize,
    pub closing_iterations: usize,
    /// Merged localisation values at or below this are dropped.
    pub retention_cut: f64,
    pub gold_dilation_size: usize,
    pub gold_dilation_iterations: usize,
    pub otsu_mode: OtsuMode,
    /// Disabling removes both bilateral passes.
    pub enable_bilateral: bool,
    pub enable_closing: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            loc_patch: 32,
            loc_stride: 16,
            thr_stride: 8,
            bilateral_sigma_s: 120.0,
            bilateral_sigma_r: 120.0,
            bilateral_d: 2,
            erosion_size: 3,
            erosion_iterations: 4,
            closing_size: 3,
            closing_iterations: 1,
            retention_cut: 0.5,
            gold_dilation_size: 16,
            gold_dilation_iterations: 1,
            otsu_mode: OtsuMode::Three,
            enable_bilateral: true,
            enable_closing: true,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text)
            .map_err(|e| Error::Usage(format!("invalid pipeline config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("loc_patch", self.loc_patch),
            ("loc_stride", self.loc_stride),
            ("thr_stride", self.thr_stride),
            ("bilateral_d", self.bilateral_d),
            ("erosion_size", self.erosion_size),
            ("erosion_iterations", self.erosion_iterations),
            ("closing_size", self.closing_size),
            ("closing_iterations", self.closing_iterations),
            ("gold_dilation_size", self.gold_dilation_size),
            ("gold_dilation_iterations", self.gold_dilation_iterations),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Usage(format!("{name} must be >= 1")));
            }
        }
        for (name, stride) in [("loc_stride", self.loc_stride), ("thr_stride", self.thr_stride)] {
            if stride > self.loc_patch {
                return Err(Error::Usage(format!(
                    "{name} {stride} exceeds patch size {}",
                    self.loc_patch
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.retention_cut) {
            return Err(Error::Usage(format!(
                "retention_cut {} outside [0,1]",
                self.retention_cut
            )));
        }
        self.bilateral().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(())
    }

    pub fn bilateral(&self) -> Result<BilateralParams> {
        BilateralParams::from_8bit_range(
            self.bilateral_sigma_s,
            self.bilateral_sigma_r,
            self.bilateral_d,
        )
    }

    pub fn erosion(&self) -> Result<StructuringElement> {
        StructuringElement::square(self.erosion_size, self.erosion_iterations)
    }

    pub fn closing(&self) -> Result<StructuringElement> {
        StructuringElement::square(self.closing_size, self.closing_iterations)
    }

    pub fn gold_dilation(&self) -> Result<StructuringElement> {
        StructuringElement::square(self.gold_dilation_size, self.gold_dilation_iterations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let b = cfg.bilateral().unwrap();
        assert!((b.sigma_r - 120.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let cfg = PipelineConfig::from_json(r#"{"thr_stride": 16, "otsu_mode": "two"}"#).unwrap();
        assert_eq!(cfg.thr_stride, 16);
        assert_eq!(cfg.otsu_mode, OtsuMode::Two);
        assert_eq!(cfg.loc_stride, 16);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for bad in [
            r#"{"thr_stride": 64}"#,
            r#"{"retention_cut": 1.5}"#,
            r#"{"erosion_size": 0}"#,
            r#"{"no_such_field": 1}"#,
            r#"{"bilateral_sigma_r": -1}"#,
        ] {
            assert!(matches!(PipelineConfig::from_json(bad), Err(Error::Usage(_))), "{bad}");
        }
    }
}
