//! JSON forms of intrinsics and calibration results.

use std::path::Path;

use raycalib_core::calib::{ActiveBound, Warning};
use raycalib_core::{CalibrationResult, CameraSpec, ModelId};
use serde::{Deserialize, Serialize};

use crate::error::{self, CliError, Result};

/// `{"model", "width", "height", "fx", "fy", "cx", "cy", "dist"}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub model: String,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub dist: Vec<f64>,
}

impl From<&CameraSpec> for Intrinsics {
    fn from(s: &CameraSpec) -> Self {
        Intrinsics {
            model: s.model.to_string(),
            width: s.width,
            height: s.height,
            fx: s.fx,
            fy: s.fy,
            cx: s.cx,
            cy: s.cy,
            dist: s.dist.clone(),
        }
    }
}

impl Intrinsics {
    pub fn to_spec(&self) -> raycalib_core::Result<CameraSpec> {
        let model: ModelId = self.model.parse()?;
        CameraSpec::new(model, [self.fx, self.fy, self.cx, self.cy], self.dist.clone(), self.width, self.height)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub param: String,
    pub value: f64,
}

impl From<&ActiveBound> for Bound {
    fn from(b: &ActiveBound) -> Self {
        Bound {
            param: b.param.to_string(),
            value: b.value,
        }
    }
}

/// A calibration: the fitted intrinsics at the top level plus diagnostics,
/// so the file also reads as an intrinsics file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    #[serde(flatten)]
    pub spec: Intrinsics,
    pub algebraic: Intrinsics,
    pub gn_costs: Vec<f64>,
    pub ppoint_residual: Option<f64>,
    pub active_bounds: Vec<Bound>,
    pub warnings: Vec<String>,
}

impl From<&CalibrationResult> for ResultJson {
    fn from(r: &CalibrationResult) -> Self {
        ResultJson {
            spec: (&r.spec).into(),
            algebraic: (&r.algebraic_spec).into(),
            gn_costs: r.gn_costs.clone(),
            ppoint_residual: r.ppoint_residual,
            active_bounds: r.active_bounds.iter().map(Bound::from).collect(),
            warnings: r.warnings.iter().map(warning_text).collect(),
        }
    }
}

pub fn warning_text(w: &Warning) -> String {
    match w {
        Warning::SingularNormalMatrix => "SingularNormalMatrix".into(),
        Warning::DroppedRows(n) => format!("DroppedRows({n})"),
        Warning::InvalidSpec(v) => format!("InvalidSpec({v:?})"),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_text<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Reads intrinsics from a spec or result file.
pub fn read_spec(path: &Path) -> Result<CameraSpec> {
    let text = error::read_string(path)?;
    let i: Intrinsics = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
    Ok(i.to_spec()?)
}

pub fn write_spec(path: &Path, spec: &CameraSpec) -> Result<()> {
    error::write(path, to_text(&Intrinsics::from(spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use raycalib_core::calib::calibrate;
    use raycalib_core::fov::field_from_spec;

    #[test]
    fn intrinsics_schema() {
        let spec = CameraSpec::centered(ModelId::kb(2).unwrap(), 300.0, vec![0.1, -0.01], 64, 48).unwrap();
        let v = serde_json::to_value(Intrinsics::from(&spec)).unwrap();
        assert_eq!(v["model"], "kb:2");
        assert_eq!(v["width"], 64);
        assert_eq!(v["dist"][1], -0.01);
        let back: Intrinsics = serde_json::from_value(v).unwrap();
        assert_eq!(back.to_spec().unwrap(), spec);
    }

    #[test]
    fn result_reads_as_intrinsics() {
        let spec = CameraSpec::centered(ModelId::UCM, 50.0, vec![0.5], 32, 32).unwrap();
        let res = calibrate(&field_from_spec(&spec, 1).unwrap(), ModelId::UCM, 1).unwrap();
        let text = to_text(&ResultJson::from(&res));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["gn_costs"].is_array() && v["active_bounds"].is_array());
        let i: Intrinsics = serde_json::from_str(&text).unwrap();
        assert_eq!(i.to_spec().unwrap(), res.spec);
    }

    #[test]
    fn bad_model_string() {
        let mut i = Intrinsics::from(&CameraSpec::centered(ModelId::PINHOLE, 1.0, vec![], 1, 1).unwrap());
        i.model = "kb:9".into();
        assert!(i.to_spec().is_err());
    }
}
