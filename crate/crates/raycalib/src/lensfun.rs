//! LensFun entries from the minimal JSON form or the LensFun XML database.

use std::path::Path;

use raycalib_core::synth::{Distortion, LensfunEntry, Projection};
use serde::{Deserialize, Serialize};

use crate::error::{self, CliError, Result};

/// `{"model_kind", "coefficients", "focal_mm", "sensor_width_mm",
/// "sensor_height_mm"}` with an optional `"lens_type"`.
///
/// `model_kind` is a distortion model (`poly3`, `poly5`, `ptlens`, `none`)
/// or an ideal projection (`fisheye_equisolid`, ...), the latter meaning no
/// distortion. `lens_type` gives the projection for distortion models and
/// defaults to equidistant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub model_kind: String,
    #[serde(default)]
    pub coefficients: Vec<f64>,
    pub focal_mm: f64,
    pub sensor_width_mm: f64,
    pub sensor_height_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lens_type: Option<String>,
}

impl EntryJson {
    pub fn to_entry(&self) -> Result<LensfunEntry> {
        let (distortion, projection) = match self.model_kind.parse::<Projection>() {
            Ok(p) if self.model_kind.starts_with("fisheye") => {
                if !self.coefficients.is_empty() {
                    return Err(CliError::Usage(format!("{} takes no coefficients", self.model_kind)));
                }
                (Distortion::None, p)
            }
            _ => {
                let d = match self.model_kind.as_str() {
                    "poly3" | "poly5" | "ptlens" | "none" => Distortion::new(&self.model_kind, &self.coefficients)?,
                    other => return Err(CliError::UnsupportedModelKind(other.into())),
                };
                let p = match &self.lens_type {
                    Some(t) => t.parse().map_err(|_| CliError::UnsupportedModelKind(t.clone()))?,
                    None => Projection::Equidistant,
                };
                (d, p)
            }
        };
        Ok(LensfunEntry {
            distortion,
            projection,
            focal_mm: self.focal_mm,
            sensor_width_mm: self.sensor_width_mm,
            sensor_height_mm: self.sensor_height_mm,
        })
    }
}

/// One calibrated focal length of a database lens.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedEntry {
    pub lens: String,
    pub entry: LensfunEntry,
}

/// Fisheye lenses of a LensFun XML database, one entry per `<distortion>`
/// element. Non-fisheye lenses are skipped; distortion models other than
/// `poly3`, `poly5`, `ptlens` and `none` are reported as unsupported.
pub fn parse_xml(text: &str) -> std::result::Result<Vec<std::result::Result<NamedEntry, (String, CliError)>>, String> {
    let doc = roxmltree::Document::parse(text).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for lens in doc.descendants().filter(|n| n.has_tag_name("lens")) {
        let child_text = |tag: &str| {
            lens.children()
                .filter(|c| c.has_tag_name(tag))
                .find(|c| c.attribute("lang").is_none())
                .and_then(|c| c.text())
                .map(str::trim)
        };
        let Some(Ok(projection)) = child_text("type").map(str::parse::<Projection>) else {
            continue;
        };
        let name = [child_text("maker"), child_text("model")]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join(" ");
        let crop: f64 = child_text("cropfactor").and_then(|c| c.parse().ok()).unwrap_or(1.0);
        let aspect = child_text("aspect-ratio").and_then(parse_aspect).unwrap_or(1.5);
        // full-frame diagonal spread over the crop's aspect ratio
        let diag = 36f64.hypot(24.0) / crop;
        let sensor_h = diag / aspect.hypot(1.0);
        let sensor_w = sensor_h * aspect;
        for d in lens.descendants().filter(|n| n.has_tag_name("distortion")) {
            let kind = d.attribute("model").unwrap_or("none");
            let label = format!("{name} @ {}mm", d.attribute("focal").unwrap_or("?"));
            let num = |a: &str| d.attribute(a).map_or(Ok(0.0), str::parse::<f64>);
            let coeffs: std::result::Result<Vec<f64>, _> = match kind {
                "poly3" => ["k1"].iter().map(|a| num(a)).collect(),
                "poly5" => ["k1", "k2"].iter().map(|a| num(a)).collect(),
                "ptlens" => ["a", "b", "c"].iter().map(|a| num(a)).collect(),
                "none" => Ok(Vec::new()),
                other => {
                    out.push(Err((label, CliError::UnsupportedModelKind(other.into()))));
                    continue;
                }
            };
            let focal = d.attribute("focal").and_then(|f| f.parse::<f64>().ok());
            let entry = match (coeffs, focal) {
                (Ok(c), Some(focal)) => Distortion::new(kind, &c).map_err(CliError::from).map(|distortion| LensfunEntry {
                    distortion,
                    projection,
                    focal_mm: focal,
                    sensor_width_mm: sensor_w,
                    sensor_height_mm: sensor_h,
                }),
                _ => Err(CliError::Usage(format!("{label}: malformed <distortion> attributes"))),
            };
            out.push(entry.map(|entry| NamedEntry { lens: label.clone(), entry }).map_err(|e| (label, e)));
        }
    }
    Ok(out)
}

fn parse_aspect(s: &str) -> Option<f64> {
    match s.split_once(':') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

/// A LensFun input file: a single JSON entry or an XML database.
pub enum LensfunInput {
    Single(LensfunEntry),
    Database(Vec<std::result::Result<NamedEntry, (String, CliError)>>),
}

pub fn read_lensfun(path: &Path) -> Result<LensfunInput> {
    let text = error::read_string(path)?;
    if text.trim_start().starts_with('<') {
        let entries = parse_xml(&text).map_err(|m| CliError::parse(path, m))?;
        Ok(LensfunInput::Database(entries))
    } else {
        let e: EntryJson = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
        Ok(LensfunInput::Single(e.to_entry()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DB: &str = r#"<lensdatabase version="1">
      <lens>
        <maker>Nikon</maker>
        <model>Nikkor 10.5mm f/2.8G ED DX Fisheye</model>
        <model lang="de">Nikkor Fisheye</model>
        <mount>Nikon F AF</mount>
        <cropfactor>1.5</cropfactor>
        <type>fisheye</type>
        <calibration>
          <distortion model="ptlens" focal="10.5" a="0.006" b="-0.02" c="0.01"/>
          <distortion model="acm" focal="10.5" k1="0.1"/>
        </calibration>
      </lens>
      <lens>
        <maker>Canon</maker>
        <model>EF 50mm</model>
        <calibration><distortion model="poly3" focal="50" k1="-0.01"/></calibration>
      </lens>
    </lensdatabase>"#;

    #[test]
    fn xml_fisheye_entries() {
        let got = parse_xml(DB).unwrap();
        assert_eq!(got.len(), 2);
        let e = got[0].as_ref().unwrap();
        assert_eq!(e.lens, "Nikon Nikkor 10.5mm f/2.8G ED DX Fisheye @ 10.5mm");
        assert_eq!(e.entry.projection, Projection::Equidistant);
        assert!((e.entry.sensor_width_mm - 24.0).abs() < 1e-12 && (e.entry.sensor_height_mm - 16.0).abs() < 1e-12);
        assert_eq!(e.entry.distortion, Distortion::PtLens { a: 0.006, b: -0.02, c: 0.01 });
        assert_eq!(got[1].as_ref().unwrap_err().1.kind(), "UnsupportedModelKind");
        assert!(parse_xml("<lens>").is_err());
    }

    #[test]
    fn json_entries() {
        let j = r#"{"model_kind":"fisheye_equisolid","coefficients":[],"focal_mm":8,"sensor_width_mm":36,"sensor_height_mm":24}"#;
        let e = serde_json::from_str::<EntryJson>(j).unwrap().to_entry().unwrap();
        assert_eq!((e.distortion, e.projection), (Distortion::None, Projection::Equisolid));
        let j = r#"{"model_kind":"poly3","coefficients":[0.01],"focal_mm":8,"sensor_width_mm":36,"sensor_height_mm":24}"#;
        let e = serde_json::from_str::<EntryJson>(j).unwrap().to_entry().unwrap();
        assert_eq!(e.projection, Projection::Equidistant);
        let j = r#"{"model_kind":"fov1","coefficients":[0.01],"focal_mm":8,"sensor_width_mm":36,"sensor_height_mm":24}"#;
        let err = serde_json::from_str::<EntryJson>(j).unwrap().to_entry().unwrap_err();
        assert_eq!(err.kind(), "UnsupportedModelKind");
    }
}
