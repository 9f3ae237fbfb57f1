//! The material-prior table: named material entries with type, density, and
//! initial parameters. The same schema serves prior, truth, and scene
//! material tables, so any external tool (or person) can produce one.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constitutive::{MaterialModel, MaterialParams, MaterialType, ParamKey};
use crate::error::{Error, Result};
use crate::math::Scalar;

/// One named material as it appears on disk. Only the parameters active for
/// the declared type are required; extras are allowed and ignored.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaterialEntry {
    #[serde(rename = "type")]
    pub kind: MaterialType,
    pub density: f64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl MaterialEntry {
    /// Validate and convert to a bound material model.
    pub fn to_model(&self, context: &str) -> Result<MaterialModel> {
        if !(self.density > 0.0) {
            return Err(Error::validation(
                format!("{context}.density"),
                format!("{} must be positive", self.density),
            ));
        }
        for key in self.params.keys() {
            if ParamKey::from_file_key(key).is_none() {
                return Err(Error::validation(
                    format!("{context}.params.{key}"),
                    "unknown parameter name".to_string(),
                ));
            }
        }
        let missing: Vec<&str> = self
            .kind
            .active_params()
            .iter()
            .filter(|k| !self.params.contains_key(k.file_key()))
            .map(|k| k.file_key())
            .collect();
        if !missing.is_empty() {
            return Err(Error::validation(
                format!("{context}.params"),
                format!(
                    "material type `{}` requires {:?}; missing {:?}",
                    self.kind.name(),
                    self.kind.active_params().iter().map(|k| k.file_key()).collect::<Vec<_>>(),
                    missing
                ),
            ));
        }
        let mut params = MaterialParams::default();
        for (key, value) in &self.params {
            if let Some(k) = ParamKey::from_file_key(key) {
                params.set(k, Scalar::new(*value));
            }
        }
        params.validate(self.kind, context)?;
        Ok(MaterialModel { kind: self.kind, params, density: self.density })
    }

    /// Build an entry from a model, listing only the active parameters.
    pub fn from_model(model: &MaterialModel) -> Self {
        let mut params = BTreeMap::new();
        for &key in model.kind.active_params() {
            params.insert(key.file_key().to_string(), model.params.get(key).val);
        }
        MaterialEntry { kind: model.kind, density: model.density, params }
    }
}

/// Material name → entry. Stands in for an external initialization oracle:
/// anything able to write this file can seed the identification.
pub type MaterialPrior = BTreeMap<String, MaterialEntry>;

pub fn load_prior(path: &Path) -> Result<MaterialPrior> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let prior: MaterialPrior = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    // Validate every entry up front so errors carry the field path.
    for (name, entry) in &prior {
        entry.to_model(name)?;
    }
    Ok(prior)
}

pub fn save_prior(prior: &MaterialPrior, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(prior).expect("prior serializes");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
