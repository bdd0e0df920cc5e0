use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

use super::{
    mix_density, mix_young_modulus, CubicMaterial, ElasticMaterial, IsotropicMaterial,
    MaterialError,
};
use crate::scalar::Real;
use crate::units::{parse_quantity, Dimension};

const BUILTIN: &str = include_str!("../../data/materials.toml");

#[derive(Debug, Error)]
pub enum DbError {
    #[error("cannot read material database {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("material database is not valid TOML: {0}")]
    Parse(String),
    #[error("material `{name}`: {reason}")]
    Entry { name: String, reason: String },
}

/// Si/Ge endpoints of the linear alloy mixing rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlloyEndpoints<T: Real> {
    pub e_si: T,
    pub e_ge: T,
    pub rho_si: T,
    pub rho_ge: T,
    pub poisson_ratio: T,
}

impl<T: Real> AlloyEndpoints<T> {
    /// `(E, rho)` at germanium fraction `c_ge`.
    pub fn mix(&self, c_ge: T) -> Result<(T, T), MaterialError> {
        Ok((
            mix_young_modulus(c_ge, self.e_si, self.e_ge)?,
            mix_density(c_ge, self.rho_si, self.rho_ge)?,
        ))
    }

    pub fn material(&self, c_ge: T) -> Result<IsotropicMaterial<T>, MaterialError> {
        let (e, rho) = self.mix(c_ge)?;
        IsotropicMaterial::new(e, self.poisson_ratio, rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialEntry {
    Elastic(ElasticMaterial<f64>),
    /// Composition-dependent film; a concentration must be supplied on use.
    Alloy(AlloyEndpoints<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialRecord {
    pub entry: MaterialEntry,
    pub source: Option<String>,
    pub note: Option<String>,
}

/// Named, validated material records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialDb {
    entries: BTreeMap<String, MaterialRecord>,
}

impl MaterialDb {
    /// Database compiled into the library.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in material database is valid")
    }

    pub fn get(&self, name: &str) -> Option<&MaterialRecord> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses database text.
    pub fn parse(text: &str) -> Result<Self, DbError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| DbError::Parse(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (name, value) in table {
            let block = value.as_table().ok_or_else(|| DbError::Entry {
                name: name.clone(),
                reason: "expected a table".into(),
            })?;
            let record = parse_record(block).map_err(|reason| DbError::Entry {
                name: name.clone(),
                reason,
            })?;
            entries.insert(name, record);
        }
        Ok(Self { entries })
    }
}

/// Reads and validates a material database file.
pub fn load_material_db(path: impl AsRef<Path>) -> Result<MaterialDb, DbError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DbError::Io {
        path: path.display().to_string(),
        source,
    })?;
    MaterialDb::parse(&text)
}

struct Fields<'a> {
    block: &'a Table,
}

impl Fields<'_> {
    fn quantity(&self, key: &str, dim: Dimension) -> Result<f64, String> {
        match self.block.get(key) {
            Some(Value::String(s)) => parse_quantity(s, dim).map_err(|e| format!("{key}: {e}")),
            Some(_) => Err(format!("{key}: expected a quoted quantity with unit")),
            None => Err(format!("missing key `{key}`")),
        }
    }

    fn number(&self, key: &str) -> Result<f64, String> {
        match self.block.get(key) {
            Some(Value::Float(x)) => Ok(*x),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(format!("{key}: expected a number")),
            None => Err(format!("missing key `{key}`")),
        }
    }

    fn text(&self, key: &str) -> Result<Option<String>, String> {
        match self.block.get(key) {
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(format!("{key}: expected a string")),
            None => Ok(None),
        }
    }
}

fn parse_record(block: &Table) -> Result<MaterialRecord, String> {
    let f = Fields { block };
    let symmetry = f.text("symmetry")?.ok_or("missing key `symmetry`")?;
    let required: &[&str] = match symmetry.as_str() {
        "isotropic" => &["young_modulus", "poisson_ratio", "density"],
        "cubic" => &["c11", "c12", "c44", "density"],
        "sige_alloy" => &["e_si", "e_ge", "rho_si", "rho_ge", "poisson_ratio"],
        other => return Err(format!("unknown symmetry `{other}`")),
    };
    for key in block.keys() {
        let known = required.contains(&key.as_str())
            || matches!(key.as_str(), "symmetry" | "source" | "note");
        if !known {
            return Err(format!("unknown key `{key}` for symmetry `{symmetry}`"));
        }
    }
    let entry = match symmetry.as_str() {
        "isotropic" => {
            let m = IsotropicMaterial::new(
                f.quantity("young_modulus", Dimension::Pressure)?,
                f.number("poisson_ratio")?,
                f.quantity("density", Dimension::Density)?,
            )
            .map_err(|e| e.to_string())?;
            MaterialEntry::Elastic(m.into())
        }
        "cubic" => {
            let m = CubicMaterial::new(
                f.quantity("c11", Dimension::Pressure)?,
                f.quantity("c12", Dimension::Pressure)?,
                f.quantity("c44", Dimension::Pressure)?,
                f.quantity("density", Dimension::Density)?,
            )
            .map_err(|e| e.to_string())?;
            MaterialEntry::Elastic(m.into())
        }
        _ => {
            let a = AlloyEndpoints {
                e_si: f.quantity("e_si", Dimension::Pressure)?,
                e_ge: f.quantity("e_ge", Dimension::Pressure)?,
                rho_si: f.quantity("rho_si", Dimension::Density)?,
                rho_ge: f.quantity("rho_ge", Dimension::Density)?,
                poisson_ratio: f.number("poisson_ratio")?,
            };
            // Both endpoints must be valid isotropic solids.
            a.material(0.0).map_err(|e| e.to_string())?;
            a.material(1.0).map_err(|e| e.to_string())?;
            MaterialEntry::Alloy(a)
        }
    };
    Ok(MaterialRecord {
        entry,
        source: f.text("source")?,
        note: f.text("note")?,
    })
}
