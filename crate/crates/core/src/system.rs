//! Built-in and user-supplied systems: Schur families `α` and group cocycles `(π, b)`.

use std::path::Path;

use crate::fock::{FockError, QFockSpace};
use crate::fourier::{FourierError, GroupCocycleJson, GroupCocycleSystem};
use crate::gradient::GradientSystem;
use crate::schur::{AlphaFamilyJson, SchurError, SchurSystem};

/// Largest carrier (`dim ℱ · |I|²` or `|G| · dim ℱ`) chosen by [`System::default_fock`].
pub const DEFAULT_CARRIER_LIMIT: usize = 512;

/// Largest unreduced top level `dim H^{⊗k}` chosen by [`System::default_fock`]; its Gram
/// matrix is diagonalized densely.
pub const DEFAULT_RAW_LEVEL_LIMIT: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum SystemError {
    #[error("unknown system '{0}'")]
    Unknown(String),
    #[error("cannot read '{path}': {reason}")]
    File { path: String, reason: String },
    #[error(transparent)]
    Schur(#[from] SchurError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Either flavor of semigroup generator.
#[derive(Debug, Clone)]
pub enum System {
    Schur(SchurSystem),
    Fourier(GroupCocycleSystem),
}

impl System {
    /// `heat:N`, `poisson:N`, `random:N:D:SEED` (Schur) or any name accepted by
    /// [`GroupCocycleSystem::from_name`]. A path ending in `.json` is read with [`Self::from_file`].
    pub fn from_name(name: &str) -> Result<Self, SystemError> {
        if name.ends_with(".json") {
            return Self::from_file(name);
        }
        let head = name.split(':').next().unwrap_or_default();
        match head {
            "heat" | "poisson" => SchurSystem::from_name(name).map(Self::Schur).map_err(|e| match e {
                SchurError::Input(_) => SystemError::Unknown(name.to_owned()),
                other => other.into(),
            }),
            "random" => {
                let parts: Vec<&str> = name.split(':').collect();
                let num = |s: &str| s.parse::<u64>().map_err(|_| SystemError::Unknown(name.to_owned()));
                let [_, n, d, seed] = parts.as_slice() else {
                    return Err(SystemError::Unknown(name.to_owned()));
                };
                let (n, d, seed) = (num(n)? as usize, num(d)? as usize, num(seed)?);
                if n == 0 || d == 0 {
                    return Err(SystemError::Unknown(name.to_owned()));
                }
                let mut rng = crate::linalg::random::rng(seed);
                Ok(Self::Schur(SchurSystem::random(n, d, &mut rng)?))
            }
            "Zn" | "donut" | "levy" | "regular" | "dihedral" => {
                GroupCocycleSystem::from_name(name).map(Self::Fourier).map_err(|e| match e {
                    FourierError::Input(_) => SystemError::Unknown(name.to_owned()),
                    other => other.into(),
                })
            }
            _ => Err(SystemError::Unknown(name.to_owned())),
        }
    }

    /// A JSON file holding either `{"h_dim", "alpha"}` or `{"group", "cocycle"}`.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SystemError> {
        let path = path.as_ref();
        let file_err = |reason: String| SystemError::File { path: path.display().to_string(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
        if value.get("alpha").is_some() {
            let json: AlphaFamilyJson = serde_json::from_value(value).map_err(|e| file_err(e.to_string()))?;
            Ok(Self::Schur(SchurSystem::from_json(&json)?))
        } else if value.get("cocycle").is_some() {
            let json: GroupCocycleJson = serde_json::from_value(value).map_err(|e| file_err(e.to_string()))?;
            Ok(Self::Fourier(GroupCocycleSystem::from_json(&json)?))
        } else {
            Err(file_err("expected an \"alpha\" or a \"cocycle\" field".into()))
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v = match self {
            Self::Schur(s) => serde_json::to_value(s.to_json()),
            Self::Fourier(g) => serde_json::to_value(g.to_json()),
        };
        v.unwrap_or(serde_json::Value::Null)
    }

    pub fn flavor(&self) -> &'static str {
        match self {
            Self::Schur(_) => "schur",
            Self::Fourier(_) => "fourier",
        }
    }

    pub fn h_dim(&self) -> usize {
        match self {
            Self::Schur(s) => s.h_dim(),
            Self::Fourier(g) => g.h_dim(),
        }
    }

    /// `|I|` or `|G|`.
    pub fn size(&self) -> usize {
        match self {
            Self::Schur(s) => s.len(),
            Self::Fourier(g) => g.order(),
        }
    }

    fn carrier_factor(&self) -> usize {
        match self {
            Self::Schur(s) => s.len() * s.len(),
            Self::Fourier(g) => g.order(),
        }
    }

    /// A truncated Fock space sized for dense work: the full exterior algebra at `q = −1`
    /// when it fits, otherwise levels up to two (or one).
    pub fn default_fock(&self, q: f64) -> Result<QFockSpace, SystemError> {
        let d = self.h_dim();
        let mut cap = if q == -1.0 { d } else { 2 };
        while cap > 1 && d.checked_pow(cap as u32).is_none_or(|raw| raw > DEFAULT_RAW_LEVEL_LIMIT) {
            cap -= 1;
        }
        loop {
            match QFockSpace::new(q, d, cap) {
                Ok(f) if cap == 1 || f.total_dim() * self.carrier_factor() <= DEFAULT_CARRIER_LIMIT => return Ok(f),
                Ok(_) | Err(FockError::Budget(_)) if cap > 1 => cap -= 1,
                Ok(f) => return Ok(f),
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// True when `fock` is the whole antisymmetric Fock space, so `s_{−1}(h)² = ‖h‖²` holds exactly.
    pub fn is_exact_fermionic(&self, fock: &QFockSpace) -> bool {
        fock.q() == -1.0 && fock.level_cap() >= fock.h_dim()
    }

    pub fn gradient_system(&self, fock: &QFockSpace) -> Result<GradientSystem, SystemError> {
        match self {
            Self::Schur(s) => Ok(s.gradient_system(fock)?),
            Self::Fourier(g) => Ok(g.gradient_system(fock)?),
        }
    }
}
