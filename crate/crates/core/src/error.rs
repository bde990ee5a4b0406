use thiserror::Error;

use crate::fspf::FspfError;
use crate::geom::GeomError;
use crate::io::{ConfigError, ParseError};
use crate::kdtree::IndexError;
use crate::normals::NormalError;
use crate::ops::OpsError;
use crate::truth::LabelError;

/// Any failure surfaced by the library's top-level entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Normal(#[from] NormalError),
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error(transparent)]
    Fspf(#[from] FspfError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Empty(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
