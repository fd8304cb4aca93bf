use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Camera model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Pinhole,
    BrownConrady,
    KannalaBrandt,
    Ucm,
    Eucm,
    Division,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Pinhole,
        Family::BrownConrady,
        Family::KannalaBrandt,
        Family::Ucm,
        Family::Eucm,
        Family::Division,
    ];

    /// Allowed number of distortion coefficients.
    pub fn dist_range(self) -> (u8, u8) {
        match self {
            Family::Pinhole => (0, 0),
            Family::BrownConrady | Family::KannalaBrandt => (1, 4),
            Family::Division => (1, 3),
            Family::Ucm => (1, 1),
            Family::Eucm => (2, 2),
        }
    }

    /// Backward models define unprojection in closed form; projection is
    /// obtained by inverting it.
    pub fn is_backward(self) -> bool {
        matches!(self, Family::Division)
    }

    fn name(self) -> &'static str {
        match self {
            Family::Pinhole => "pinhole",
            Family::BrownConrady => "radial",
            Family::KannalaBrandt => "kb",
            Family::Ucm => "ucm",
            Family::Eucm => "eucm",
            Family::Division => "division",
        }
    }
}

/// A family together with its distortion-coefficient count.
///
/// The string form is `pinhole`, `radial:N` (Brown-Conrady, N in 1..=4),
/// `kb:N` (N in 1..=4), `ucm`, `eucm` or `division:N` (N in 1..=3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelId {
    family: Family,
    num_dist: u8,
}

impl ModelId {
    pub const PINHOLE: ModelId = ModelId {
        family: Family::Pinhole,
        num_dist: 0,
    };
    pub const RADIAL1: ModelId = ModelId {
        family: Family::BrownConrady,
        num_dist: 1,
    };
    pub const UCM: ModelId = ModelId {
        family: Family::Ucm,
        num_dist: 1,
    };
    pub const EUCM: ModelId = ModelId {
        family: Family::Eucm,
        num_dist: 2,
    };

    pub fn new(family: Family, num_dist: u8) -> Result<ModelId> {
        let (lo, hi) = family.dist_range();
        if num_dist < lo || num_dist > hi {
            return Err(Error::DistCountMismatch {
                family: family.name(),
                expected: match family {
                    Family::Pinhole => "0",
                    Family::BrownConrady | Family::KannalaBrandt => "1..=4",
                    Family::Division => "1..=3",
                    Family::Ucm => "1",
                    Family::Eucm => "2",
                },
                got: num_dist as usize,
            });
        }
        Ok(ModelId { family, num_dist })
    }

    pub fn radial(n: u8) -> Result<ModelId> {
        ModelId::new(Family::BrownConrady, n)
    }

    pub fn kb(n: u8) -> Result<ModelId> {
        ModelId::new(Family::KannalaBrandt, n)
    }

    pub fn division(n: u8) -> Result<ModelId> {
        ModelId::new(Family::Division, n)
    }

    pub fn family(self) -> Family {
        self.family
    }

    pub fn num_dist(self) -> usize {
        self.num_dist as usize
    }

    /// Length of the parameter vector `[fx, fy, cx, cy, dist...]`.
    pub fn num_params(self) -> usize {
        4 + self.num_dist()
    }

    /// Every supported model string, in a stable order.
    pub fn all() -> impl Iterator<Item = ModelId> {
        Family::ALL.into_iter().flat_map(|f| {
            let (lo, hi) = f.dist_range();
            (lo..=hi).map(move |n| ModelId {
                family: f,
                num_dist: n,
            })
        })
    }

    pub(crate) fn check_dist_len(self, len: usize) -> Result<()> {
        if len != self.num_dist() {
            return Err(Error::DistCountMismatch {
                family: self.family.name(),
                expected: match self.num_dist {
                    0 => "0",
                    1 => "1",
                    2 => "2",
                    3 => "3",
                    _ => "4",
                },
                got: len,
            });
        }
        Ok(())
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Pinhole | Family::Ucm | Family::Eucm => f.write_str(self.family.name()),
            _ => write!(f, "{}:{}", self.family.name(), self.num_dist),
        }
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelId> {
        let bad = || Error::InvalidModelString(s.to_string());
        let (name, count) = match s.split_once(':') {
            Some((name, n)) => (name, Some(n.parse::<u8>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let family = match name {
            "pinhole" => Family::Pinhole,
            "radial" => Family::BrownConrady,
            "kb" => Family::KannalaBrandt,
            "ucm" => Family::Ucm,
            "eucm" => Family::Eucm,
            "division" => Family::Division,
            _ => return Err(bad()),
        };
        let n = match (family, count) {
            (Family::Pinhole, None) => 0,
            (Family::Ucm, None) => 1,
            (Family::Eucm, None) => 2,
            (Family::BrownConrady | Family::KannalaBrandt | Family::Division, Some(n)) => n,
            _ => return Err(bad()),
        };
        ModelId::new(family, n).map_err(|_| bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec::Vec;

    #[test]
    fn parses_every_model_string() {
        let all: Vec<_> = ModelId::all().map(|m| m.to_string()).collect();
        assert_eq!(
            all,
            [
                "pinhole", "radial:1", "radial:2", "radial:3", "radial:4", "kb:1", "kb:2", "kb:3",
                "kb:4", "ucm", "eucm", "division:1", "division:2", "division:3"
            ]
        );
        for s in &all {
            assert_eq!(&s.parse::<ModelId>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn rejects_bad_strings() {
        for s in ["", "kb", "kb:0", "kb:5", "division:4", "pinhole:1", "ucm:1", "radial:x", "fisheye"] {
            let err = s.parse::<ModelId>().unwrap_err();
            assert_eq!(err.kind(), "InvalidModelString", "{s}");
        }
    }
}
