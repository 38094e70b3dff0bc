//! Bundled analysis context: a dyadic filter bank plus the ring partition
//! on the same grid. Most norm-level and estimate-level routines need both,
//! so they take a [`Frame`] built once per grid.

use crate::dyadic::DyadicFilterBank;
use crate::error::Result;
use crate::grid::Grid;
use crate::herz::RingPartition;

#[derive(Clone, Debug)]
pub struct Frame {
    bank: DyadicFilterBank,
    rings: RingPartition,
}

impl Frame {
    /// Frame with the widest dyadic range the grid supports.
    pub fn new(grid: &Grid) -> Result<Frame> {
        Ok(Frame {
            bank: DyadicFilterBank::with_default_range(grid)?,
            rings: RingPartition::new(grid)?,
        })
    }

    pub fn with_range(grid: &Grid, j_min: i32, j_max: i32) -> Result<Frame> {
        Ok(Frame {
            bank: DyadicFilterBank::new(grid, j_min, j_max)?,
            rings: RingPartition::new(grid)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.bank.grid()
    }

    pub fn bank(&self) -> &DyadicFilterBank {
        &self.bank
    }

    pub fn rings(&self) -> &RingPartition {
        &self.rings
    }
}
