use qsdlab::kernel::StateGrid;

use crate::CliError;

/// Test functions selectable on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    One,
    Identity,
    Square,
    /// Indicator of the grid cell (or finite state) `K`.
    Cell(usize),
    /// Indicator of a set of nodes.
    Nodes(Vec<usize>),
}

impl Observable {
    /// Parses `one`, `x`, `x2`, `state:K` or `cell:K`; `class:K` is resolved
    /// against `classes`.
    pub fn parse(text: &str, classes: Option<&[Vec<usize>]>) -> Result<Self, CliError> {
        let bad = || CliError::validation("InvalidObservable", format!("unknown observable {text:?}"));
        match text {
            "one" => return Ok(Observable::One),
            "x" => return Ok(Observable::Identity),
            "x2" => return Ok(Observable::Square),
            _ => {}
        }
        let (kind, idx) = text.split_once(':').ok_or_else(bad)?;
        let k: usize = idx.parse().map_err(|_| bad())?;
        match kind {
            "state" | "cell" => Ok(Observable::Cell(k)),
            "class" => {
                let classes = classes
                    .ok_or_else(|| CliError::validation("InvalidObservable", "class:K needs a periodic chain"))?;
                let c = classes.get(k).ok_or_else(bad)?;
                Ok(Observable::Nodes(c.clone()))
            }
            _ => Err(bad()),
        }
    }

    pub fn check(&self, n: usize) -> Result<(), CliError> {
        let fits = match self {
            Observable::Cell(k) => *k < n,
            Observable::Nodes(v) => v.iter().all(|&k| k < n),
            _ => true,
        };
        if fits {
            Ok(())
        } else {
            Err(CliError::validation("InvalidObservable", format!("observable refers to a state outside 0..{n}")))
        }
    }

    /// Value at an arbitrary point of the state space.
    pub fn at(&self, grid: &StateGrid, y: f64) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::Identity => y,
            Observable::Square => y * y,
            Observable::Cell(k) => (grid.locate(y) == Some(*k)) as u8 as f64,
            Observable::Nodes(v) => grid.locate(y).is_some_and(|i| v.contains(&i)) as u8 as f64,
        }
    }

    /// Values at the grid nodes.
    pub fn on_nodes(&self, grid: &StateGrid) -> Vec<f64> {
        (0..grid.len())
            .map(|i| match self {
                Observable::Cell(k) => (i == *k) as u8 as f64,
                Observable::Nodes(v) => v.contains(&i) as u8 as f64,
                _ => self.at(grid, grid.nodes[i]),
            })
            .collect()
    }
}
