//! JSON file schemas for instances, mechanisms and profile instances.
//!
//! Floating-point fields round-trip bit-exactly through serde_json (shortest
//! round-trip formatting).

use crate::auction::{MultiBidderInstance, MultiMechanism};
use crate::mechanism::Mechanism;
use crate::model::{build_instance, Mode, ModelError, SignalPricingInstance, ValueGrid};
use serde::{Deserialize, Serialize};

/// `{ "mode": "mass"|"quadrature", "values": [..], "widths": [..],
///    "signals": [..], "pmf": row-major array }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub mode: Mode,
    pub values: Vec<f64>,
    pub widths: Vec<f64>,
    pub signals: Vec<String>,
    pub pmf: Vec<f64>,
}

impl InstanceFile {
    pub fn from_instance(inst: &SignalPricingInstance) -> Self {
        InstanceFile {
            mode: inst.mode(),
            values: inst.grid().points().to_vec(),
            widths: inst.grid().widths().to_vec(),
            signals: inst.signals().to_vec(),
            pmf: inst.to_dense_pmf(),
        }
    }

    pub fn into_instance(self) -> Result<SignalPricingInstance, ModelError> {
        let grid = ValueGrid::new(self.values, self.widths)?;
        build_instance(grid, self.signals, &self.pmf, self.mode)
    }
}

/// `{ "x": row-major, "p": row-major }`, aligned to the instance ordering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismFile {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl MechanismFile {
    pub fn from_mechanism(mech: &Mechanism) -> Self {
        MechanismFile { x: mech.x_matrix().to_vec(), p: mech.p_matrix().to_vec() }
    }

    pub fn into_mechanism(
        self,
        inst: &SignalPricingInstance,
    ) -> Result<Mechanism, crate::mechanism::MechanismError> {
        Mechanism::new(inst, self.x, self.p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub values: Vec<f64>,
    pub widths: Vec<f64>,
}

/// `{ "n": .., "grids": [..], "pmf": flattened bidder-1-major }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiInstanceFile {
    pub n: usize,
    pub mode: Mode,
    pub grids: Vec<GridFile>,
    pub pmf: Vec<f64>,
}

impl MultiInstanceFile {
    pub fn from_instance(minst: &MultiBidderInstance) -> Self {
        MultiInstanceFile {
            n: minst.n_bidders(),
            mode: minst.mode(),
            grids: minst
                .grids()
                .iter()
                .map(|g| GridFile { values: g.points().to_vec(), widths: g.widths().to_vec() })
                .collect(),
            pmf: minst.pmf().to_vec(),
        }
    }

    pub fn into_instance(self) -> Result<MultiBidderInstance, ModelError> {
        if self.grids.len() != self.n {
            return Err(ModelError::DimensionMismatch(format!(
                "n = {} but {} grids",
                self.n,
                self.grids.len()
            )));
        }
        let grids = self
            .grids
            .into_iter()
            .map(|g| ValueGrid::new(g.values, g.widths))
            .collect::<Result<Vec<_>, _>>()?;
        MultiBidderInstance::new(grids, self.pmf, self.mode)
    }
}

/// Per-bidder allocation/payment maps, profile-indexed like the instance pmf.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiMechanismFile {
    pub x: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
}

impl MultiMechanismFile {
    pub fn from_mechanism(mech: &MultiMechanism) -> Self {
        MultiMechanismFile { x: mech.x.clone(), p: mech.p.clone() }
    }

    pub fn into_mechanism(self) -> MultiMechanism {
        MultiMechanism { x: self.x, p: self.p }
    }
}
