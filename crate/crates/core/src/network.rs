//! Global structure of one deployment: PU state model, medial axis,
//! corridor and hierarchy.

use crate::geometry::{
    build_hierarchy, compute_medial_axis, Corridor, HierarchyAssignment, HierarchyOptions,
    MedialAxis,
};
use crate::scenario::{build_state_model, Scenario, StateModel};
use crate::Result;

#[derive(Clone, Debug)]
pub struct Network {
    pub scenario: Scenario,
    pub model: StateModel,
    pub axis: MedialAxis,
    pub corridor: Corridor,
    pub hierarchy: HierarchyAssignment,
}

impl Network {
    pub fn prepare(scenario: &Scenario, opts: HierarchyOptions) -> Result<Self> {
        let model = build_state_model(&scenario.pus)?;
        let axis = compute_medial_axis(scenario)?;
        let corridor = Corridor::new(axis.clone(), &scenario.pus, scenario.game.omega)?;
        let hierarchy = build_hierarchy(scenario, &corridor, &model, opts)?;
        Ok(Network {
            scenario: scenario.clone(),
            model,
            axis,
            corridor,
            hierarchy,
        })
    }
}
