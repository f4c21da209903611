// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use vmfg_core::process::{StepSpec, DEMO_CONFIG_OK};
use vmfg_core::{AuxData, ProcessSpec};

/// A spec with `steps` steps, each allowing `width` states, for scaling runs.
pub fn wide_spec(steps: usize, width: u32) -> ProcessSpec {
    ProcessSpec {
        name: format!("bench-{steps}x{width}"),
        steps: (0..steps)
            .map(|i| StepSpec {
                allowed_states: (0..width).map(|k| i as u32 * 16 + k).collect(),
                expected_aux: if i % 2 == 0 {
                    AuxData::Int(DEMO_CONFIG_OK)
                } else {
                    AuxData::Str(format!("step-{i}"))
                },
            })
            .collect(),
    }
}
