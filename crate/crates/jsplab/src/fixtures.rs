//! Instances with hand-verified properties, used by the unit, integration,
//! and bench suites.

use crate::instance::Instance;
use crate::schedule::Orientation;

/// The 2x2 cross instance: job 1 runs machine 1 (3) then machine 2 (2);
/// job 2 runs machine 2 (2) then machine 1 (4).
///
/// Its four orientations pin down every basic contract by hand:
/// makespans 7 / 11 / 11 and one cyclic case (see [`T1Label`]), a unique
/// optimum, and single-move neighborhoods.
pub fn tiny2x2() -> Instance {
    Instance::new(2, 2, vec![vec![1, 2], vec![2, 1]], vec![vec![3, 2], vec![2, 4]], None, None)
        .expect("valid fixture")
}

/// The four orientations of [`tiny2x2`], by per-machine job order:
///
/// | label | machine 1 | machine 2 | makespan   |
/// |-------|-----------|-----------|------------|
/// | A     | 1, 2      | 2, 1      | 7 (optimal)|
/// | B     | 1, 2      | 1, 2      | 11         |
/// | C     | 2, 1      | 2, 1      | 11         |
/// | D     | 2, 1      | 1, 2      | cyclic     |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum T1Label {
    A,
    B,
    C,
    D,
}

/// Builds one of the four labeled orientations of [`tiny2x2`].
pub fn t1_orientation(inst: &Instance, label: T1Label) -> Orientation {
    let seq = match label {
        T1Label::A => vec![vec![1, 2], vec![2, 1]],
        T1Label::B => vec![vec![1, 2], vec![1, 2]],
        T1Label::C => vec![vec![2, 1], vec![2, 1]],
        T1Label::D => vec![vec![2, 1], vec![1, 2]],
    };
    Orientation::from_seq(inst, seq)
}

/// The classic 10x10 benchmark instance `la16` (OR-Library numbering),
/// optimal makespan 945. Used by the descent-distance replication and the
/// bench suite; far beyond exact-enumeration scale.
pub fn la16() -> Instance {
    Instance::parse_orlib(include_str!("../data/la16.txt")).expect("valid embedded instance")
}
