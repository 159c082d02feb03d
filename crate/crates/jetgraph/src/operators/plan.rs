//! Interpolation plans: the jet family for one mixed-partial pattern,
//! plus the symmetry-reduced direction loops for the fourth-order
//! two-slot pattern used by the biharmonic operator.

use num_traits::ToPrimitive;

use super::gamma::{gamma, multi_indices, Rat};
use super::OperatorError;

#[derive(Debug, Clone)]
pub struct PlanMember {
    pub j: Vec<usize>,
    pub gamma: Rat,
}

/// Which (d1, d2) pairs a reduced group loops over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// d1 = d2, D jets.
    Diagonal,
    /// d1 != d2 ordered, D(D-1) jets.
    OffDiagonalOrdered,
    /// d1 < d2, D(D-1)/2 jets.
    UnorderedPairs,
}

impl Pairing {
    pub fn jet_count(self, d: usize) -> usize {
        match self {
            Pairing::Diagonal => d,
            Pairing::OffDiagonalOrdered => d * d.saturating_sub(1),
            Pairing::UnorderedPairs => d * d.saturating_sub(1) / 2,
        }
    }
}

/// One symmetry-merged loop: jets along combo.0 * e_d1 + combo.1 * e_d2
/// for every pair in the pairing, each top coefficient weighted by
/// `weight` (which already folds the gamma symmetry multiplicity and
/// the 1/K! factor).
#[derive(Debug, Clone)]
pub struct ReducedGroup {
    pub weight: Rat,
    pub combo: (i64, i64),
    pub pairing: Pairing,
}

#[derive(Debug, Clone)]
pub struct InterpolationPlan {
    pub degree: usize,
    pub index: Vec<usize>,
    /// The full family {j : ||j||_1 = K} with exact coefficients.
    pub members: Vec<PlanMember>,
    /// Symmetry-reduced evaluation groups (populated for i = (2,2)).
    pub groups: Vec<ReducedGroup>,
}

impl InterpolationPlan {
    pub fn total_jets(&self, d: usize) -> usize {
        self.groups.iter().map(|g| g.pairing.jet_count(d)).sum()
    }
}

/// Plan for the biharmonic pattern: K = 4, i = (2,2), basis directions.
///
/// The five family members collapse to three loop groups: the diagonal
/// absorbs both same-direction combos of the off-diagonal groups, and
/// the symmetric (2,2) combo runs over unordered pairs with a factor of
/// two.
pub fn biharmonic_plan(d: usize) -> Result<InterpolationPlan, OperatorError> {
    if d == 0 {
        return Err(OperatorError::ZeroDimension);
    }
    let index = vec![2usize, 2];
    let members: Vec<PlanMember> = multi_indices(2, 4)
        .into_iter()
        .map(|j| {
            let g = gamma(&index, &j)?;
            Ok(PlanMember { j, gamma: g })
        })
        .collect::<Result<_, OperatorError>>()?;
    let find = |j: &[usize]| -> Rat {
        members
            .iter()
            .find(|m| m.j == j)
            .expect("member enumeration is complete")
            .gamma
    };
    let g40 = find(&[4, 0]);
    let g31 = find(&[3, 1]);
    let g22 = find(&[2, 2]);
    let factorial = Rat::from_integer(24);
    let two = Rat::from_integer(2);
    let dd = Rat::from_integer(d as i128);
    let groups = vec![
        ReducedGroup {
            weight: (two * dd * g40 + two * g31 + g22) / factorial,
            combo: (4, 0),
            pairing: Pairing::Diagonal,
        },
        ReducedGroup {
            weight: two * g31 / factorial,
            combo: (3, 1),
            pairing: Pairing::OffDiagonalOrdered,
        },
        ReducedGroup {
            weight: two * g22 / factorial,
            combo: (2, 2),
            pairing: Pairing::UnorderedPairs,
        },
    ];
    Ok(InterpolationPlan {
        degree: 4,
        index,
        members,
        groups,
    })
}

pub fn rat_to_f64(r: Rat) -> f64 {
    r.to_f64().expect("plan coefficients fit in f64")
}
