//! Genus and deformation counts for nodal surfaces with marked points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One smooth component with its genus and number of special points
/// (marked points plus node branches on it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentData {
    pub genus: u32,
    pub special_points: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceCombinatorics {
    pub components: Vec<ComponentData>,
    pub marked: u32,
    pub nodes: u32,
}

impl SurfaceCombinatorics {
    /// A single smooth surface of genus `g` with `marked` points.
    pub fn smooth(genus: u32, marked: u32) -> Self {
        SurfaceCombinatorics {
            components: vec![ComponentData {
                genus,
                special_points: marked,
            }],
            marked,
            nodes: 0,
        }
    }

    /// Special points are the marked points plus two per node.
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::DomainError("a surface needs at least one component".into()));
        }
        let special: u32 = self.components.iter().map(|c| c.special_points).sum();
        if special != self.marked + 2 * self.nodes {
            return Err(Error::DomainError(format!(
                "special point count {special} differs from M + 2D = {}",
                self.marked + 2 * self.nodes
            )));
        }
        Ok(())
    }

    /// `2g + n ≥ 3` per component.
    pub fn stability_flags(&self) -> Vec<bool> {
        self.components
            .iter()
            .map(|c| 2 * c.genus + c.special_points >= 3)
            .collect()
    }

    pub fn is_stable(&self) -> bool {
        self.stability_flags().iter().all(|&s| s)
    }
}

/// `g_a = 1 + D + Σ (g(C) − 1)`.
pub fn arithmetic_genus(s: &SurfaceCombinatorics) -> i64 {
    1 + s.nodes as i64 + s.components.iter().map(|c| c.genus as i64 - 1).sum::<i64>()
}

/// Complex dimension `3g_a + M − D − 3` of the deformation cokernel.
pub fn deformation_dimension(s: &SurfaceCombinatorics) -> Result<i64> {
    s.validate()?;
    if !s.is_stable() {
        let bad: Vec<usize> = s
            .stability_flags()
            .iter()
            .enumerate()
            .filter(|(_, ok)| !**ok)
            .map(|(i, _)| i)
            .collect();
        return Err(Error::NotStable(format!("components {bad:?} have 2g + n < 3")));
    }
    Ok(3 * arithmetic_genus(s) + s.marked as i64 - s.nodes as i64 - 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_spheres() -> SurfaceCombinatorics {
        let c = ComponentData {
            genus: 0,
            special_points: 3,
        };
        SurfaceCombinatorics {
            components: vec![c, c],
            marked: 4,
            nodes: 1,
        }
    }

    #[test]
    fn genus_examples() {
        assert_eq!(arithmetic_genus(&SurfaceCombinatorics::smooth(0, 0)), 0);
        assert_eq!(arithmetic_genus(&two_spheres()), 0);
        assert_eq!(arithmetic_genus(&SurfaceCombinatorics::smooth(1, 0)), 1);
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(deformation_dimension(&SurfaceCombinatorics::smooth(0, 3)).unwrap(), 0);
        assert_eq!(deformation_dimension(&SurfaceCombinatorics::smooth(0, 4)).unwrap(), 1);
        assert_eq!(deformation_dimension(&two_spheres()).unwrap(), 0);
    }

    #[test]
    fn unstable_and_inconsistent() {
        assert!(matches!(
            deformation_dimension(&SurfaceCombinatorics::smooth(0, 2)),
            Err(Error::NotStable(_))
        ));
        let mut s = two_spheres();
        s.marked = 3;
        assert!(matches!(deformation_dimension(&s), Err(Error::DomainError(_))));
        assert_eq!(deformation_dimension(&SurfaceCombinatorics::smooth(1, 1)).unwrap(), 1);
    }
}
