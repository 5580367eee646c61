use serde::Serialize;

use super::DyadicGrid;
use crate::space::REL_TOL;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: u8,
    pub name: &'static str,
    pub passed: bool,
    /// First offending cube/point found, if any.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub properties: Vec<PropertyCheck>,
}

impl GridReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn property(&self, i: u8) -> &PropertyCheck {
        &self.properties[(i - 1) as usize]
    }
}

/// Exhaustively checks the six dyadic-grid properties against the stored
/// `delta`, `epsilon` and `C`.
pub fn verify_grid(grid: &DyadicGrid) -> GridReport {
    let checks: [(&'static str, fn(&DyadicGrid) -> Option<String>); 6] = [
        ("partition", partition),
        ("nesting", nesting),
        ("children", children),
        ("unique parent", unique_parent),
        ("mass ratio", mass_ratio),
        ("sandwich", sandwich),
    ];
    let properties = checks
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let witness = check(grid);
            PropertyCheck {
                property: i as u8 + 1,
                name,
                passed: witness.is_none(),
                witness,
            }
        })
        .collect();
    GridReport { properties }
}

fn owners(grid: &DyadicGrid, k: i32) -> Result<Vec<usize>, String> {
    let n = grid.len_points();
    let mut owner = vec![usize::MAX; n];
    for &id in grid.level(k) {
        for &x in &grid.cube(id).members {
            if owner[x] != usize::MAX {
                return Err(format!(
                    "level {k}: point {x} lies in cubes {} and {id}",
                    owner[x]
                ));
            }
            owner[x] = id;
        }
    }
    if let Some(x) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(format!("level {k}: point {x} is not covered"));
    }
    Ok(owner)
}

fn partition(grid: &DyadicGrid) -> Option<String> {
    (grid.k_min()..=grid.k_max()).find_map(|k| owners(grid, k).err())
}

fn nesting(grid: &DyadicGrid) -> Option<String> {
    for c in grid.cubes() {
        if c.level == grid.k_max() {
            continue;
        }
        let above = grid.level(c.level + 1);
        let holder = above
            .iter()
            .find(|&&q| grid.cube(q).contains(c.members[0]));
        match holder {
            Some(&q) => {
                let parent = grid.cube(q);
                if let Some(&x) = c.members.iter().find(|&&x| !parent.contains(x)) {
                    return Some(format!(
                        "cube {} (level {}) straddles cube {q}: point {x} lies outside it",
                        c.id, c.level
                    ));
                }
            }
            None => {
                return Some(format!(
                    "cube {} (level {}) meets no cube one level up",
                    c.id, c.level
                ))
            }
        }
    }
    None
}

fn children(grid: &DyadicGrid) -> Option<String> {
    for c in grid.cubes() {
        if c.level == grid.k_min() {
            continue;
        }
        let below = grid.level(c.level - 1);
        let has_child = below.iter().any(|&q| {
            let d = grid.cube(q);
            d.members.iter().all(|&x| c.contains(x))
        });
        if !has_child {
            return Some(format!("cube {} (level {}) has no child", c.id, c.level));
        }
    }
    None
}

fn unique_parent(grid: &DyadicGrid) -> Option<String> {
    for c in grid.cubes() {
        if c.level == grid.k_max() {
            if c.parent.is_some() {
                return Some(format!("top cube {} has a parent link", c.id));
            }
            continue;
        }
        let supersets: Vec<usize> = grid
            .level(c.level + 1)
            .iter()
            .copied()
            .filter(|&q| c.members.iter().all(|&x| grid.cube(q).contains(x)))
            .collect();
        if supersets.len() != 1 {
            return Some(format!(
                "cube {} (level {}) has {} containing cubes one level up",
                c.id,
                c.level,
                supersets.len()
            ));
        }
        if c.parent != Some(supersets[0]) {
            return Some(format!(
                "cube {} links to parent {:?} but is contained in cube {}",
                c.id, c.parent, supersets[0]
            ));
        }
    }
    None
}

fn mass_ratio(grid: &DyadicGrid) -> Option<String> {
    let eps = grid.epsilon();
    grid.cubes().iter().find_map(|c| {
        let p = grid.cube(c.parent?);
        (c.measure < eps * p.measure * (1.0 - REL_TOL)).then(|| {
            format!(
                "cube {} has mass {} < epsilon * mass of parent {} = {}",
                c.id,
                c.measure,
                p.id,
                eps * p.measure
            )
        })
    })
}

fn sandwich(grid: &DyadicGrid) -> Option<String> {
    let space = grid.space();
    let c_sw = grid.c_sandwich();
    for c in grid.cubes() {
        if !c.contains(c.center) {
            return Some(format!("cube {} does not contain its center {}", c.id, c.center));
        }
        let r = grid.scale(c.level);
        let inner = space.ball(c.center, r);
        if let Some(&x) = inner.members.iter().find(|&&x| !c.contains(x)) {
            return Some(format!(
                "point {x} in the inner ball of cube {} (level {}) lies outside the cube",
                c.id, c.level
            ));
        }
        let outer = space.ball(c.center, c_sw * r);
        if let Some(&x) = c.members.iter().find(|&&x| !outer.contains(x)) {
            return Some(format!(
                "point {x} of cube {} (level {}) lies outside the outer ball",
                c.id, c.level
            ));
        }
    }
    None
}
