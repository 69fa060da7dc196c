//! Two-region interval geometry.
//!
//! The computational domain Ω = (0, L) is split by an interface at γ into
//! the heat region Ω₁ = (0, γ) and the wave region Ω₂ = (γ, L). Each region
//! carries its own uniform grid; the interface is a single shared node, so a
//! grid with `n1` heat cells and `n2` wave cells has `n1 + n2 + 1` nodes.

use crate::{Error, Result};

/// Minimum number of cells per region. Below this the interface stencils
/// would overlap the outer Dirichlet nodes.
pub const MIN_CELLS: usize = 4;

/// Domain description: interval length, interface position, cells per region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainConfig {
    /// Domain length L > 0.
    pub length: f64,
    /// Interface position γ, strictly inside (0, L).
    pub gamma: f64,
    /// Cells in the heat region Ω₁ = (0, γ).
    pub n1: usize,
    /// Cells in the wave region Ω₂ = (γ, L).
    pub n2: usize,
}

impl DomainConfig {
    pub fn new(length: f64, gamma: f64, n1: usize, n2: usize) -> Result<Self> {
        let cfg = DomainConfig {
            length,
            gamma,
            n1,
            n2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.length.is_finite() || self.length <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "length",
                reason: format!("must be positive and finite, got {}", self.length),
            });
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma >= self.length {
            return Err(Error::InvalidConfig {
                field: "gamma",
                reason: format!(
                    "interface must lie strictly inside (0, {}), got {}",
                    self.length, self.gamma
                ),
            });
        }
        if self.n1 < MIN_CELLS {
            return Err(Error::InvalidConfig {
                field: "n1",
                reason: format!("need at least {MIN_CELLS} cells, got {}", self.n1),
            });
        }
        if self.n2 < MIN_CELLS {
            return Err(Error::InvalidConfig {
                field: "n2",
                reason: format!("need at least {MIN_CELLS} cells, got {}", self.n2),
            });
        }
        Ok(())
    }

    /// Heat-region spacing h₁ = γ / n1.
    pub fn h1(&self) -> f64 {
        self.gamma / self.n1 as f64
    }

    /// Wave-region spacing h₂ = (L − γ) / n2.
    pub fn h2(&self) -> f64 {
        (self.length - self.gamma) / self.n2 as f64
    }
}

/// Region label attached to each grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Heat,
    Interface,
    Wave,
}

/// Uniform two-region grid with the interface as a shared node.
///
/// Node 0 sits at x = 0 and node `n1 + n2` at x = L; both are Dirichlet
/// boundary nodes (`u = 0` at 0, `v = 0` at L). Node `interface_index = n1`
/// sits exactly at γ.
#[derive(Debug, Clone)]
pub struct Grid {
    config: DomainConfig,
    nodes: Vec<f64>,
    interface_index: usize,
}

/// Builds the grid for a validated domain configuration.
///
/// Deterministic: identical configs produce identical grids. The interface
/// node and both endpoints are placed exactly (not accumulated), so
/// `nodes[interface_index] == gamma` holds bit-for-bit.
pub fn build_grid(config: &DomainConfig) -> Result<Grid> {
    config.validate()?;
    let h1 = config.h1();
    let h2 = config.h2();
    let mut nodes = Vec::with_capacity(config.n1 + config.n2 + 1);
    for i in 0..config.n1 {
        nodes.push(i as f64 * h1);
    }
    nodes.push(config.gamma);
    for j in 1..config.n2 {
        nodes.push(config.gamma + j as f64 * h2);
    }
    nodes.push(config.length);
    Ok(Grid {
        config: *config,
        nodes,
        interface_index: config.n1,
    })
}

impl Grid {
    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn interface_index(&self) -> usize {
        self.interface_index
    }

    pub fn gamma(&self) -> f64 {
        self.config.gamma
    }

    pub fn length(&self) -> f64 {
        self.config.length
    }

    pub fn h1(&self) -> f64 {
        self.config.h1()
    }

    pub fn h2(&self) -> f64 {
        self.config.h2()
    }

    pub fn n1(&self) -> usize {
        self.config.n1
    }

    pub fn n2(&self) -> usize {
        self.config.n2
    }

    pub fn region(&self, node: usize) -> Region {
        use std::cmp::Ordering::*;
        match node.cmp(&self.interface_index) {
            Less => Region::Heat,
            Equal => Region::Interface,
            Greater => Region::Wave,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_split() {
        let grid = build_grid(&DomainConfig::new(1.0, 0.5, 4, 4).unwrap()).unwrap();
        assert_eq!(grid.node_count(), 9);
        assert_eq!(grid.interface_index(), 4);
        assert_eq!(grid.h1(), 0.125);
        assert_eq!(grid.h2(), 0.125);
        assert_eq!(grid.nodes()[4], 0.5);
        assert_eq!(grid.nodes()[0], 0.0);
        assert_eq!(grid.nodes()[8], 1.0);
    }

    #[test]
    fn rejects_small_n1() {
        let err = DomainConfig::new(1.0, 0.3, 3, 7).unwrap_err();
        match err {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "n1"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_gamma_outside_domain() {
        assert!(DomainConfig::new(1.0, 1.0, 8, 8).is_err());
        assert!(DomainConfig::new(1.0, 0.0, 8, 8).is_err());
        assert!(DomainConfig::new(1.0, -0.2, 8, 8).is_err());
        assert!(DomainConfig::new(1.0, 1.7, 8, 8).is_err());
    }

    #[test]
    fn asymmetric_counts_by_hand() {
        // L = 2, γ = 0.5: h₁ = 0.5/10 = 0.05, h₂ = 1.5/30 = 0.05, 41 nodes.
        let grid = build_grid(&DomainConfig::new(2.0, 0.5, 10, 30).unwrap()).unwrap();
        assert_eq!(grid.node_count(), 41);
        assert!((grid.h1() - 0.05).abs() < 1e-15);
        assert!((grid.h2() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn spacing_uniform_within_regions() {
        let grid = build_grid(&DomainConfig::new(1.7, 0.61, 13, 29).unwrap()).unwrap();
        let nodes = grid.nodes();
        let tol = 4.0 * f64::EPSILON * grid.length();
        for i in 0..grid.n1() {
            assert!((nodes[i + 1] - nodes[i] - grid.h1()).abs() <= tol);
        }
        for j in grid.n1()..grid.n1() + grid.n2() {
            assert!((nodes[j + 1] - nodes[j] - grid.h2()).abs() <= tol);
        }
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn deterministic_rebuild() {
        let cfg = DomainConfig::new(1.3, 0.71, 9, 17).unwrap();
        let a = build_grid(&cfg).unwrap();
        let b = build_grid(&cfg).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.interface_index(), b.interface_index());
    }
}
