//! Homophily and early-adopter giant component.

use crate::error::{Error, Result};

use super::Network;

/// Weighted quick-union with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    pub fn component_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

/// Mean, over Early agents with at least one neighbor, of the fraction of
/// their neighbors that are Early.
pub fn measure_homophily(net: &Network) -> Result<f64> {
    let pop = net.population();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..net.n() {
        if !pop.is_early(i) {
            continue;
        }
        let nbrs = net.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let early = nbrs.iter().filter(|&&j| pop.is_early(j as usize)).count();
        sum += early as f64 / nbrs.len() as f64;
        count += 1;
    }
    if count == 0 {
        return Err(Error::UndefinedHomophily);
    }
    Ok(sum / count as f64)
}

/// Largest connected component of the Early-induced subgraph, as a fraction
/// of all Early agents. Zero when there are no Early agents.
pub fn early_giant_component(net: &Network) -> f64 {
    let pop = net.population();
    let mut uf = UnionFind::new(net.n());
    let mut n_early = 0usize;
    for i in 0..net.n() {
        if !pop.is_early(i) {
            continue;
        }
        n_early += 1;
        for &j in net.neighbors(i) {
            if (j as usize) > i && pop.is_early(j as usize) {
                uf.union(i as u32, j);
            }
        }
    }
    if n_early == 0 {
        return 0.0;
    }
    let largest = (0..net.n())
        .filter(|&i| pop.is_early(i))
        .map(|i| uf.component_size(i as u32))
        .max()
        .unwrap_or(0);
    largest as f64 / n_early as f64
}
