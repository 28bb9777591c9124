//! Smallest set of smallest rings (SSSR) perception.
//!
//! The ring count is the cyclomatic number E − V + C of the bond graph.
//! Candidate rings are the shortest cycles through each edge (BFS in the
//! graph with that edge removed); candidates are taken greedily in
//! (length, atom-order) order, keeping only cycles whose edge sets are
//! linearly independent over GF(2), until the cyclomatic count is reached.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use crate::mol::Molecule;

/// Returns the SSSR as sorted atom-index lists, ordered by
/// (smallest member, ring size, lexicographic members).
pub fn perceive_rings(molecule: &Molecule) -> Vec<Vec<usize>> {
    let n = molecule.atoms.len();
    if n == 0 {
        return Vec::new();
    }

    // Unique undirected edges with dense ids (duplicate bonds collapse).
    let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for bond in &molecule.bonds {
        let key = (bond.atom_a.min(bond.atom_b), bond.atom_a.max(bond.atom_b));
        let next = edge_ids.len();
        edge_ids.entry(key).or_insert(next);
    }
    let n_edges = edge_ids.len();

    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edge_ids.keys() {
        adj[u].push(v);
        adj[v].push(u);
    }

    let components = count_components(n, &adj);
    let ring_count = (n_edges + components).saturating_sub(n);
    if ring_count == 0 {
        return Vec::new();
    }

    struct Candidate {
        atoms: Vec<usize>,
        edge_bits: Vec<u64>,
    }

    let words = n_edges.div_ceil(64);
    let mut seen_edge_sets: Vec<Vec<u64>> = Vec::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    for &(u, v) in edge_ids.keys() {
        let Some(path) = shortest_path_avoiding_edge(u, v, &adj) else {
            continue; // bridge edge: not in any cycle
        };
        let mut edge_bits = vec![0u64; words];
        for w in path.windows(2) {
            set_edge_bit(&mut edge_bits, &edge_ids, w[0], w[1]);
        }
        set_edge_bit(&mut edge_bits, &edge_ids, *path.last().unwrap(), path[0]);
        if seen_edge_sets.contains(&edge_bits) {
            continue;
        }
        seen_edge_sets.push(edge_bits.clone());
        let mut atoms = path;
        atoms.sort_unstable();
        candidates.push(Candidate { atoms, edge_bits });
    }

    candidates.sort_by(|a, b| {
        (a.atoms.len(), &a.atoms).cmp(&(b.atoms.len(), &b.atoms))
    });

    // Greedy GF(2) selection: keep a basis in echelon form (one distinct
    // leading bit each); a candidate that reduces to zero is dependent.
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings: Vec<Vec<usize>> = Vec::new();
    for candidate in candidates {
        if rings.len() == ring_count {
            break;
        }
        let mut vec = candidate.edge_bits.clone();
        for (lead, bvec) in &basis {
            if bit_is_set(&vec, *lead) {
                xor_into(&mut vec, bvec);
            }
        }
        if let Some(lead) = leading_bit(&vec) {
            basis.push((lead, vec));
            rings.push(candidate.atoms);
        }
    }

    rings.sort_by(|a, b| (a[0], a.len(), a).cmp(&(b[0], b.len(), b)));
    rings
}

fn set_edge_bit(bits: &mut [u64], edge_ids: &BTreeMap<(usize, usize), usize>, u: usize, v: usize) {
    let id = edge_ids[&(u.min(v), u.max(v))];
    bits[id / 64] |= 1u64 << (id % 64);
}

fn bit_is_set(bits: &[u64], id: usize) -> bool {
    bits[id / 64] & (1u64 << (id % 64)) != 0
}

fn xor_into(target: &mut [u64], other: &[u64]) {
    for (t, o) in target.iter_mut().zip(other) {
        *t ^= o;
    }
}

fn leading_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn count_components(n: usize, adj: &[Vec<usize>]) -> usize {
    let mut visited = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        components += 1;
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    components
}

/// Shortest path from `u` to `v` that never takes the direct u–v hop,
/// returned as the vertex sequence `[u, ..., v]`.
fn shortest_path_avoiding_edge(u: usize, v: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut parent = vec![usize::MAX; n];
    let mut visited = vec![false; n];
    let mut queue = VecDeque::from([u]);
    visited[u] = true;
    while let Some(x) = queue.pop_front() {
        if x == v {
            break;
        }
        for &y in &adj[x] {
            if (x == u && y == v) || (x == v && y == u) {
                continue;
            }
            if !visited[y] {
                visited[y] = true;
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    if !visited[v] {
        return None;
    }
    let mut path = vec![v];
    let mut cur = v;
    while cur != u {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::{Atom, Bond, BondOrder, Molecule};
    use nalgebra::Vector3;
    use std::collections::BTreeMap;
    use std::collections::BTreeSet;

    fn ring_molecule(edges: &[(usize, usize)], n: usize) -> Molecule {
        let atoms = (0..n)
            .map(|i| Atom::new("C", Vector3::new(i as f64, 0.0, 0.0), 0))
            .collect();
        let bonds = edges
            .iter()
            .map(|&(a, b)| Bond {
                atom_a: a,
                atom_b: b,
                order: BondOrder::Single,
            })
            .collect();
        Molecule::new("ring-test".into(), atoms, bonds, BTreeMap::new()).unwrap()
    }

    /// Brute-force enumeration of every simple cycle (as a sorted atom set),
    /// used as an oracle for the BFS-based perception.
    fn all_simple_cycles(n: usize, edges: &[(usize, usize)]) -> BTreeSet<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut cycles = BTreeSet::new();
        fn dfs(
            start: usize,
            current: usize,
            prev: usize,
            path: &mut Vec<usize>,
            adj: &[Vec<usize>],
            cycles: &mut BTreeSet<Vec<usize>>,
        ) {
            for &next in &adj[current] {
                if next == prev {
                    continue;
                }
                if next == start && path.len() >= 3 {
                    let mut cycle = path.clone();
                    cycle.sort_unstable();
                    cycles.insert(cycle);
                } else if next > start && !path.contains(&next) {
                    path.push(next);
                    dfs(start, next, current, path, adj, cycles);
                    path.pop();
                }
            }
        }
        for start in 0..n {
            let mut path = vec![start];
            dfs(start, start, usize::MAX, &mut path, &adj, &mut cycles);
        }
        cycles
    }

    #[test]
    fn benzene_has_one_six_ring() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)];
        let rings = perceive_rings(&ring_molecule(&edges, 6));
        assert_eq!(rings, vec![vec![0, 1, 2, 3, 4, 5]]);
    }

    #[test]
    fn ethane_has_no_rings() {
        let rings = perceive_rings(&ring_molecule(&[(0, 1)], 2));
        assert!(rings.is_empty());
    }

    #[test]
    fn naphthalene_rings_match_brute_force_oracle() {
        // Two fused six-rings sharing edge (0,5); the perimeter ten-cycle is
        // a dependent combination and must not be reported.
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 0),
            (5, 6),
            (6, 7),
            (7, 8),
            (8, 9),
            (9, 0),
        ];
        let mol = ring_molecule(&edges, 10);
        let rings = perceive_rings(&mol);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.len() == 6));

        let oracle = all_simple_cycles(10, &edges);
        assert_eq!(oracle.len(), 3); // 6-ring, 6-ring, 10-perimeter
        for ring in &rings {
            assert!(oracle.contains(ring), "ring {ring:?} is not a cycle");
        }
        let smallest_two: BTreeSet<Vec<usize>> =
            oracle.iter().filter(|c| c.len() == 6).cloned().collect();
        assert_eq!(
            rings.iter().cloned().collect::<BTreeSet<_>>(),
            smallest_two
        );
    }

    #[test]
    fn disconnected_rings_are_both_found() {
        let edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)];
        let rings = perceive_rings(&ring_molecule(&edges, 6));
        assert_eq!(rings, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn spiro_rings_share_an_atom() {
        let edges = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)];
        let rings = perceive_rings(&ring_molecule(&edges, 5));
        assert_eq!(rings, vec![vec![0, 1, 2], vec![2, 3, 4]]);
    }

    #[test]
    fn bicyclo_222_octane_reports_two_of_three_cycles() {
        // Bridged bicyclic: three 6-cycles exist but the cyclomatic number
        // is 2, so only two (any independent pair) are kept.
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 0),
            (0, 6),
            (6, 7),
            (7, 3),
        ];
        let mol = ring_molecule(&edges, 8);
        let rings = perceive_rings(&mol);
        assert_eq!(rings.len(), 2);
        let oracle = all_simple_cycles(8, &edges);
        for ring in &rings {
            assert!(oracle.contains(ring));
        }
    }
}
