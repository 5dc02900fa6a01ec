//! Statics of the six-bar spherical tensegrity ("expanded octahedron").
//!
//! Twelve nodes, six bars in three orthogonal parallel pairs and 24 cables.
//! Equilibrium is expressed with force densities `q = axial force / length`,
//! which makes nodal equilibrium linear in `q`: `A q = f_ext`, where column
//! `m = (a, b)` of `A` holds `x_a - x_b` in the rows of node `a` and
//! `x_b - x_a` in the rows of node `b`.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::dataset::SENSOR_COUNT;
use crate::error::{PhriError, Result};

pub const NODE_COUNT: usize = SENSOR_COUNT;
pub const BAR_COUNT: usize = 6;
pub const CABLE_COUNT: usize = 24;
pub const MEMBER_COUNT: usize = BAR_COUNT + CABLE_COUNT;

/// Outer diameter of the assembled prototype, m.
pub const DEFAULT_DIAMETER_M: f64 = 0.56;
/// Prototype mass, kg. Kept as metadata only.
pub const PROTOTYPE_MASS_KG: f64 = 0.70;

/// Relative singular-value threshold separating the null space of `A`.
pub const SINGULAR_TOLERANCE: f64 = 1e-8;

/// Offset-to-half-length ratio of the bars at which the symmetric
/// configuration admits a self-stress.
pub const EQUILIBRIUM_ASPECT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberKind {
    Bar,
    Cable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub a: usize,
    pub b: usize,
    pub kind: MemberKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensegrityGraph {
    pub members: Vec<Member>,
}

impl TensegrityGraph {
    pub fn node_count(&self) -> usize {
        NODE_COUNT
    }

    pub fn bars(&self) -> impl Iterator<Item = (usize, &Member)> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.kind == MemberKind::Bar)
    }

    pub fn cables(&self) -> impl Iterator<Item = (usize, &Member)> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.kind == MemberKind::Cable)
    }

    /// Member index of the bar ending at each node.
    pub fn bar_of_node(&self) -> [usize; NODE_COUNT] {
        let mut out = [usize::MAX; NODE_COUNT];
        for (i, m) in self.bars() {
            out[m.a] = i;
            out[m.b] = i;
        }
        out
    }

    /// Lists every broken topology invariant; empty for a valid class-one
    /// six-bar graph.
    pub fn topology_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let bars = self.bars().count();
        let cables = self.cables().count();
        if bars != BAR_COUNT {
            errs.push(format!("{bars} bars, expected {BAR_COUNT}"));
        }
        if cables != CABLE_COUNT {
            errs.push(format!("{cables} cables, expected {CABLE_COUNT}"));
        }
        let mut bar_deg = [0usize; NODE_COUNT];
        let mut cable_deg = [0usize; NODE_COUNT];
        for m in &self.members {
            if m.a >= NODE_COUNT || m.b >= NODE_COUNT {
                errs.push(format!("member ({}, {}) references a missing node", m.a, m.b));
                continue;
            }
            if m.a == m.b {
                errs.push(format!("member connects node {} to itself", m.a));
            }
            let deg = match m.kind {
                MemberKind::Bar => &mut bar_deg,
                MemberKind::Cable => &mut cable_deg,
            };
            deg[m.a] += 1;
            deg[m.b] += 1;
        }
        for n in 0..NODE_COUNT {
            if bar_deg[n] != 1 {
                errs.push(format!("node {n} touches {} bars", bar_deg[n]));
            }
            if cable_deg[n] != 4 {
                errs.push(format!("node {n} touches {} cables", cable_deg[n]));
            }
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePositions {
    /// Node coordinates, m.
    pub coords: [[f64; 3]; NODE_COUNT],
}

impl NodePositions {
    pub fn point(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.coords[i])
    }

    pub fn centroid(&self) -> Vector3<f64> {
        (0..NODE_COUNT).map(|i| self.point(i)).sum::<Vector3<f64>>() / NODE_COUNT as f64
    }

    /// Diameter of the sphere about the centroid that encloses every node.
    pub fn bounding_diameter(&self) -> f64 {
        let c = self.centroid();
        2.0 * (0..NODE_COUNT)
            .map(|i| (self.point(i) - c).norm())
            .fold(0.0, f64::max)
    }

    pub fn member_length(&self, m: &Member) -> f64 {
        (self.point(m.a) - self.point(m.b)).norm()
    }

    pub fn member_lengths(&self, graph: &TensegrityGraph) -> Vec<f64> {
        graph.members.iter().map(|m| self.member_length(m)).collect()
    }
}

/// Node coordinates of the symmetric family: bars of half-length `half_len`
/// parallel to the coordinate axes, each parallel pair offset by `±offset`.
///
/// Node order: the three groups `(0, ±o, ±h)`, `(±o, ±h, 0)`, `(±h, 0, ±o)`,
/// each listed with the bar partner immediately following its first end.
pub fn symmetric_positions(offset: f64, half_len: f64) -> NodePositions {
    let (o, h) = (offset, half_len);
    let mut coords = [[0.0; 3]; NODE_COUNT];
    let mut i = 0;
    for s in [1.0, -1.0] {
        coords[i] = [0.0, s * o, h];
        coords[i + 1] = [0.0, s * o, -h];
        i += 2;
    }
    for s in [1.0, -1.0] {
        coords[i] = [s * o, h, 0.0];
        coords[i + 1] = [s * o, -h, 0.0];
        i += 2;
    }
    for s in [1.0, -1.0] {
        coords[i] = [h, 0.0, s * o];
        coords[i + 1] = [-h, 0.0, s * o];
        i += 2;
    }
    NodePositions { coords }
}

fn icosahedron_graph(pos: &NodePositions) -> TensegrityGraph {
    // Bars join consecutive node pairs; cables join each node to its four
    // nearest nodes outside its own bar group.
    let group = |n: usize| n / 4;
    let mut members: Vec<Member> = (0..BAR_COUNT)
        .map(|k| Member {
            a: 2 * k,
            b: 2 * k + 1,
            kind: MemberKind::Bar,
        })
        .collect();
    let mut shortest = f64::INFINITY;
    for a in 0..NODE_COUNT {
        for b in a + 1..NODE_COUNT {
            if group(a) != group(b) {
                shortest = shortest.min((pos.point(a) - pos.point(b)).norm());
            }
        }
    }
    for a in 0..NODE_COUNT {
        for b in a + 1..NODE_COUNT {
            let d = (pos.point(a) - pos.point(b)).norm();
            if group(a) != group(b) && d <= shortest * (1.0 + 1e-9) {
                members.push(Member {
                    a,
                    b,
                    kind: MemberKind::Cable,
                });
            }
        }
    }
    TensegrityGraph { members }
}

/// The six-bar tensegrity at its self-stressed geometry, scaled so the
/// circumscribing sphere has diameter `diameter_m`.
pub fn build_icosahedron_topology_with_diameter(diameter_m: f64) -> (TensegrityGraph, NodePositions) {
    // Circumradius of (0, o, h) is o * sqrt(1 + aspect^2).
    let offset = 0.5 * diameter_m / (1.0 + EQUILIBRIUM_ASPECT * EQUILIBRIUM_ASPECT).sqrt();
    let pos = symmetric_positions(offset, EQUILIBRIUM_ASPECT * offset);
    (icosahedron_graph(&pos), pos)
}

pub fn build_icosahedron_topology() -> (TensegrityGraph, NodePositions) {
    build_icosahedron_topology_with_diameter(DEFAULT_DIAMETER_M)
}

/// `3·12 × members` equilibrium matrix.
pub fn equilibrium_matrix(graph: &TensegrityGraph, pos: &NodePositions) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(3 * NODE_COUNT, graph.members.len());
    for (col, m) in graph.members.iter().enumerate() {
        let d = pos.point(m.a) - pos.point(m.b);
        for k in 0..3 {
            a[(3 * m.a + k, col)] = d[k];
            a[(3 * m.b + k, col)] = -d[k];
        }
    }
    a
}

fn singular_values_sorted(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Number of independent self-stress states: singular values of `A` below
/// `SINGULAR_TOLERANCE` relative to the largest, plus any rank deficit from
/// having more members than equations.
pub fn self_stress_dimension(a: &DMatrix<f64>) -> usize {
    let sv = singular_values_sorted(a);
    let max = sv.first().copied().unwrap_or(0.0);
    let small = sv.iter().filter(|&&s| s <= SINGULAR_TOLERANCE * max).count();
    small + a.ncols().saturating_sub(sv.len())
}

/// Smallest-to-largest singular value ratio of `A` for the symmetric family
/// at the given aspect (`half_len / offset`). Zero exactly where the family
/// admits a self-stress.
pub fn singular_gap(graph: &TensegrityGraph, aspect: f64) -> f64 {
    let pos = symmetric_positions(1.0, aspect);
    let sv = singular_values_sorted(&equilibrium_matrix(graph, &pos));
    sv[sv.len() - 1] / sv[0]
}

/// Form-finding over the symmetric family: golden-section search for the
/// aspect in `[lo, hi]` minimizing `singular_gap`.
pub fn find_equilibrium_aspect(graph: &TensegrityGraph, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (singular_gap(graph, c), singular_gap(graph, d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = singular_gap(graph, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = singular_gap(graph, d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    /// Force density per member, N/m. Positive in tension.
    pub force_densities: Vec<f64>,
    pub positions: NodePositions,
}

impl EquilibriumState {
    /// Axial force per member, `q · length`, N. Positive in tension.
    pub fn axial_forces(&self, graph: &TensegrityGraph) -> Vec<f64> {
        self.force_densities
            .iter()
            .zip(self.positions.member_lengths(graph))
            .map(|(q, l)| q * l)
            .collect()
    }

    /// `‖A q‖∞`, N.
    pub fn residual(&self, graph: &TensegrityGraph) -> f64 {
        let a = equilibrium_matrix(graph, &self.positions);
        let q = DVector::from_column_slice(&self.force_densities);
        (a * q).amax()
    }
}

/// Extracts the self-stress of `pos`, signed so cables pull and bars push,
/// and scales it so the largest bar compression equals `scale_n` Newtons.
pub fn solve_force_densities(
    graph: &TensegrityGraph,
    pos: &NodePositions,
    scale_n: f64,
) -> Result<EquilibriumState> {
    if !(scale_n > 0.0 && scale_n.is_finite()) {
        return Err(PhriError::InvalidConfig(format!(
            "prestress scale must be positive, got {scale_n}"
        )));
    }
    let a = equilibrium_matrix(graph, pos);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty matrix");
    let smax = svd.singular_values.max();
    let ratio = if smax > 0.0 { smin / smax } else { 1.0 };
    if ratio > SINGULAR_TOLERANCE {
        return Err(PhriError::NoSelfStress { ratio });
    }

    let mut q: Vec<f64> = v_t.row(imin).iter().copied().collect();
    let cable_sum: f64 = graph.cables().map(|(i, _)| q[i]).sum();
    if cable_sum < 0.0 {
        q.iter_mut().for_each(|x| *x = -*x);
    }
    let signs_ok = graph.members.iter().zip(&q).all(|(m, &x)| match m.kind {
        MemberKind::Cable => x > 0.0,
        MemberKind::Bar => x < 0.0,
    });
    if !signs_ok {
        return Err(PhriError::InvalidConfig(
            "self-stress does not put every cable in tension and every bar in compression".into(),
        ));
    }
    let max_compression = graph
        .bars()
        .map(|(i, m)| -q[i] * pos.member_length(m))
        .fold(0.0, f64::max);
    let k = scale_n / max_compression;
    q.iter_mut().for_each(|x| *x *= k);
    Ok(EquilibriumState {
        force_densities: q,
        positions: *pos,
    })
}

/// Precomputed minimum-norm map from external nodal loads to member
/// axial-load changes at a frozen geometry.
#[derive(Debug, Clone)]
pub struct LoadMap {
    pinv: DMatrix<f64>,
    lengths: Vec<f64>,
}

impl LoadMap {
    pub fn new(graph: &TensegrityGraph, pos: &NodePositions) -> Self {
        let a = equilibrium_matrix(graph, pos);
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let pinv = svd
            .pseudo_inverse(SINGULAR_TOLERANCE * smax)
            .expect("both singular bases requested");
        Self {
            pinv,
            lengths: pos.member_lengths(graph),
        }
    }

    /// Axial-load change per member (N, positive = more tension) for the
    /// given external force on each node.
    pub fn apply(&self, external: &[[f64; 3]; NODE_COUNT]) -> Vec<f64> {
        let f = DVector::from_iterator(3 * NODE_COUNT, external.iter().flatten().copied());
        let dq = &self.pinv * f;
        dq.iter().zip(&self.lengths).map(|(q, l)| q * l).collect()
    }
}

/// Member axial-load changes for an external nodal load, from the
/// least-squares solution of `A Δq = f_ext` at the unloaded geometry.
///
/// The map is not injective, so only this forward direction is offered.
pub fn member_loads_under_external(
    graph: &TensegrityGraph,
    pos: &NodePositions,
    _eq: &EquilibriumState,
    external: &[f64],
) -> Result<Vec<f64>> {
    if external.len() != 3 * NODE_COUNT {
        return Err(PhriError::DimensionMismatch {
            expected: 3 * NODE_COUNT,
            got: external.len(),
        });
    }
    let mut nodal = [[0.0; 3]; NODE_COUNT];
    for (i, v) in external.iter().enumerate() {
        nodal[i / 3][i % 3] = *v;
    }
    Ok(LoadMap::new(graph, pos).apply(&nodal))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub a: usize,
    pub b: usize,
    pub kind: MemberKind,
    pub length_m: f64,
    pub force_density: f64,
    pub axial_force_n: f64,
}

/// Versioned export of topology and equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticsDocument {
    pub version: u32,
    pub diameter_m: f64,
    pub mass_kg: f64,
    pub self_stress_dimension: usize,
    pub residual_n: f64,
    pub nodes: Vec<[f64; 3]>,
    pub members: Vec<MemberRecord>,
}

impl StaticsDocument {
    pub const VERSION: u32 = 1;

    pub fn new(graph: &TensegrityGraph, eq: &EquilibriumState) -> Self {
        let a = equilibrium_matrix(graph, &eq.positions);
        let members = graph
            .members
            .iter()
            .zip(&eq.force_densities)
            .map(|(m, &q)| {
                let length_m = eq.positions.member_length(m);
                MemberRecord {
                    a: m.a,
                    b: m.b,
                    kind: m.kind,
                    length_m,
                    force_density: q,
                    axial_force_n: q * length_m,
                }
            })
            .collect();
        Self {
            version: Self::VERSION,
            diameter_m: eq.positions.bounding_diameter(),
            mass_kg: PROTOTYPE_MASS_KG,
            self_stress_dimension: self_stress_dimension(&a),
            residual_n: eq.residual(graph),
            nodes: eq.positions.coords.to_vec(),
            members,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> (TensegrityGraph, NodePositions, EquilibriumState) {
        let (g, p) = build_icosahedron_topology();
        let eq = solve_force_densities(&g, &p, 10.0).unwrap();
        (g, p, eq)
    }

    #[test]
    fn topology_counts() {
        let (g, p) = build_icosahedron_topology();
        assert!(g.topology_errors().is_empty(), "{:?}", g.topology_errors());
        assert_eq!(g.bars().count(), 6);
        assert_eq!(g.cables().count(), 24);
        let mut deg = [0; NODE_COUNT];
        for m in &g.members {
            deg[m.a] += 1;
            deg[m.b] += 1;
        }
        assert!(deg.iter().all(|&d| d == 5));
        assert!((p.bounding_diameter() - 0.56).abs() < 1e-12);
        // All nodes on one sphere, so every node is a hull vertex.
        let c = p.centroid();
        for i in 0..NODE_COUNT {
            assert!(((p.point(i) - c).norm() - 0.28).abs() < 1e-12);
        }
    }

    #[test]
    fn bar_endpoints_partition_nodes() {
        let (g, _) = build_icosahedron_topology();
        let owner = g.bar_of_node();
        assert!(owner.iter().all(|&b| b < BAR_COUNT));
    }

    #[test]
    fn equilibrium_matrix_structure() {
        let (g, p) = build_icosahedron_topology();
        let a = equilibrium_matrix(&g, &p);
        assert_eq!(a.shape(), (36, 30));
        for col in 0..30 {
            let nz = a.column(col).iter().filter(|v| **v != 0.0).count();
            // Bars parallel to an axis have only one nonzero coordinate difference.
            assert!((2..=6).contains(&nz));
            for axis in 0..3 {
                let s: f64 = (0..NODE_COUNT).map(|n| a[(3 * n + axis, col)]).sum();
                assert_eq!(s, 0.0);
            }
        }
        // Cables are never axis-aligned, so their columns are fully populated.
        for (i, _) in g.cables() {
            assert_eq!(a.column(i).iter().filter(|v| **v != 0.0).count(), 6);
        }
    }

    #[test]
    fn single_self_stress_state() {
        let (g, p) = build_icosahedron_topology();
        let a = equilibrium_matrix(&g, &p);
        assert_eq!(self_stress_dimension(&a), 1);
        assert_eq!(a.rank(SINGULAR_TOLERANCE * a.singular_values().max()), 29);
    }

    #[test]
    fn bar_to_cable_length_ratio() {
        let (g, p) = build_icosahedron_topology();
        let lengths = p.member_lengths(&g);
        let bar = lengths[0];
        let cable = lengths[BAR_COUNT];
        for (i, _) in g.cables() {
            assert!((lengths[i] - cable).abs() < 1e-12);
        }
        // Frozen regression value from the solved geometry.
        assert!((bar / cable - 1.632_993_161_855_452).abs() < 1e-12);
    }

    #[test]
    fn form_finding_recovers_equilibrium_aspect() {
        let (g, _) = build_icosahedron_topology();
        let aspect = find_equilibrium_aspect(&g, 1.2, 3.0, 1e-10);
        assert!((aspect - EQUILIBRIUM_ASPECT).abs() < 1e-6, "{aspect}");
        // The regular icosahedron (aspect = golden ratio) is not an equilibrium.
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(singular_gap(&g, golden) > 1e-3);
    }

    #[test]
    fn off_equilibrium_geometry_has_no_self_stress() {
        let (g, _) = build_icosahedron_topology();
        let p = symmetric_positions(0.1, 0.15);
        assert!(matches!(
            solve_force_densities(&g, &p, 10.0),
            Err(PhriError::NoSelfStress { .. })
        ));
    }

    #[test]
    fn solved_state_signs_residual_and_symmetry() {
        let (g, _, eq) = model();
        assert!(eq.residual(&g) <= 1e-8 * 10.0);
        let bars: Vec<f64> = g.bars().map(|(i, _)| eq.force_densities[i]).collect();
        assert!(bars.iter().all(|&q| q < 0.0));
        assert!(g.cables().all(|(i, _)| eq.force_densities[i] > 0.0));
        for q in &bars {
            assert!((q - bars[0]).abs() <= 1e-9 * bars[0].abs());
        }
        let compression = -eq.axial_forces(&g)[0];
        assert!((compression - 10.0).abs() < 1e-12);
    }

    #[test]
    fn bar_to_cable_density_ratio_matches_node_balance() {
        // At a node, the bar balances four cables: q_bar = -1.5 q_cable.
        let (_, _, eq) = model();
        let ratio = eq.force_densities[0] / eq.force_densities[BAR_COUNT];
        assert!((ratio + 1.5).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn scale_is_linear() {
        let (g, p) = build_icosahedron_topology();
        let a = solve_force_densities(&g, &p, 10.0).unwrap();
        let b = solve_force_densities(&g, &p, 20.0).unwrap();
        for (x, y) in a.force_densities.iter().zip(&b.force_densities) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn zero_external_load_gives_zero_change() {
        let (g, p, eq) = model();
        let d = member_loads_under_external(&g, &p, &eq, &[0.0; 36]).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
        assert!(member_loads_under_external(&g, &p, &eq, &[0.0; 35]).is_err());
    }

    #[test]
    fn antipodal_squeeze_loads_the_touching_bars_most() {
        let (g, p, eq) = model();
        // Node 0 = (0, o, h); its antipode (0, -o, -h) is node 3.
        let (top, bottom) = (0, 3);
        assert!((p.point(top) + p.point(bottom)).norm() < 1e-12);
        let dir = p.point(top).normalize();
        let mut f = [0.0; 36];
        for k in 0..3 {
            f[3 * top + k] = -20.0 * dir[k];
            f[3 * bottom + k] = 20.0 * dir[k];
        }
        let d = member_loads_under_external(&g, &p, &eq, &f).unwrap();
        let owner = g.bar_of_node();
        let touched = [owner[top], owner[bottom]];
        let max_other = g
            .bars()
            .filter(|(i, _)| !touched.contains(i))
            .map(|(i, _)| d[i].abs())
            .fold(0.0, f64::max);
        for &b in &touched {
            assert!(d[b].abs() > max_other, "{d:?}");
            // Squeezing adds compression.
            assert!(d[b] < 0.0);
        }
    }

    #[test]
    fn statics_document_roundtrips_through_json() {
        let (g, _, eq) = model();
        let doc = StaticsDocument::new(&g, &eq);
        assert_eq!(doc.version, 1);
        assert_eq!(doc.members.len(), 30);
        assert_eq!(doc.self_stress_dimension, 1);
        let json = serde_json::to_string(&doc).unwrap();
        let back: StaticsDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
    }

    proptest! {
        #[test]
        fn load_map_is_linear(
            f in proptest::collection::vec(-50.0f64..50.0, 36),
            g2 in proptest::collection::vec(-50.0f64..50.0, 36),
            s in -3.0f64..3.0,
        ) {
            let (g, p, eq) = model();
            let combo: Vec<f64> = f.iter().zip(&g2).map(|(a, b)| s * a + b).collect();
            let lf = member_loads_under_external(&g, &p, &eq, &f).unwrap();
            let lg = member_loads_under_external(&g, &p, &eq, &g2).unwrap();
            let lc = member_loads_under_external(&g, &p, &eq, &combo).unwrap();
            let scale = lc.iter().chain(&lf).chain(&lg).fold(1e-12f64, |m, x| m.max(x.abs()));
            for i in 0..MEMBER_COUNT {
                prop_assert!((s * lf[i] + lg[i] - lc[i]).abs() <= 1e-10 * scale);
            }
        }
    }
}
