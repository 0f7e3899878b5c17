use super::{characteristic_size, make_facet, Facet, Mesh, MeshError};
use crate::Vec2;
use std::collections::{BTreeMap, HashMap};

/// Duplicate every node shared by elements of different regions so each region owns its copy.
///
/// Element numbering is unchanged. Returns the split mesh and, per new node, its source node.
pub fn split_by_regions(mesh: &Mesh) -> (Mesh, Vec<usize>) {
    let mut node_regions: Vec<Vec<u32>> = vec![Vec::new(); mesh.nodes.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        for &n in el.nodes() {
            if !node_regions[n].contains(&mesh.regions[e]) {
                node_regions[n].push(mesh.regions[e]);
            }
        }
    }
    let mut nodes = mesh.nodes.clone();
    let mut origin: Vec<usize> = (0..mesh.nodes.len()).collect();
    let mut copy_of: HashMap<(usize, u32), usize> = HashMap::new();
    for (n, regs) in node_regions.iter_mut().enumerate() {
        regs.sort_unstable();
        for (k, &r) in regs.iter().enumerate() {
            let id = if k == 0 {
                n
            } else {
                nodes.push(mesh.nodes[n]);
                origin.push(n);
                nodes.len() - 1
            };
            copy_of.insert((n, r), id);
        }
    }
    let mut elements = mesh.elements.clone();
    for (e, el) in elements.iter_mut().enumerate() {
        for n in el.nodes_mut() {
            *n = copy_of[&(*n, mesh.regions[e])];
        }
    }
    let boundary_tags = remap_tags(&mesh.boundary_tags, &origin);
    let out = Mesh { nodes, elements, regions: mesh.regions.clone(), boundary_tags };
    (out, origin)
}

fn remap_tags(tags: &BTreeMap<String, Vec<usize>>, origin: &[usize]) -> BTreeMap<String, Vec<usize>> {
    let mut copies: Vec<Vec<usize>> = vec![Vec::new(); origin.len()];
    for (new, &old) in origin.iter().enumerate() {
        copies[old].push(new);
    }
    tags.iter()
        .map(|(k, ids)| {
            let mut v: Vec<usize> = ids.iter().flat_map(|&i| copies[i].iter().copied()).collect();
            v.sort_unstable();
            (k.clone(), v)
        })
        .collect()
}

/// Cut the mesh open along the segment `a`–`b`, which must run along element edges.
///
/// Nodes on the segment shared by elements on both sides are duplicated; elements on the
/// right of `a → b` keep the original node, elements on the left get the copy.
pub fn split_fitted_interface(mesh: &Mesh, a: Vec2, b: Vec2) -> Result<Mesh, MeshError> {
    let len = (b - a).norm();
    if !(len > 0.0) {
        return Err(MeshError::InvalidInput("interface segment has zero length".into()));
    }
    let h = characteristic_size(mesh)?;
    let tol = 1e-10 * h;
    let t = (b - a) / len;
    let normal = Vec2::new(t.y, -t.x);
    let signed = |p: &Vec2| (p - a).dot(&normal);
    let on_segment = |p: &Vec2| {
        let s = (p - a).dot(&t);
        signed(p).abs() <= tol && s >= -tol && s <= len + tol
    };
    let mut side = vec![0i8; mesh.elements.len()];
    let mut touches = false;
    for (e, el) in mesh.elements.iter().enumerate() {
        let (mut pos, mut neg) = (false, false);
        for &n in el.nodes() {
            let p = &mesh.nodes[n];
            let s = signed(p);
            pos |= s > tol;
            neg |= s < -tol;
            let along = (p - a).dot(&t);
            touches |= s.abs() <= tol && along > tol && along < len - tol;
        }
        let along_c = (mesh.element_centroid(e) - a).dot(&t);
        if pos && neg && along_c > 0.0 && along_c < len {
            return Err(MeshError::InvalidInput(format!("element {e} is cut by the interface")));
        }
        side[e] = if signed(&mesh.element_centroid(e)) > 0.0 { 1 } else { -1 };
    }
    if !touches {
        return Err(MeshError::InvalidInput("interface does not lie on mesh edges".into()));
    }
    let mut has_left = vec![false; mesh.nodes.len()];
    let mut has_right = vec![false; mesh.nodes.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        for &n in el.nodes() {
            if side[e] < 0 {
                has_right[n] = true;
            } else {
                has_left[n] = true;
            }
        }
    }
    let mut nodes = mesh.nodes.clone();
    let mut origin: Vec<usize> = (0..mesh.nodes.len()).collect();
    let mut copy = vec![usize::MAX; mesh.nodes.len()];
    for n in 0..mesh.nodes.len() {
        if has_left[n] && has_right[n] && on_segment(&mesh.nodes[n]) {
            copy[n] = nodes.len();
            nodes.push(mesh.nodes[n]);
            origin.push(n);
        }
    }
    let mut elements = mesh.elements.clone();
    for (e, el) in elements.iter_mut().enumerate() {
        if side[e] < 0 {
            for n in el.nodes_mut() {
                if copy[*n] != usize::MAX {
                    *n = copy[*n];
                }
            }
        }
    }
    let boundary_tags = remap_tags(&mesh.boundary_tags, &origin);
    Ok(Mesh { nodes, elements, regions: mesh.regions.clone(), boundary_tags })
}

/// Pairs of boundary edges of different elements that coincide geometrically.
///
/// These are the cohesive seams of a split mesh. Orientation follows [`make_facet`].
pub fn coincident_facets(mesh: &Mesh) -> Result<Vec<Facet>, MeshError> {
    let h = characteristic_size(mesh)?;
    let tol = 1e-9 * h;
    let cell = 1e-6 * h;
    let key = |p: Vec2| ((p.x / cell).round() as i64, (p.y / cell).round() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    let edges = mesh.boundary_edges();
    for &(e, k) in &edges {
        let (a, b) = mesh.elements[e].edge(k);
        let mid = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
        buckets.entry(key(mid)).or_default().push((e, k));
    }
    let mut used = vec![false; edges.len()];
    let index: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, &ek)| (ek, i)).collect();
    let mut out = Vec::new();
    for (i, &(e, k)) in edges.iter().enumerate() {
        if used[i] {
            continue;
        }
        let (a, b) = mesh.elements[e].edge(k);
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let mid = 0.5 * (pa + pb);
        let (kx, ky) = key(mid);
        let mut partner = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for &(e2, k2) in buckets.get(&(kx + dx, ky + dy)).map(Vec::as_slice).unwrap_or(&[]) {
                    let j = index[&(e2, k2)];
                    if j == i || used[j] || e2 == e {
                        continue;
                    }
                    let (c, d) = mesh.elements[e2].edge(k2);
                    if (mesh.nodes[c] - pb).norm() <= tol && (mesh.nodes[d] - pa).norm() <= tol {
                        partner = Some(j);
                        break 'search;
                    }
                }
            }
        }
        if let Some(j) = partner {
            used[i] = true;
            used[j] = true;
            out.push(make_facet(mesh, (e, k), edges[j]));
        }
    }
    Ok(out)
}

/// Number of connected components of the element–node graph.
pub fn connected_components(mesh: &Mesh) -> usize {
    let mut parent: Vec<usize> = (0..mesh.nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for el in &mesh.elements {
        let ns = el.nodes();
        for &n in &ns[1..] {
            let (ra, rb) = (find(&mut parent, ns[0]), find(&mut parent, n));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut used = vec![false; mesh.nodes.len()];
    for el in &mesh.elements {
        used[el.nodes()[0]] = true;
    }
    let mut roots: Vec<usize> = (0..mesh.nodes.len()).filter(|&n| used[n]).map(|n| find(&mut parent, n)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}
