use std::collections::HashMap;

/// Decoded application event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppEvent {
    /// Items `a < b` of equal color both lie in structure `structure`.
    Pair { structure: usize, a: usize, b: usize },
    /// Item `item` lies in structures `i < j`.
    Shared { i: usize, j: usize, item: usize },
}

/// Index ↔ descriptor map for the two event families, plus the clique-cover
/// bookkeeping. Type-1 index = `structure · |pairs| + k`; type-2 index =
/// `type1_count + pair_rank(i, j) · items + item`.
#[derive(Debug, Clone)]
pub struct EventTable {
    structures: usize,
    items: usize,
    item_vertices: Vec<[u32; 2]>,
    pairs: Vec<(u32, u32)>,
    lookup: HashMap<(u32, u32), u32>,
    structure_pairs: Vec<(u32, u32)>,
    /// Per vertex: type-1 events of one structure whose items touch it.
    pair_degree: Vec<u32>,
    /// Per vertex: items touching it.
    incidence: Vec<u32>,
}

fn pair_rank(t: usize, i: usize, j: usize) -> usize {
    i * t - i * (i + 1) / 2 + (j - i - 1)
}

impl EventTable {
    /// `valid_pair(a, b)` filters same-colored pairs with positive probability.
    pub fn new(
        structures: usize,
        vertex_count: usize,
        item_vertices: Vec<[u32; 2]>,
        colors: &[u32],
        valid_pair: impl Fn(usize, usize) -> bool,
    ) -> Self {
        assert_eq!(item_vertices.len(), colors.len());
        let items = item_vertices.len();
        let mut classes: HashMap<u32, Vec<u32>> = HashMap::new();
        for (item, &c) in colors.iter().enumerate() {
            classes.entry(c).or_default().push(item as u32);
        }
        let mut pairs = Vec::new();
        for class in classes.values() {
            for (x, &a) in class.iter().enumerate() {
                for &b in &class[x + 1..] {
                    if valid_pair(a as usize, b as usize) {
                        pairs.push((a, b));
                    }
                }
            }
        }
        pairs.sort_unstable();
        let lookup = pairs.iter().enumerate().map(|(k, &p)| (p, k as u32)).collect();
        let structure_pairs =
            (0..structures).flat_map(|i| (i + 1..structures).map(move |j| (i as u32, j as u32))).collect();
        let mut pair_degree = vec![0u32; vertex_count];
        for &(a, b) in &pairs {
            let (vs, len) = union_vertices(&item_vertices[a as usize], &item_vertices[b as usize]);
            for &v in &vs[..len] {
                pair_degree[v as usize] += 1;
            }
        }
        let mut incidence = vec![0u32; vertex_count];
        for iv in &item_vertices {
            incidence[iv[0] as usize] += 1;
            incidence[iv[1] as usize] += 1;
        }
        Self { structures, items, item_vertices, pairs, lookup, structure_pairs, pair_degree, incidence }
    }

    pub fn structures(&self) -> usize {
        self.structures
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn type1_count(&self) -> usize {
        self.structures * self.pairs.len()
    }

    pub fn len(&self) -> usize {
        self.type1_count() + self.structure_pairs.len() * self.items
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self, e: usize) -> AppEvent {
        let m = self.pairs.len();
        if e < self.type1_count() {
            let (a, b) = self.pairs[e % m];
            AppEvent::Pair { structure: e / m, a: a as usize, b: b as usize }
        } else {
            let r = e - self.type1_count();
            let (i, j) = self.structure_pairs[r / self.items];
            AppEvent::Shared { i: i as usize, j: j as usize, item: r % self.items }
        }
    }

    /// Index of the type-1 event for items `a < b` in `structure`, if present.
    pub fn pair_index(&self, structure: usize, a: usize, b: usize) -> Option<usize> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.lookup.get(&(a as u32, b as u32)).map(|&k| structure * self.pairs.len() + k as usize)
    }

    pub fn shared_index(&self, i: usize, j: usize, item: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.type1_count() + pair_rank(self.structures, i, j) * self.items + item
    }

    fn structures_of(&self, e: usize) -> ([usize; 2], usize) {
        match self.decode(e) {
            AppEvent::Pair { structure, .. } => ([structure, 0], 1),
            AppEvent::Shared { i, j, .. } => ([i, j], 2),
        }
    }

    /// Distinct vertices touched by the event's items, ascending.
    pub fn vertices_of(&self, e: usize) -> ([u32; 4], usize) {
        match self.decode(e) {
            AppEvent::Pair { a, b, .. } => union_vertices(&self.item_vertices[a], &self.item_vertices[b]),
            AppEvent::Shared { item, .. } => {
                let [x, y] = self.item_vertices[item];
                ([x.min(y), x.max(y), 0, 0], 2)
            }
        }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let (sa, la) = self.structures_of(a);
        let (sb, lb) = self.structures_of(b);
        if !sa[..la].iter().any(|s| sb[..lb].contains(s)) {
            return false;
        }
        let (va, la) = self.vertices_of(a);
        let (vb, lb) = self.vertices_of(b);
        va[..la].iter().any(|v| vb[..lb].contains(v))
    }

    /// Upper bound on Y_{Γ⁺(e)} with every event weighted `y`. The cover uses
    /// two cliques per (structure of e, vertex of e): type-1 events of that
    /// structure touching the vertex, and type-2 events involving that
    /// structure whose item touches the vertex.
    pub fn clique_bound(&self, e: usize, y: f64) -> f64 {
        let (_, ls) = self.structures_of(e);
        let (vs, lv) = self.vertices_of(e);
        let others = self.structures.saturating_sub(1) as f64;
        let mut prod = 1.0;
        for _ in 0..ls {
            for &v in &vs[..lv] {
                prod *= 1.0 + self.pair_degree[v as usize] as f64 * y;
                prod *= 1.0 + self.incidence[v as usize] as f64 * others * y;
            }
        }
        prod
    }

    /// Whether `f` lies in the clique indexed by (`structure`, `vertex`, `shared`).
    pub fn in_clique(&self, f: usize, structure: usize, vertex: u32, shared: bool) -> bool {
        let (sf, lf) = self.structures_of(f);
        let is_shared = matches!(self.decode(f), AppEvent::Shared { .. });
        let (vf, lv) = self.vertices_of(f);
        is_shared == shared && sf[..lf].contains(&structure) && vf[..lv].contains(&vertex)
    }

    /// Cliques covering Γ⁺(e) as (structure, vertex, shared) triples.
    pub fn cliques_of(&self, e: usize) -> Vec<(usize, u32, bool)> {
        let (ss, ls) = self.structures_of(e);
        let (vs, lv) = self.vertices_of(e);
        let mut out = Vec::new();
        for &s in &ss[..ls] {
            for &v in &vs[..lv] {
                out.push((s, v, false));
                out.push((s, v, true));
            }
        }
        out
    }

    /// Largest type-1 clique size.
    pub fn max_pair_degree(&self) -> usize {
        self.pair_degree.iter().copied().max().unwrap_or(0) as usize
    }

    /// Largest type-2 clique size.
    pub fn max_shared_clique(&self) -> usize {
        self.incidence.iter().copied().max().unwrap_or(0) as usize * self.structures.saturating_sub(1)
    }
}

fn union_vertices(a: &[u32; 2], b: &[u32; 2]) -> ([u32; 4], usize) {
    let mut v = [a[0], a[1], b[0], b[1]];
    v.sort_unstable();
    let mut len = 1;
    for k in 1..4 {
        if v[k] != v[len - 1] {
            v[len] = v[k];
            len += 1;
        }
    }
    (v, len)
}
