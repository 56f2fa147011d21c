//! Identifiers, the raw economy and the production network graph.

use alloc::{format, string::String, vec, vec::Vec};
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub const fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(index: usize) -> Self {
                Self(u32::try_from(index).expect("identifier exceeds u32 range"))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

dense_id!(
    /// A product classification. Dense within an economy.
    ProductId
);
dense_id!(
    /// An industry classification (primary classification only).
    IndustryId
);
dense_id!(FirmId);
dense_id!(EstablishmentId);
dense_id!(RegionId);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Establishment {
    pub id: EstablishmentId,
    pub firm: FirmId,
    pub region: RegionId,
    pub industry: IndustryId,
    /// Output products, sorted and non-empty.
    pub products: Vec<ProductId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firm {
    pub id: FirmId,
    /// Region of the headquarters record.
    pub region: RegionId,
    pub industry: IndustryId,
    pub establishments: Vec<EstablishmentId>,
}

/// Firms, their establishments and the firm-level trade relation.
///
/// Identifiers of every kind form the contiguous range `0..len`, and the
/// label tables define how many regions, industries and products exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Economy {
    pub firms: Vec<Firm>,
    pub establishments: Vec<Establishment>,
    /// Directed `(supplier, client)` pairs, sorted, without duplicates or self-links.
    pub firm_links: Vec<(FirmId, FirmId)>,
    pub region_labels: Vec<String>,
    pub industry_labels: Vec<String>,
    pub product_labels: Vec<String>,
}

impl Economy {
    /// Normalizes ordering (product sets, link list) and validates.
    pub fn new(
        firms: Vec<Firm>,
        mut establishments: Vec<Establishment>,
        mut firm_links: Vec<(FirmId, FirmId)>,
        region_labels: Vec<String>,
        industry_labels: Vec<String>,
        product_labels: Vec<String>,
    ) -> Result<Self> {
        for est in &mut establishments {
            est.products.sort_unstable();
            est.products.dedup();
        }
        firm_links.sort_unstable();
        let economy = Self { firms, establishments, firm_links, region_labels, industry_labels, product_labels };
        economy.validate()?;
        Ok(economy)
    }

    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn n_establishments(&self) -> usize {
        self.establishments.len()
    }

    pub fn n_products(&self) -> usize {
        self.product_labels.len()
    }

    pub fn n_industries(&self) -> usize {
        self.industry_labels.len()
    }

    pub fn n_regions(&self) -> usize {
        self.region_labels.len()
    }

    pub fn firm(&self, id: FirmId) -> &Firm {
        &self.firms[id.index()]
    }

    pub fn establishment(&self, id: EstablishmentId) -> &Establishment {
        &self.establishments[id.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidEconomy(msg));
        let (nr, ni, np) = (self.n_regions(), self.n_industries(), self.n_products());
        let mut owner = vec![None::<FirmId>; self.establishments.len()];
        for (i, firm) in self.firms.iter().enumerate() {
            if firm.id.index() != i {
                return bad(format!("firm at position {i} has id {}", firm.id));
            }
            if firm.region.index() >= nr || firm.industry.index() >= ni {
                return bad(format!("firm {i} has an unknown region or industry"));
            }
            if firm.establishments.is_empty() {
                return bad(format!("firm {i} has no establishments"));
            }
            for &e in &firm.establishments {
                let Some(slot) = owner.get_mut(e.index()) else {
                    return bad(format!("firm {i} lists unknown establishment {e}"));
                };
                if slot.is_some() {
                    return bad(format!("establishment {e} is listed more than once"));
                }
                *slot = Some(firm.id);
            }
        }
        for (i, est) in self.establishments.iter().enumerate() {
            if est.id.index() != i {
                return bad(format!("establishment at position {i} has id {}", est.id));
            }
            if owner[i] != Some(est.firm) {
                return bad(format!("establishment {i} is not listed by its firm {}", est.firm));
            }
            if est.region.index() >= nr || est.industry.index() >= ni {
                return bad(format!("establishment {i} has an unknown region or industry"));
            }
            if est.products.is_empty() {
                return bad(format!("establishment {i} has no output products"));
            }
            if !est.products.windows(2).all(|w| w[0] < w[1]) {
                return bad(format!("establishment {i} products are not sorted and unique"));
            }
            if est.products.last().is_some_and(|p| p.index() >= np) {
                return bad(format!("establishment {i} references an unknown product"));
            }
        }
        for w in self.firm_links.windows(2) {
            if w[0] >= w[1] {
                return bad(format!("firm link {:?} is duplicated or out of order", w[1]));
            }
        }
        for &(s, c) in &self.firm_links {
            if s == c {
                return bad(format!("self-link on firm {s}"));
            }
            if s.index() >= self.firms.len() || c.index() >= self.firms.len() {
                return bad(format!("firm link ({s}, {c}) references an unknown firm"));
            }
        }
        Ok(())
    }

    /// Supplier firms of every firm (in-lists of the firm link relation).
    pub fn supplier_firms(&self) -> Csr<FirmId> {
        let mut rows = vec![Vec::new(); self.firms.len()];
        for &(s, c) in &self.firm_links {
            rows[c.index()].push(s);
        }
        Csr::from_rows(rows)
    }

    /// Drops region, industry and product labels nobody references and
    /// renumbers the survivors in their original order.
    pub fn compact_labels(&self) -> Economy {
        fn remap(used: &[bool]) -> Vec<Option<u32>> {
            let mut next = 0u32;
            used.iter()
                .map(|&u| {
                    u.then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        }
        fn keep(labels: &[String], map: &[Option<u32>]) -> Vec<String> {
            labels.iter().zip(map).filter(|(_, m)| m.is_some()).map(|(l, _)| l.clone()).collect()
        }
        let mut regions = vec![false; self.n_regions()];
        let mut industries = vec![false; self.n_industries()];
        let mut products = vec![false; self.n_products()];
        for f in &self.firms {
            regions[f.region.index()] = true;
            industries[f.industry.index()] = true;
        }
        for e in &self.establishments {
            regions[e.region.index()] = true;
            industries[e.industry.index()] = true;
            for p in &e.products {
                products[p.index()] = true;
            }
        }
        let (rm, im, pm) = (remap(&regions), remap(&industries), remap(&products));
        let mut out = self.clone();
        for f in &mut out.firms {
            f.region = RegionId(rm[f.region.index()].unwrap());
            f.industry = IndustryId(im[f.industry.index()].unwrap());
        }
        for e in &mut out.establishments {
            e.region = RegionId(rm[e.region.index()].unwrap());
            e.industry = IndustryId(im[e.industry.index()].unwrap());
            for p in &mut e.products {
                *p = ProductId(pm[p.index()].unwrap());
            }
        }
        out.region_labels = keep(&self.region_labels, &rm);
        out.industry_labels = keep(&self.industry_labels, &im);
        out.product_labels = keep(&self.product_labels, &pm);
        out
    }
}

/// Compressed rows: `row(i)` is a slice into one shared buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Csr<T> {
    offsets: Vec<usize>,
    items: Vec<T>,
}

impl<T> Csr<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut items = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for row in rows {
            items.extend(row);
            offsets.push(items.len());
        }
        Self { offsets, items }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Offset of the first item of row `i` in the flat buffer.
    #[inline]
    pub fn row_start(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows()).map(move |i| self.row(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Firm,
    Establishment,
}

/// How a firm-level node obtains its output products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirmProductRule {
    /// The firm's primary industry, used as a pseudo-product.
    Industry,
    /// Union of the products of the firm's establishments.
    Union,
}

/// Per-node attributes handed to [`ProductionNetwork::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAttrs {
    pub outputs: Vec<ProductId>,
    pub region: RegionId,
    pub firm: FirmId,
    pub industry: IndustryId,
}

/// Directed supplier-to-client graph over firms or establishments.
///
/// Edges are stored twice: as out-lists sorted by client and as in-lists
/// sorted by supplier. Both describe the same set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionNetwork {
    kind: EntityKind,
    clients: Csr<u32>,
    suppliers: Csr<u32>,
    outputs: Csr<ProductId>,
    region: Vec<RegionId>,
    firm: Vec<FirmId>,
    industry: Vec<IndustryId>,
}

impl ProductionNetwork {
    /// Rejects empty output sets, self-loops, duplicate edges and
    /// out-of-range endpoints.
    pub fn new(kind: EntityKind, nodes: Vec<NodeAttrs>, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = nodes.len();
        let mut outputs = Vec::with_capacity(n);
        let mut region = Vec::with_capacity(n);
        let mut firm = Vec::with_capacity(n);
        let mut industry = Vec::with_capacity(n);
        for (i, mut node) in nodes.into_iter().enumerate() {
            node.outputs.sort_unstable();
            node.outputs.dedup();
            if node.outputs.is_empty() {
                return Err(Error::InvalidNetwork(format!("node {i} has no outputs")));
            }
            outputs.push(node.outputs);
            region.push(node.region);
            firm.push(node.firm);
            industry.push(node.industry);
        }
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidNetwork(format!("duplicate edge {:?}", w[0])));
            }
        }
        let mut out_rows = vec![Vec::new(); n];
        let mut in_rows = vec![Vec::new(); n];
        for &(s, c) in &edges {
            if s >= n || c >= n {
                return Err(Error::InvalidNetwork(format!("edge ({s}, {c}) out of range")));
            }
            if s == c {
                return Err(Error::InvalidNetwork(format!("self-loop on node {s}")));
            }
            out_rows[s].push(c as u32);
            in_rows[c].push(s as u32);
        }
        // Edges were sorted by (supplier, client), so in-lists are sorted by supplier too.
        Ok(Self {
            kind,
            clients: Csr::from_rows(out_rows),
            suppliers: Csr::from_rows(in_rows),
            outputs: Csr::from_rows(outputs),
            region,
            firm,
            industry,
        })
    }

    /// Establishment nodes (one per establishment, in id order) with the given edges.
    pub fn from_establishments(economy: &Economy, edges: Vec<(usize, usize)>) -> Result<Self> {
        let nodes = economy
            .establishments
            .iter()
            .map(|e| NodeAttrs { outputs: e.products.clone(), region: e.region, firm: e.firm, industry: e.industry })
            .collect();
        Self::new(EntityKind::Establishment, nodes, edges)
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.clients.items().len()
    }

    #[inline]
    pub fn clients(&self, v: usize) -> &[u32] {
        self.clients.row(v)
    }

    #[inline]
    pub fn suppliers(&self, v: usize) -> &[u32] {
        self.suppliers.row(v)
    }

    #[inline]
    pub fn outputs(&self, v: usize) -> &[ProductId] {
        self.outputs.row(v)
    }

    /// Flat index of `v`'s first out-edge; out-edges are numbered in
    /// `(supplier, client)` order.
    #[inline]
    pub fn client_edge_start(&self, v: usize) -> usize {
        self.clients.row_start(v)
    }

    pub fn region(&self, v: usize) -> RegionId {
        self.region[v]
    }

    pub fn firm(&self, v: usize) -> FirmId {
        self.firm[v]
    }

    pub fn industry(&self, v: usize) -> IndustryId {
        self.industry[v]
    }

    pub fn has_edge(&self, supplier: usize, client: usize) -> bool {
        self.clients(supplier).binary_search(&(client as u32)).is_ok()
    }

    /// All edges as `(supplier, client)`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |s| self.clients(s).iter().map(move |&c| (s, c as usize)))
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidNode { node: v, len: self.len() })
        }
    }

    /// Input products of `v`: the union of its suppliers' outputs, sorted.
    pub fn derive_inputs(&self, v: usize) -> Result<Vec<ProductId>> {
        self.check_node(v)?;
        let mut inputs: Vec<ProductId> =
            self.suppliers(v).iter().flat_map(|&j| self.outputs(j as usize).iter().copied()).collect();
        inputs.sort_unstable();
        inputs.dedup();
        Ok(inputs)
    }
}

/// The firm-level network: one node per firm, edges equal to the firm links.
pub fn firm_network_from(economy: &Economy, rule: FirmProductRule) -> ProductionNetwork {
    let nodes = economy
        .firms
        .iter()
        .map(|f| {
            let outputs = match rule {
                FirmProductRule::Industry => vec![ProductId(f.industry.0)],
                FirmProductRule::Union => {
                    f.establishments.iter().flat_map(|&e| economy.establishment(e).products.iter().copied()).collect()
                }
            };
            NodeAttrs { outputs, region: f.region, firm: f.id, industry: f.industry }
        })
        .collect();
    let edges = economy.firm_links.iter().map(|&(s, c)| (s.index(), c.index())).collect();
    ProductionNetwork::new(EntityKind::Firm, nodes, edges)
        .expect("a validated economy always yields a valid firm network")
}
