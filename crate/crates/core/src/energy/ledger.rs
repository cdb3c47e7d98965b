use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A billed party: the data center / parameter server, or a device.
///
/// Serialized as the string `"center"` or as the device id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Center,
    Device(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Center => f.write_str("center"),
            Node::Device(k) => write!(f, "device {k}"),
        }
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Node::Center => s.serialize_str("center"),
            Node::Device(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NodeVisitor;

        impl Visitor<'_> for NodeVisitor {
            type Value = Node;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"center\" or a device id")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Node, E> {
                Ok(Node::Device(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Node, E> {
                usize::try_from(v)
                    .map(Node::Device)
                    .map_err(|_| E::custom("negative device id"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Node, E> {
                if v == "center" {
                    Ok(Node::Center)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(NodeVisitor)
    }
}

/// Energy category. Compute vs. the three communication legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Compute,
    Uplink,
    Downlink,
    Mesh,
}

impl Category {
    pub fn is_comm(self) -> bool {
        !matches!(self, Category::Compute)
    }
}

/// Per-node, per-category accumulator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger(BTreeMap<(Node, Category), f64>);

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, node: Node, category: Category, value: f64) {
        *self.0.entry((node, category)).or_insert(0.0) += value;
    }

    pub fn get(&self, node: Node, category: Category) -> f64 {
        self.0.get(&(node, category)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, Category, f64)> + '_ {
        self.0.iter().map(|(&(n, c), &v)| (n, c, v))
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        let mut last = None;
        self.0.keys().filter_map(move |&(n, _)| {
            if last == Some(n) {
                None
            } else {
                last = Some(n);
                Some(n)
            }
        })
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn node_total(&self, node: Node) -> f64 {
        self.iter().filter(|e| e.0 == node).map(|e| e.2).sum()
    }

    pub fn category_total(&self, category: Category) -> f64 {
        self.iter().filter(|e| e.1 == category).map(|e| e.2).sum()
    }

    /// Sum of compute entries on devices (`center == false`) or the center.
    pub fn compute_total(&self, center: bool) -> f64 {
        self.iter()
            .filter(|e| e.1 == Category::Compute && (e.0 == Node::Center) == center)
            .map(|e| e.2)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Energy split by role and category, plus the per-node ledger it came from.
///
/// Category fields are computed independently of `per_node`; the two agree
/// up to floating-point summation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub compute_device_j: f64,
    pub compute_center_j: f64,
    pub comm_up_j: f64,
    pub comm_down_j: f64,
    pub comm_mesh_j: f64,
    pub per_node_j: Ledger,
}

impl EnergyBreakdown {
    /// Category totals summed from a ledger.
    pub fn from_ledger(per_node_j: Ledger) -> Self {
        Self {
            compute_device_j: per_node_j.compute_total(false),
            compute_center_j: per_node_j.compute_total(true),
            comm_up_j: per_node_j.category_total(Category::Uplink),
            comm_down_j: per_node_j.category_total(Category::Downlink),
            comm_mesh_j: per_node_j.category_total(Category::Mesh),
            per_node_j,
        }
    }

    pub fn compute_j(&self) -> f64 {
        self.compute_device_j + self.compute_center_j
    }

    pub fn comm_j(&self) -> f64 {
        self.comm_up_j + self.comm_down_j + self.comm_mesh_j
    }

    pub fn total_j(&self) -> f64 {
        self.compute_j() + self.comm_j()
    }

    /// Category fields in a fixed order, for element-wise comparisons.
    pub fn categories(&self) -> [f64; 5] {
        [
            self.compute_device_j,
            self.compute_center_j,
            self.comm_up_j,
            self.comm_down_j,
            self.comm_mesh_j,
        ]
    }
}
