//! Link budget model: log-distance path loss with lognormal shadowing, mapped
//! onto LoRa spreading factors and their connection costs.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, KeyValues};
use crate::graph::{Link, VisibilityGraph};
use crate::topo::Topology;

/// LoRa spreading factor, 7 through 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SpreadingFactor(u8);

impl SpreadingFactor {
    pub const SF7: Self = Self(7);
    pub const SF8: Self = Self(8);
    pub const SF9: Self = Self(9);
    pub const SF10: Self = Self(10);
    pub const SF11: Self = Self(11);
    pub const SF12: Self = Self(12);

    /// All spreading factors in ascending order.
    pub const ALL: [Self; 6] = [
        Self::SF7,
        Self::SF8,
        Self::SF9,
        Self::SF10,
        Self::SF11,
        Self::SF12,
    ];

    pub const fn new(value: u8) -> Option<Self> {
        if value >= 7 && value <= 12 {
            Some(Self(value))
        } else {
            None
        }
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    /// Position in [`SpreadingFactor::ALL`].
    pub const fn index(self) -> usize {
        (self.0 - 7) as usize
    }

    pub const fn cost(self) -> LinkCost {
        link_cost(self)
    }
}

impl TryFrom<u8> for SpreadingFactor {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value).ok_or_else(|| format!("spreading factor {value} outside 7..=12"))
    }
}

impl From<SpreadingFactor> for u8 {
    fn from(sf: SpreadingFactor) -> u8 {
        sf.0
    }
}

impl fmt::Display for SpreadingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SF{}", self.0)
    }
}

/// Connection cost as an exact dyadic rational, stored in units of 1/32.
///
/// SF7 costs one unit and every step up doubles it, so SF12 is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkCost(u8);

impl LinkCost {
    /// Number of cost units in 1.0.
    pub const UNITS_PER_ONE: u64 = 32;

    pub const fn units(self) -> u64 {
        self.0 as u64
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::UNITS_PER_ONE as f64
    }
}

impl fmt::Display for LinkCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

/// Cost of a link at the given spreading factor: 1 / 2^(12 - sf).
pub const fn link_cost(sf: SpreadingFactor) -> LinkCost {
    LinkCost(1 << (sf.0 - 7))
}

/// Parameters of the log-distance path loss model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationParams {
    pub tx_power_dbm: f64,
    /// Path loss at the reference distance `d0`, in dB.
    pub pl0_dbm: f64,
    /// Reference distance in meters.
    pub d0: f64,
    /// Path loss exponent.
    pub gamma: f64,
    pub shadowing_sigma_db: f64,
    /// Receiver sensitivity per spreading factor, indexed SF7..=SF12.
    pub sensitivity_dbm: [f64; 6],
}

/// Receiver sensitivities of a 125 kHz LoRa transceiver, SF7..=SF12.
pub const DEFAULT_SENSITIVITY_DBM: [f64; 6] = [-123.0, -126.0, -129.0, -132.0, -134.5, -137.0];

impl Default for PropagationParams {
    /// Ground-level station-to-station links in a built-up area: 868 MHz free
    /// space loss at 1 m followed by an urban decay exponent of 3.8.
    fn default() -> Self {
        Self {
            tx_power_dbm: 14.0,
            pl0_dbm: 31.5,
            d0: 1.0,
            gamma: 3.8,
            shadowing_sigma_db: 4.0,
            sensitivity_dbm: DEFAULT_SENSITIVITY_DBM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("d0 must be positive, got {0}")]
    ReferenceDistance(f64),
    #[error("gamma must be positive, got {0}")]
    Exponent(f64),
    #[error("shadowing_sigma_db must be non-negative, got {0}")]
    Shadowing(f64),
    #[error("sensitivities must strictly decrease from SF7 to SF12")]
    SensitivityOrder,
}

const SENSITIVITY_KEYS: [&str; 6] = [
    "sensitivity_dbm.7",
    "sensitivity_dbm.8",
    "sensitivity_dbm.9",
    "sensitivity_dbm.10",
    "sensitivity_dbm.11",
    "sensitivity_dbm.12",
];

impl PropagationParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let scalars = [
            ("tx_power_dbm", self.tx_power_dbm),
            ("pl0_dbm", self.pl0_dbm),
            ("d0", self.d0),
            ("gamma", self.gamma),
            ("shadowing_sigma_db", self.shadowing_sigma_db),
        ];
        for (field, value) in scalars {
            if !value.is_finite() {
                return Err(ParamsError::NotFinite { field, value });
            }
        }
        for value in self.sensitivity_dbm {
            if !value.is_finite() {
                return Err(ParamsError::NotFinite {
                    field: "sensitivity_dbm",
                    value,
                });
            }
        }
        if self.d0 <= 0.0 {
            return Err(ParamsError::ReferenceDistance(self.d0));
        }
        if self.gamma <= 0.0 {
            return Err(ParamsError::Exponent(self.gamma));
        }
        if self.shadowing_sigma_db < 0.0 {
            return Err(ParamsError::Shadowing(self.shadowing_sigma_db));
        }
        if self.sensitivity_dbm.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ParamsError::SensitivityOrder);
        }
        Ok(())
    }

    pub fn sensitivity(&self, sf: SpreadingFactor) -> f64 {
        self.sensitivity_dbm[sf.index()]
    }

    /// Overrides fields from `key=value` pairs whose keys match the field names.
    /// Sensitivities use `sensitivity_dbm.<sf>`. Unknown keys are left for the
    /// caller; see [`PropagationParams::KEYS`].
    pub fn apply_config(&mut self, config: &KeyValues) -> Result<(), ConfigError> {
        if let Some(v) = config.get_f64("tx_power_dbm")? {
            self.tx_power_dbm = v;
        }
        if let Some(v) = config.get_f64("pl0_dbm")? {
            self.pl0_dbm = v;
        }
        if let Some(v) = config.get_f64("d0")? {
            self.d0 = v;
        }
        if let Some(v) = config.get_f64("gamma")? {
            self.gamma = v;
        }
        if let Some(v) = config.get_f64("shadowing_sigma_db")? {
            self.shadowing_sigma_db = v;
        }
        for (slot, key) in self.sensitivity_dbm.iter_mut().zip(SENSITIVITY_KEYS) {
            if let Some(v) = config.get_f64(key)? {
                *slot = v;
            }
        }
        self.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Every key understood by [`PropagationParams::apply_config`].
    pub const KEYS: [&'static str; 11] = [
        "tx_power_dbm",
        "pl0_dbm",
        "d0",
        "gamma",
        "shadowing_sigma_db",
        SENSITIVITY_KEYS[0],
        SENSITIVITY_KEYS[1],
        SENSITIVITY_KEYS[2],
        SENSITIVITY_KEYS[3],
        SENSITIVITY_KEYS[4],
        SENSITIVITY_KEYS[5],
    ];

    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let config = KeyValues::parse(text)?;
        config.reject_unknown(&Self::KEYS)?;
        let mut params = Self::default();
        params.apply_config(&config)?;
        Ok(params)
    }

    /// Renders the parameters as `key=value` lines accepted by
    /// [`PropagationParams::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("tx_power_dbm={}\n", self.tx_power_dbm));
        out.push_str(&format!("pl0_dbm={}\n", self.pl0_dbm));
        out.push_str(&format!("d0={}\n", self.d0));
        out.push_str(&format!("gamma={}\n", self.gamma));
        out.push_str(&format!("shadowing_sigma_db={}\n", self.shadowing_sigma_db));
        for (key, value) in SENSITIVITY_KEYS.iter().zip(self.sensitivity_dbm) {
            out.push_str(&format!("{key}={value}\n"));
        }
        out
    }
}

/// Received power in dBm at `distance` meters with an additive shadowing loss.
/// Distances below `d0` are clamped to `d0`.
pub fn received_power(distance: f64, shadowing_db: f64, params: &PropagationParams) -> f64 {
    let d = distance.max(params.d0);
    let path_loss = params.pl0_dbm + 10.0 * params.gamma * (d / params.d0).log10();
    params.tx_power_dbm - (path_loss + shadowing_db)
}

/// Smallest spreading factor whose sensitivity is met, or `None` when even
/// SF12 cannot close the link.
pub fn sf_for_link(
    distance: f64,
    shadowing_db: f64,
    params: &PropagationParams,
) -> Option<SpreadingFactor> {
    sf_for_power(received_power(distance, shadowing_db, params), params)
}

fn sf_for_power(power_dbm: f64, params: &PropagationParams) -> Option<SpreadingFactor> {
    SpreadingFactor::ALL
        .into_iter()
        .find(|&sf| power_dbm >= params.sensitivity(sf))
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Shadowing loss in dB for the unordered pair `{a, b}`.
///
/// The value depends only on `(seed, min(a, b), max(a, b))`, so it is the same
/// in both directions and independent of evaluation order.
pub fn pair_shadowing(seed: u64, a: usize, b: usize, sigma_db: f64) -> f64 {
    if sigma_db == 0.0 {
        return 0.0;
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let key = mix64(seed ^ mix64(((lo as u64) << 32) ^ (hi as u64) ^ 0x005e_ed0f_5ad0));
    let mut rng = SplitMix64::seed_from_u64(key);
    let z: f64 = rng.sample(StandardNormal);
    sigma_db * z
}

/// Builds the visibility graph over all node pairs. Pairs are evaluated in
/// parallel; the result is identical to a serial build.
pub fn build_visibility_graph(
    topology: &Topology,
    params: &PropagationParams,
    seed: u64,
) -> VisibilityGraph {
    let nodes = topology.nodes();
    let adjacency: Vec<Vec<Link>> = nodes
        .par_iter()
        .enumerate()
        .map(|(u, a)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(w, _)| w != u)
                .filter_map(|(w, b)| {
                    let distance = (a.x - b.x).hypot(a.y - b.y);
                    let shadowing = pair_shadowing(seed, u, w, params.shadowing_sigma_db);
                    sf_for_link(distance, shadowing, params).map(|sf| Link::new(w, sf))
                })
                .collect()
        })
        .collect();
    VisibilityGraph::from_sorted_adjacency(adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::Node;

    fn reference_params() -> PropagationParams {
        PropagationParams {
            tx_power_dbm: 14.0,
            pl0_dbm: 31.5,
            d0: 1.0,
            gamma: 3.0,
            shadowing_sigma_db: 0.0,
            sensitivity_dbm: DEFAULT_SENSITIVITY_DBM,
        }
    }

    #[test]
    fn power_at_reference_distance() {
        let p = reference_params();
        assert_eq!(received_power(p.d0, 0.0, &p), -17.5);
        // clamped below d0
        assert_eq!(received_power(0.0, 0.0, &p), -17.5);
    }

    #[test]
    fn shadowing_is_additive() {
        let p = reference_params();
        let a = received_power(1234.0, 0.0, &p);
        let b = received_power(1234.0, 10.0, &p);
        assert!((a - b - 10.0).abs() < 1e-12);
    }

    #[test]
    fn power_at_four_km() {
        // 14 - 31.5 - 30 * log10(4000), evaluated by hand: -125.5618
        let p = reference_params();
        assert!((received_power(4000.0, 0.0, &p) - -125.5618).abs() < 0.05);
        assert_eq!(sf_for_link(4000.0, 0.0, &p), Some(SpreadingFactor::SF8));
    }

    #[test]
    fn link_extremes() {
        let p = reference_params();
        assert_eq!(sf_for_link(p.d0, 0.0, &p), Some(SpreadingFactor::SF7));
        assert_eq!(sf_for_link(1_000_000.0, 0.0, &p), None);
    }

    #[test]
    fn threshold_tie_is_reachable() {
        let mut p = reference_params();
        p.sensitivity_dbm = [-17.5, -20.0, -30.0, -40.0, -50.0, -60.0];
        assert_eq!(sf_for_link(1.0, 0.0, &p), Some(SpreadingFactor::SF7));
        p.sensitivity_dbm = [-10.0, -17.5, -30.0, -40.0, -50.0, -60.0];
        assert_eq!(sf_for_link(1.0, 0.0, &p), Some(SpreadingFactor::SF8));
    }

    #[test]
    fn cost_table() {
        let units: Vec<u64> = SpreadingFactor::ALL
            .iter()
            .map(|sf| sf.cost().units())
            .collect();
        assert_eq!(units, vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(link_cost(SpreadingFactor::SF7).as_f64(), 1.0 / 32.0);
        assert_eq!(link_cost(SpreadingFactor::SF10).as_f64(), 0.25);
        assert_eq!(link_cost(SpreadingFactor::SF12).as_f64(), 1.0);
    }

    #[test]
    fn sf_bounds() {
        assert!(SpreadingFactor::new(6).is_none());
        assert!(SpreadingFactor::new(13).is_none());
        assert_eq!(SpreadingFactor::new(9).unwrap().index(), 2);
    }

    #[test]
    fn validation() {
        assert!(PropagationParams::default().validate().is_ok());
        let p = PropagationParams {
            d0: 0.0,
            ..PropagationParams::default()
        };
        assert_eq!(p.validate(), Err(ParamsError::ReferenceDistance(0.0)));
        let mut p = PropagationParams::default();
        p.sensitivity_dbm[3] = -120.0;
        assert_eq!(p.validate(), Err(ParamsError::SensitivityOrder));
        let p = PropagationParams {
            shadowing_sigma_db: -1.0,
            ..PropagationParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn config_round_trip() {
        let mut p = PropagationParams {
            gamma: 3.25,
            ..PropagationParams::default()
        };
        p.sensitivity_dbm[5] = -140.0;
        let parsed = PropagationParams::from_config_str(&p.to_config_string()).unwrap();
        assert_eq!(parsed, p);
        assert!(PropagationParams::from_config_str("bogus=1\n").is_err());
        assert!(PropagationParams::from_config_str("gamma=-1\n").is_err());
    }

    #[test]
    fn pair_shadowing_is_symmetric_and_seeded() {
        let a = pair_shadowing(7, 3, 11, 4.0);
        assert_eq!(a, pair_shadowing(7, 11, 3, 4.0));
        assert_ne!(a, pair_shadowing(8, 3, 11, 4.0));
        assert_eq!(pair_shadowing(7, 3, 11, 0.0), 0.0);
    }

    #[test]
    fn colocated_pair_links_at_sf7() {
        let topo = Topology::from_nodes(vec![Node::new(0, 5.0, 5.0), Node::new(1, 5.0, 5.0)]);
        let g = build_visibility_graph(&topo, &reference_params(), 0);
        assert_eq!(g.edge_count(), 1);
        let link = g.neighbors(0).unwrap()[0];
        assert_eq!(link.sf(), SpreadingFactor::SF7);
        assert_eq!(link.cost().as_f64(), 1.0 / 32.0);
    }

    #[test]
    fn single_node_has_no_edges() {
        let topo = Topology::from_nodes(vec![Node::new(0, 1.0, 2.0)]);
        let g = build_visibility_graph(&topo, &reference_params(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn line_of_five_matches_pairwise_thresholds() {
        // Frozen from direct evaluation of the log-distance formula:
        // 3 km -> SF7, 6 km -> SF10, 9 km -> SF12, 12 km -> no link.
        let xs = [0.0, 3000.0, 6000.0, 9000.0, 12000.0];
        let topo = Topology::from_nodes(
            xs.iter()
                .enumerate()
                .map(|(i, &x)| Node::new(i, x, 0.0))
                .collect(),
        );
        let g = build_visibility_graph(&topo, &reference_params(), 42);
        let expected = |gap: usize| match gap {
            1 => Some(7),
            2 => Some(10),
            3 => Some(12),
            _ => None,
        };
        for u in 0..5 {
            for w in 0..5 {
                if u == w {
                    continue;
                }
                let got = g.link(u, w).map(|sf| sf.value());
                assert_eq!(got, expected(u.abs_diff(w)), "pair ({u},{w})");
            }
        }
    }

    #[test]
    fn monotone_in_distance_without_shadowing() {
        let p = PropagationParams {
            shadowing_sigma_db: 0.0,
            ..PropagationParams::default()
        };
        let mut last = Some(SpreadingFactor::SF7);
        for step in 0..2000 {
            let sf = sf_for_link(step as f64 * 5.0, 0.0, &p);
            match (last, sf) {
                (Some(a), Some(b)) => assert!(b >= a),
                (None, Some(_)) => panic!("link reappeared at {step}"),
                _ => {}
            }
            last = sf;
        }
    }
}
