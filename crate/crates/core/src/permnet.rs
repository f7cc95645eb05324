//! Self-routing Beneš permutation network.
//!
//! A network for `2^n` endpoints has `2n - 1` layers of `2^(n-1)` two-by-two
//! switches. Layer `k` pairs the endpoints whose indices differ only in bit
//! `b_k`, with `b = 0, 1, …, n-1, …, 1, 0`: a butterfly followed by its
//! mirror image, sharing the middle layer.
//!
//! Qubit reorderings only ever need *bit-permute* permutations (the
//! destination index is the source index with its bits relocated). Those are
//! routed by inspecting destination tags alone: every switch whose upper
//! input carries a tag with bit `b_k` set is crossed. In the second half each
//! switch must then see two tags that disagree in `b_k`; any conflict, or a
//! tag that fails to arrive home, means the permutation is outside the
//! self-routable class and routing is refused.

use std::fmt::Write as _;

use thiserror::Error;

use crate::qstate::{QubitOrdering, N_MAX};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitRange { qubit: usize, n: usize },
    #[error("pair ordering requires distinct qubits, got {0} twice")]
    DuplicateQubit(usize),
    #[error("orderings disagree on qubit count ({0} vs {1})")]
    Mismatch(usize, usize),
    #[error("network size {0} outside 1..={N_MAX}")]
    Size(usize),
    #[error("vector length {got} does not match {expected} endpoints")]
    Length { expected: usize, got: usize },
    #[error("permutation is not self-routable (not a bit-permute map)")]
    Unsupported,
    #[error("network wiring does not connect every endpoint pair")]
    Disconnected,
}

/// Ordering in which qubit `i` sits at bit 0 (and `j`, if given, at bit 1).
/// The remaining qubits keep their current relative order in the higher bits.
pub fn target_ordering(current: &QubitOrdering, i: usize, j: Option<usize>) -> Result<QubitOrdering, PermError> {
    let n = current.n();
    for q in std::iter::once(i).chain(j) {
        if q >= n {
            return Err(PermError::QubitRange { qubit: q, n });
        }
    }
    if j == Some(i) {
        return Err(PermError::DuplicateQubit(i));
    }
    let mut positions = vec![0u8; n];
    let mut next = 0u8;
    let mut place = |q: usize, positions: &mut Vec<u8>| {
        positions[q] = next;
        next += 1;
    };
    place(i, &mut positions);
    if let Some(j) = j {
        place(j, &mut positions);
    }
    for bit in 0..n {
        let q = current.qubit_at(bit);
        if q != i && Some(q) != j {
            place(q, &mut positions);
        }
    }
    Ok(QubitOrdering::from_positions(positions).expect("constructed as a permutation"))
}

/// Relocation of index bits from one qubit ordering to another.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexMap {
    source: QubitOrdering,
    target: QubitOrdering,
}

impl IndexMap {
    pub fn new(source: QubitOrdering, target: QubitOrdering) -> Result<Self, PermError> {
        if source.n() != target.n() {
            return Err(PermError::Mismatch(source.n(), target.n()));
        }
        Ok(Self { source, target })
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn source(&self) -> &QubitOrdering {
        &self.source
    }

    pub fn target(&self) -> &QubitOrdering {
        &self.target
    }

    pub fn inverse(&self) -> Self {
        Self { source: self.target.clone(), target: self.source.clone() }
    }

    /// Destination of a single source index.
    pub fn map_index(&self, src: usize) -> usize {
        (0..self.n()).fold(0, |acc, k| {
            let bit = (src >> self.source.position(k)) & 1;
            acc | (bit << self.target.position(k))
        })
    }

    /// `dest[src]` for every index; a bijection on `[0, 2^n)`.
    pub fn index_permutation(&self) -> Vec<usize> {
        (0..1usize << self.n()).map(|s| self.map_index(s)).collect()
    }
}

/// Wiring of a Beneš network: the index bit each layer switches on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenesNetwork {
    n: usize,
    layer_bits: Vec<u8>,
}

impl BenesNetwork {
    pub fn new(n: usize) -> Result<Self, PermError> {
        if !(1..=N_MAX).contains(&n) {
            return Err(PermError::Size(n));
        }
        let layer_bits = (0..n as u8).chain((0..n.saturating_sub(1) as u8).rev()).collect();
        let net = Self { n, layer_bits };
        net.check_connectivity()?;
        Ok(net)
    }

    /// Endpoint `x` reaches exactly `x ⊕ span(layer bits)`, so full
    /// connectivity holds iff every index bit is switched by some layer.
    fn check_connectivity(&self) -> Result<(), PermError> {
        let mask = self.layer_bits.iter().fold(0usize, |m, &b| m | (1 << b));
        if mask == (1 << self.n) - 1 {
            Ok(())
        } else {
            Err(PermError::Disconnected)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn endpoints(&self) -> usize {
        1 << self.n
    }

    pub fn layer_count(&self) -> usize {
        self.layer_bits.len()
    }

    pub fn switches_per_layer(&self) -> usize {
        1 << (self.n - 1)
    }

    pub fn layer_bits(&self) -> &[u8] {
        &self.layer_bits
    }

    /// Endpoints `(upper, lower)` joined by `switch` in a layer on `bit`.
    #[inline]
    fn switch_ports(bit: usize, switch: usize) -> (usize, usize) {
        let low = switch & ((1 << bit) - 1);
        let x = ((switch >> bit) << (bit + 1)) | low;
        (x, x | (1 << bit))
    }

    /// Switch settings realizing `map`.
    pub fn route(&self, map: &IndexMap) -> Result<SwitchSettings, PermError> {
        if map.n() != self.n {
            return Err(PermError::Mismatch(map.n(), self.n));
        }
        self.route_permutation(&map.index_permutation())
    }

    /// Self-route an explicit permutation given as `dest[src]`.
    ///
    /// Only bit-permute permutations are guaranteed to route; anything the
    /// destination-tag rule cannot deliver is rejected with
    /// [`PermError::Unsupported`].
    pub fn route_permutation(&self, dest: &[usize]) -> Result<SwitchSettings, PermError> {
        let size = self.endpoints();
        if dest.len() != size {
            return Err(PermError::Length { expected: size, got: dest.len() });
        }
        let mut tags: Vec<usize> = dest.to_vec();
        let mut settings = SwitchSettings::all_pass(self);
        let half = self.n - 1;
        for (layer, &bit) in self.layer_bits.iter().enumerate() {
            let bit = bit as usize;
            for s in 0..self.switches_per_layer() {
                let (x, y) = Self::switch_ports(bit, s);
                let want_x = (tags[x] >> bit) & 1;
                if layer >= half && want_x == (tags[y] >> bit) & 1 {
                    return Err(PermError::Unsupported);
                }
                if want_x == 1 {
                    settings.set_cross(layer, s);
                    tags.swap(x, y);
                }
            }
        }
        if tags.iter().enumerate().any(|(p, &t)| p != t) {
            return Err(PermError::Unsupported);
        }
        Ok(settings)
    }

    /// Permuted copy of `v`.
    pub fn apply<T: Copy>(&self, settings: &SwitchSettings, v: &[T]) -> Result<Vec<T>, PermError> {
        let mut out = v.to_vec();
        self.apply_in_place(settings, &mut out)?;
        Ok(out)
    }

    pub fn apply_in_place<T>(&self, settings: &SwitchSettings, v: &mut [T]) -> Result<(), PermError> {
        self.check_len(v.len())?;
        for layer in 0..self.layer_count() {
            self.run_layer(settings, layer, v);
        }
        Ok(())
    }

    /// Undo [`apply_in_place`](Self::apply_in_place): each layer is an
    /// involution, so running the layers backwards inverts the network.
    pub fn apply_inverse_in_place<T>(&self, settings: &SwitchSettings, v: &mut [T]) -> Result<(), PermError> {
        self.check_len(v.len())?;
        for layer in (0..self.layer_count()).rev() {
            self.run_layer(settings, layer, v);
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<(), PermError> {
        if len == self.endpoints() {
            Ok(())
        } else {
            Err(PermError::Length { expected: self.endpoints(), got: len })
        }
    }

    #[inline]
    fn run_layer<T>(&self, settings: &SwitchSettings, layer: usize, v: &mut [T]) {
        if !settings.active[layer] {
            return;
        }
        let bit = self.layer_bits[layer] as usize;
        let words = &settings.bits[layer];
        for (w, &word) in words.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let s = w * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                let (x, y) = Self::switch_ports(bit, s);
                v.swap(x, y);
            }
        }
    }
}

/// One pass/cross bit per switch, per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchSettings {
    switches: usize,
    bits: Vec<Vec<u64>>,
    active: Vec<bool>,
}

impl SwitchSettings {
    pub fn all_pass(net: &BenesNetwork) -> Self {
        let switches = net.switches_per_layer();
        let words = switches.div_ceil(64);
        Self { switches, bits: vec![vec![0; words]; net.layer_count()], active: vec![false; net.layer_count()] }
    }

    fn set_cross(&mut self, layer: usize, switch: usize) {
        self.bits[layer][switch / 64] |= 1 << (switch % 64);
        self.active[layer] = true;
    }

    pub fn is_cross(&self, layer: usize, switch: usize) -> bool {
        (self.bits[layer][switch / 64] >> (switch % 64)) & 1 == 1
    }

    pub fn layer_count(&self) -> usize {
        self.bits.len()
    }

    pub fn is_all_pass(&self) -> bool {
        !self.active.iter().any(|&a| a)
    }

    pub fn cross_count(&self) -> usize {
        self.bits.iter().flatten().map(|w| w.count_ones() as usize).sum()
    }

    /// One line per layer: the layer index and its switch bits in hex,
    /// switch 0 in the least significant bit.
    pub fn dump(&self) -> String {
        let digits = self.switches.div_ceil(4);
        let mut out = String::new();
        for (layer, words) in self.bits.iter().enumerate() {
            let mut hex = String::new();
            for w in words.iter().rev() {
                let _ = write!(hex, "{w:016x}");
            }
            let hex = &hex[hex.len() - digits..];
            let _ = writeln!(out, "{layer:02} {hex}");
        }
        out
    }
}

/// Move `v` from the `from` ordering to the `to` ordering through a freshly
/// routed network.
pub fn reorder<T>(v: &mut [T], from: &QubitOrdering, to: &QubitOrdering) -> Result<(), PermError> {
    let map = IndexMap::new(from.clone(), to.clone())?;
    let net = BenesNetwork::new(map.n())?;
    let settings = net.route(&map)?;
    net.apply_in_place(&settings, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ord(p: &[u8]) -> QubitOrdering {
        QubitOrdering::from_positions(p.to_vec()).unwrap()
    }

    #[test]
    fn target_ordering_examples() {
        let id = QubitOrdering::identity(3);
        assert_eq!(target_ordering(&id, 0, None).unwrap(), id);
        assert_eq!(target_ordering(&id, 2, None).unwrap(), ord(&[1, 2, 0]));
        assert_eq!(target_ordering(&id, 1, Some(2)).unwrap(), ord(&[2, 0, 1]));
        assert_eq!(target_ordering(&id, 3, None), Err(PermError::QubitRange { qubit: 3, n: 3 }));
        assert_eq!(target_ordering(&id, 1, Some(1)), Err(PermError::DuplicateQubit(1)));
    }

    #[test]
    fn target_ordering_keeps_relative_order_from_current() {
        // Current: qubit 0 at bit 2, qubit 1 at bit 0, qubit 2 at bit 1.
        let cur = ord(&[2, 0, 1]);
        // Moving qubit 0 down: qubits 1 and 2 keep their order (1 below 2).
        assert_eq!(target_ordering(&cur, 0, None).unwrap(), ord(&[0, 1, 2]));
        assert_eq!(target_ordering(&cur, 2, None).unwrap(), ord(&[2, 1, 0]));
    }

    #[test]
    fn index_permutation_examples() {
        let id = QubitOrdering::identity(3);
        let m = IndexMap::new(id.clone(), id.clone()).unwrap();
        assert_eq!(m.index_permutation(), (0..8).collect::<Vec<_>>());

        let id2 = QubitOrdering::identity(2);
        let t = target_ordering(&id2, 1, None).unwrap();
        let m = IndexMap::new(id2, t).unwrap();
        let net = BenesNetwork::new(2).unwrap();
        let s = net.route(&m).unwrap();
        assert_eq!(net.apply(&s, &["a0", "a1", "a2", "a3"]).unwrap(), ["a0", "a2", "a1", "a3"]);

        let t = target_ordering(&id, 2, None).unwrap();
        assert_eq!(IndexMap::new(id.clone(), t).unwrap().map_index(4), 1);

        assert_eq!(IndexMap::new(QubitOrdering::identity(2), id), Err(PermError::Mismatch(2, 3)));
    }

    #[test]
    fn network_shape() {
        let net = BenesNetwork::new(1).unwrap();
        assert_eq!(net.layer_count(), 1);
        assert_eq!(net.switches_per_layer(), 1);
        for n in 2..=N_MAX {
            let net = BenesNetwork::new(n).unwrap();
            assert_eq!(net.layer_count(), 2 * n - 1);
            assert_eq!(net.switches_per_layer(), 1 << (n - 1));
        }
        assert!(BenesNetwork::new(0).is_err());
        assert!(BenesNetwork::new(N_MAX + 1).is_err());
        let broken = BenesNetwork { n: 3, layer_bits: vec![0, 1, 1, 0] };
        assert_eq!(broken.check_connectivity(), Err(PermError::Disconnected));
    }

    #[test]
    fn switch_ports_cover_each_layer_once() {
        for n in 1..=6 {
            for bit in 0..n {
                let mut hit = vec![false; 1 << n];
                for s in 0..1 << (n - 1) {
                    let (x, y) = BenesNetwork::switch_ports(bit, s);
                    assert_eq!(x ^ y, 1 << bit);
                    assert!(!hit[x] && !hit[y]);
                    hit[x] = true;
                    hit[y] = true;
                }
            }
        }
    }

    #[test]
    fn identity_routes_to_all_pass() {
        for n in 1..=8 {
            let net = BenesNetwork::new(n).unwrap();
            let id = QubitOrdering::identity(n);
            let s = net.route(&IndexMap::new(id.clone(), id).unwrap()).unwrap();
            assert!(s.is_all_pass());
            let v: Vec<usize> = (0..1 << n).collect();
            assert_eq!(net.apply(&s, &v).unwrap(), v);
        }
    }

    #[test]
    fn rejects_non_bit_permute() {
        let net = BenesNetwork::new(2).unwrap();
        // A 3-cycle on indices 1, 3, 2 defeats the destination-tag rule.
        assert_eq!(net.route_permutation(&[0, 2, 3, 1]), Err(PermError::Unsupported));
        // Some general permutations still route; those must be delivered exactly.
        let rot = [1, 2, 3, 0];
        let s = net.route_permutation(&rot).unwrap();
        let mut out = [0usize; 4];
        for (src, v) in net.apply(&s, &[0, 1, 2, 3]).unwrap().into_iter().enumerate() {
            out[src] = v;
        }
        for (src, &d) in rot.iter().enumerate() {
            assert_eq!(out[d], src);
        }
        assert!(matches!(net.route_permutation(&[0, 1]), Err(PermError::Length { .. })));
        let v = [1, 2, 3];
        assert!(net.apply(&SwitchSettings::all_pass(&net), &v).is_err());
    }

    #[test]
    fn dump_one_line_per_layer() {
        let net = BenesNetwork::new(3).unwrap();
        let id = QubitOrdering::identity(3);
        let t = target_ordering(&id, 2, None).unwrap();
        let s = net.route(&IndexMap::new(id, t).unwrap()).unwrap();
        let dump = s.dump();
        assert_eq!(dump.lines().count(), 5);
        assert!(dump.lines().all(|l| l.len() == 3 + 1));
    }

    fn ordering_strategy(max_n: usize) -> impl Strategy<Value = QubitOrdering> {
        (1..=max_n)
            .prop_flat_map(|n| Just((0..n as u8).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|p| QubitOrdering::from_positions(p).unwrap())
    }

    proptest! {
        #[test]
        fn route_matches_index_oracle(
            (a, b) in ordering_strategy(8).prop_flat_map(|a| {
                let n = a.n();
                (Just(a), Just((0..n as u8).collect::<Vec<_>>()).prop_shuffle())
            })
        ) {
            let b = QubitOrdering::from_positions(b).unwrap();
            let map = IndexMap::new(a, b).unwrap();
            let net = BenesNetwork::new(map.n()).unwrap();
            let settings = net.route(&map).unwrap();
            let v: Vec<u32> = (0..1u32 << map.n()).map(|x| x.wrapping_mul(2654435761)).collect();
            let out = net.apply(&settings, &v).unwrap();
            let dest = map.index_permutation();
            for (src, &d) in dest.iter().enumerate() {
                prop_assert_eq!(out[d], v[src]);
            }
            let mut back = out.clone();
            net.apply_inverse_in_place(&settings, &mut back).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn composition_needs_no_intermediate_restore(
            a in ordering_strategy(7),
            picks in proptest::collection::vec((0usize..7, 0usize..7), 1..6),
        ) {
            let n = a.n();
            let mut cur = a.clone();
            let mut v: Vec<usize> = (0..1 << n).collect();
            for &(i, j) in &picks {
                let (i, j) = (i % n, j % n);
                let j = (n > 1 && j != i).then_some(j);
                let next = target_ordering(&cur, i, j).unwrap();
                reorder(&mut v, &cur, &next).unwrap();
                cur = next;
            }
            // The composed map a -> cur moves element at src to map(src).
            let composed = IndexMap::new(a, cur).unwrap();
            for (src, &d) in composed.index_permutation().iter().enumerate() {
                prop_assert_eq!(v[d], src);
            }
        }
    }
}
