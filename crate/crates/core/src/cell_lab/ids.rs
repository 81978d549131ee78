use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Micro,
    Meso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    Second,
}

/// Every auxiliary cell function. Micro symbols live on `Z`, meso symbols
/// (suffix `0`) on `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    // micro, first order
    R,
    O,
    T,
    // micro, second order
    T2,
    L,
    R2,
    D,
    PStar,
    /// The part of `A*` that does not involve meso gradients; the rest is
    /// `E*_{mα} ∂P⁰_m/∂y_α`, added at evaluation time.
    AStar,
    DStar,
    RStar,
    EStar,
    FStar,
    U,
    QStar,
    V,
    TStar,
    OStar,
    // meso, first order
    M0,
    P0,
    N0,
    // meso, second order
    A0,
    M0Pair,
    C0,
    B0,
    E0,
    F0,
    N0Pair,
    Z0,
    Q0,
    H0,
    W0,
    J0,
}

impl Symbol {
    pub const ALL: [Symbol; 33] = [
        Symbol::R,
        Symbol::O,
        Symbol::T,
        Symbol::T2,
        Symbol::L,
        Symbol::R2,
        Symbol::D,
        Symbol::PStar,
        Symbol::AStar,
        Symbol::DStar,
        Symbol::RStar,
        Symbol::EStar,
        Symbol::FStar,
        Symbol::U,
        Symbol::QStar,
        Symbol::V,
        Symbol::TStar,
        Symbol::OStar,
        Symbol::M0,
        Symbol::P0,
        Symbol::N0,
        Symbol::A0,
        Symbol::M0Pair,
        Symbol::C0,
        Symbol::B0,
        Symbol::E0,
        Symbol::F0,
        Symbol::N0Pair,
        Symbol::Z0,
        Symbol::Q0,
        Symbol::H0,
        Symbol::W0,
        Symbol::J0,
    ];

    pub fn scale(self) -> Scale {
        use Symbol::*;
        match self {
            M0 | P0 | N0 | A0 | M0Pair | C0 | B0 | E0 | F0 | N0Pair | Z0 | Q0 | H0 | W0 | J0 => Scale::Meso,
            _ => Scale::Micro,
        }
    }

    pub fn order(self) -> Order {
        use Symbol::*;
        match self {
            R | O | T | M0 | P0 | N0 => Order::First,
            _ => Order::Second,
        }
    }

    /// 1 for scalar (heat-type) problems, 2 for vector (elasticity) problems.
    pub fn ncomp(self) -> usize {
        use Symbol::*;
        match self {
            R | R2 | D | AStar | DStar | RStar | EStar | M0 | A0 | M0Pair | C0 | B0 | E0 => 1,
            _ => 2,
        }
    }

    /// Number of free tensor indices.
    pub fn arity(self) -> usize {
        use Symbol::*;
        match self {
            O | PStar | AStar | OStar | P0 | A0 => 0,
            R | D | RStar | FStar | QStar | V | M0 | F0 | Q0 | H0 | W0 => 1,
            T | L | R2 | DStar | EStar | TStar | N0 | M0Pair | C0 | B0 | E0 => 2,
            T2 | U | Z0 | N0Pair | J0 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        use Symbol::*;
        match self {
            R => "R",
            O => "O",
            T => "T",
            T2 => "T2",
            L => "L",
            R2 => "R2",
            D => "D",
            PStar => "Pstar",
            AStar => "Astar",
            DStar => "Dstar",
            RStar => "Rstar",
            EStar => "Estar",
            FStar => "Fstar",
            U => "U",
            QStar => "Qstar",
            V => "V",
            TStar => "Tstar",
            OStar => "Ostar",
            M0 => "M0",
            P0 => "P0",
            N0 => "N0",
            A0 => "A0",
            M0Pair => "M0pair",
            C0 => "C0",
            B0 => "B0",
            E0 => "E0",
            F0 => "F0",
            N0Pair => "N0pair",
            Z0 => "Z0",
            Q0 => "Q0",
            H0 => "H0",
            W0 => "W0",
            J0 => "J0",
        }
    }

    /// Every index tuple of this symbol, zero-based, padded to three slots.
    pub fn index_tuples(self) -> Vec<[u8; 3]> {
        match self.arity() {
            0 => vec![[0; 3]],
            1 => (0..2).map(|a| [a, 0, 0]).collect(),
            2 => (0..2).flat_map(|a| (0..2).map(move |b| [a, b, 0])).collect(),
            _ => (0..2).flat_map(|a| (0..2).flat_map(move |b| (0..2).map(move |c| [a, b, c]))).collect(),
        }
    }

    pub fn ids(self) -> impl Iterator<Item = CellProblemId> {
        self.index_tuples().into_iter().map(move |idx| CellProblemId { symbol: self, idx })
    }
}

/// One auxiliary cell problem: symbol plus zero-based tensor indices.
///
/// Index order follows the symbol's written form, e.g. `T^α_{·m}` is
/// `[α, m, 0]` and the direction index of macro-gradient problems comes last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellProblemId {
    pub symbol: Symbol,
    pub idx: [u8; 3],
}

impl CellProblemId {
    pub fn new(symbol: Symbol, idx: &[usize]) -> Self {
        debug_assert_eq!(idx.len(), symbol.arity());
        let mut i = [0u8; 3];
        for (slot, &v) in i.iter_mut().zip(idx) {
            *slot = v as u8;
        }
        CellProblemId { symbol, idx: i }
    }

    pub fn scale(&self) -> Scale {
        self.symbol.scale()
    }

    pub fn ncomp(&self) -> usize {
        self.symbol.ncomp()
    }

    /// File-friendly label, e.g. `T_1_2` with one-based indices.
    pub fn label(&self) -> String {
        let mut s = self.symbol.name().to_string();
        for &i in &self.idx[..self.symbol.arity()] {
            s.push('_');
            s.push_str(&(i + 1).to_string());
        }
        s
    }
}

impl fmt::Display for CellProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
