//! Named multi-register layouts.
//!
//! A layout is an ordered list of named subsystems. Tensor indices are
//! big-endian over the declared order: the first register is the most
//! significant factor. Every operation that touches registers goes through
//! the index arithmetic here, so the convention lives in exactly one place.

use crate::error::{Error, Result};

/// One named subsystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered list of named subsystems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    regs: Vec<Register>,
}

impl RegisterLayout {
    /// Builds a layout; names must be unique and every dimension at least 2.
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let regs: Vec<Register> = regs
            .into_iter()
            .map(|(name, dim)| Register { name: name.into(), dim })
            .collect();
        for (i, r) in regs.iter().enumerate() {
            if r.dim < 2 {
                return Err(Error::LayoutConflict(format!(
                    "register `{}` has dimension {}, need at least 2",
                    r.name, r.dim
                )));
            }
            if regs[..i].iter().any(|p| p.name == r.name) {
                return Err(Error::LayoutConflict(format!("duplicate register `{}`", r.name)));
            }
        }
        Ok(Self { regs })
    }

    /// Layout of `n` qubits named `q0..q{n-1}`.
    pub fn qubits(n: usize) -> Self {
        Self::new((0..n).map(|i| (format!("q{i}"), 2))).expect("generated names are unique")
    }

    /// Single register layout.
    pub fn single(name: &str, dim: usize) -> Result<Self> {
        Self::new([(name, dim)])
    }

    pub fn len(&self) -> usize {
        self.regs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regs.is_empty()
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.regs.iter().map(|r| r.name.as_str())
    }

    pub fn total_dim(&self) -> usize {
        self.regs.iter().map(|r| r.dim).product()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.regs.iter().any(|r| r.name == name)
    }

    /// Position of a register in the declared order.
    pub fn position(&self, name: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.regs[self.position(name)?].dim)
    }

    /// Concatenation; fails on any shared register name.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        for r in &other.regs {
            if self.contains(&r.name) {
                return Err(Error::LayoutConflict(format!(
                    "register `{}` present on both sides of a tensor product",
                    r.name
                )));
            }
        }
        let mut regs = self.regs.clone();
        regs.extend(other.regs.iter().cloned());
        Ok(Self { regs })
    }

    /// Sub-layout of `keep`, preserving the declared order.
    pub fn subset(&self, keep: &[&str]) -> Result<Self> {
        for name in keep {
            self.position(name)?;
        }
        let regs = self
            .regs
            .iter()
            .filter(|r| keep.contains(&r.name.as_str()))
            .cloned()
            .collect();
        Ok(Self { regs })
    }

    pub fn rename(&mut self, old: &str, new: &str) -> Result<()> {
        if self.contains(new) && old != new {
            return Err(Error::LayoutConflict(format!("register `{new}` already exists")));
        }
        let pos = self.position(old)?;
        self.regs[pos].name = new.to_string();
        Ok(())
    }

    /// Big-endian strides for the declared order.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.regs.len()];
        for i in (0..self.regs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.regs[i + 1].dim;
        }
        strides
    }

    /// Splits a flat index into per-register indices.
    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.regs.len()];
        for i in (0..self.regs.len()).rev() {
            out[i] = index % self.regs[i].dim;
            index /= self.regs[i].dim;
        }
        out
    }

    /// Inverse of [`unravel`](Self::unravel).
    pub fn ravel(&self, parts: &[usize]) -> usize {
        debug_assert_eq!(parts.len(), self.regs.len());
        let mut idx = 0usize;
        for (i, &p) in parts.iter().enumerate() {
            debug_assert!(p < self.regs[i].dim);
            idx = idx * self.regs[i].dim + p;
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_register_names_are_representable() {
        let names = [
            "R1", "R2", "A1", "A2", "A11", "A12", "A21", "A22", "B1", "B2", "E1", "E2", "D1",
            "D2", "F", "G1", "G2", "H",
        ];
        let layout = RegisterLayout::new(names.map(|n| (n, 2))).unwrap();
        assert_eq!(layout.total_dim(), 1 << 18);
        for n in names {
            assert!(layout.contains(n));
        }
    }

    #[test]
    fn rejects_duplicates_and_small_dims() {
        assert!(RegisterLayout::new([("a", 2), ("a", 2)]).is_err());
        assert!(RegisterLayout::new([("a", 1)]).is_err());
    }

    #[test]
    fn big_endian_indexing() {
        let layout = RegisterLayout::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        assert_eq!(layout.total_dim(), 12);
        assert_eq!(layout.strides(), vec![6, 2, 1]);
        assert_eq!(layout.unravel(7), vec![1, 0, 1]);
        assert_eq!(layout.ravel(&[1, 0, 1]), 7);
        let sub = layout.subset(&["c", "a"]).unwrap();
        // Original order is preserved regardless of the order of `keep`.
        assert_eq!(sub.names().collect::<Vec<_>>(), vec!["a", "c"]);
    }
}
