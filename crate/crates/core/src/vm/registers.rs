//! Unbounded register file.

use std::collections::BTreeMap;

use crate::ir::{RegisterRef, Scalar, ScalarType, Value};

use super::VmError;

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Scalar(Scalar),
    /// `elem` is `Some` while the array is homogeneous. `None` items are
    /// holes left by writes past the end.
    Array { elem: Option<ScalarType>, items: Vec<Option<Scalar>> },
}

/// Maps register index to value. Absent registers are undefined, and reading
/// one is an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegisterFile {
    slots: BTreeMap<u64, Slot>,
}

impl RegisterFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_defined(&self, index: u64) -> bool {
        self.slots.contains_key(&index)
    }

    /// Reads a whole register or one element of it.
    pub fn read(&self, r: RegisterRef) -> Result<Value, VmError> {
        let slot = self.slots.get(&r.index).ok_or(VmError::UndefinedRegister(r))?;
        match (slot, r.element) {
            (Slot::Scalar(s), None) => Ok(Value::Scalar(s.clone())),
            (Slot::Scalar(_), Some(_)) => {
                Err(VmError::TypeMismatch(format!("{} is a scalar and cannot be subscripted", RegisterRef::new(r.index))))
            }
            (Slot::Array { items, .. }, Some(e)) => usize::try_from(e)
                .ok()
                .and_then(|e| items.get(e))
                .and_then(Option::as_ref)
                .map(|s| Value::Scalar(s.clone()))
                .ok_or(VmError::UndefinedRegister(r)),
            (Slot::Array { elem, items }, None) => {
                let items = items
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.clone().ok_or(VmError::UndefinedRegister(RegisterRef::element(r.index, i as u64))))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(match elem {
                    Some(elem) => Value::ArrayHom { elem: *elem, items },
                    None => Value::ArrayHet(items),
                })
            }
        }
    }

    /// Writes a register. A subscripted write to an undefined or scalar
    /// register replaces it with a heterogeneous array grown to fit.
    pub fn write(&mut self, r: RegisterRef, value: Value) -> Result<(), VmError> {
        let Some(e) = r.element else {
            let slot = match value {
                Value::Scalar(s) => Slot::Scalar(s),
                Value::ArrayHom { elem, items } => {
                    Slot::Array { elem: Some(elem), items: items.into_iter().map(Some).collect() }
                }
                Value::ArrayHet(items) => Slot::Array { elem: None, items: items.into_iter().map(Some).collect() },
            };
            self.slots.insert(r.index, slot);
            return Ok(());
        };
        let Value::Scalar(s) = value else {
            return Err(VmError::TypeMismatch(format!("cannot store an array into element {r}")));
        };
        let e = usize::try_from(e).map_err(|_| VmError::TypeMismatch(format!("subscript of {r} too large")))?;
        let slot = self.slots.entry(r.index).or_insert(Slot::Array { elem: None, items: Vec::new() });
        if let Slot::Scalar(_) = slot {
            *slot = Slot::Array { elem: None, items: Vec::new() };
        }
        let Slot::Array { elem, items } = slot else { unreachable!() };
        if *elem != Some(s.scalar_type()) {
            *elem = None;
        }
        if items.len() <= e {
            items.resize(e + 1, None);
        }
        items[e] = Some(s);
        Ok(())
    }

    /// Reads a register as a vector of reals for the ML data path. Scalars
    /// count as one-element vectors.
    pub fn read_numeric(&self, r: RegisterRef) -> Result<Vec<f64>, VmError> {
        let not_numeric = |t: ScalarType| VmError::TypeMismatch(format!("{r} holds {t}, expected a number"));
        match self.read(r)? {
            Value::Scalar(s) => Ok(vec![s.as_f64().ok_or_else(|| not_numeric(s.scalar_type()))?]),
            Value::ArrayHom { items, .. } | Value::ArrayHet(items) => items
                .iter()
                .map(|s| s.as_f64().ok_or_else(|| not_numeric(s.scalar_type())))
                .collect(),
        }
    }

    /// Defined register indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.slots.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_reads_fail() {
        let rf = RegisterFile::new();
        assert_eq!(rf.read(RegisterRef::new(4)), Err(VmError::UndefinedRegister(RegisterRef::new(4))));
    }

    #[test]
    fn element_writes_grow_heterogeneous_arrays() {
        let mut rf = RegisterFile::new();
        rf.write(RegisterRef::element(1, 2), Value::float32(3.0)).unwrap();
        assert_eq!(rf.read(RegisterRef::element(1, 2)).unwrap(), Value::float32(3.0));
        // Holes read as undefined.
        assert_eq!(
            rf.read(RegisterRef::element(1, 0)),
            Err(VmError::UndefinedRegister(RegisterRef::element(1, 0)))
        );
        assert!(rf.read(RegisterRef::new(1)).is_err());
        assert!(rf.read(RegisterRef::element(1, 7)).is_err());
        rf.write(RegisterRef::element(1, 0), Value::int8(1)).unwrap();
        rf.write(RegisterRef::element(1, 1), Value::bool(true)).unwrap();
        assert_eq!(
            rf.read(RegisterRef::new(1)).unwrap(),
            Value::ArrayHet(vec![Scalar::Int8(1), Scalar::Bool(true), Scalar::Float32(3.0)])
        );
    }

    #[test]
    fn element_write_replaces_scalar() {
        let mut rf = RegisterFile::new();
        rf.write(RegisterRef::new(0), Value::int8(5)).unwrap();
        rf.write(RegisterRef::element(0, 0), Value::int8(6)).unwrap();
        assert_eq!(rf.read(RegisterRef::new(0)).unwrap(), Value::ArrayHet(vec![Scalar::Int8(6)]));
    }

    #[test]
    fn homogeneous_arrays_stay_homogeneous_on_matching_writes() {
        let mut rf = RegisterFile::new();
        let arr = Value::ArrayHom { elem: ScalarType::Int8, items: vec![Scalar::Int8(1), Scalar::Int8(2)] };
        rf.write(RegisterRef::new(0), arr).unwrap();
        rf.write(RegisterRef::element(0, 1), Value::int8(9)).unwrap();
        assert!(matches!(rf.read(RegisterRef::new(0)).unwrap(), Value::ArrayHom { .. }));
        rf.write(RegisterRef::element(0, 0), Value::bool(false)).unwrap();
        assert!(matches!(rf.read(RegisterRef::new(0)).unwrap(), Value::ArrayHet(_)));
    }

    #[test]
    fn numeric_view() {
        let mut rf = RegisterFile::new();
        rf.write(RegisterRef::element(1, 0), Value::float32(60.0)).unwrap();
        rf.write(RegisterRef::element(1, 1), Value::int16(1000)).unwrap();
        assert_eq!(rf.read_numeric(RegisterRef::new(1)).unwrap(), vec![60.0, 1000.0]);
        rf.write(RegisterRef::new(2), Value::text("x")).unwrap();
        assert!(matches!(rf.read_numeric(RegisterRef::new(2)), Err(VmError::TypeMismatch(_))));
        assert!(rf.write(RegisterRef::element(3, 0), Value::ArrayHet(vec![])).is_err());
    }
}
