//! The PanScript value model. Lists and maps are shared mutable cells; every
//! other variant is immutable.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use serde_json::json;

use crate::error::RuntimeError;

pub type ListRef = Arc<RwLock<Vec<Value>>>;
pub type MapRef = Arc<RwLock<BTreeMap<String, Value>>>;

#[derive(Clone, Debug)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(Arc<str>),
    List(ListRef),
    Map(MapRef),
    FnRef(Arc<str>),
}

/// A numeric score or cost amount.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(x) => x,
        }
    }

    /// Integer addition saturates into float on overflow.
    pub fn to_json(self) -> serde_json::Value {
        match self {
            Num::Int(i) => json!(i),
            Num::Float(x) => json!(x),
        }
    }

    pub fn to_value(self) -> Value {
        match self {
            Num::Int(i) => Value::Int(i),
            Num::Float(x) => Value::Float(x),
        }
    }
}

/// Int + Int stays Int unless it overflows, which widens to Float.
impl std::ops::Add for Num {
    type Output = Num;

    fn add(self, other: Num) -> Num {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => a.checked_add(b).map_or(Num::Float(a as f64 + b as f64), Num::Int),
            (a, b) => Num::Float(a.as_f64() + b.as_f64()),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(Arc::new(RwLock::new(items)))
    }

    pub fn map(entries: BTreeMap<String, Value>) -> Value {
        Value::Map(Arc::new(RwLock::new(entries)))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Map(_) => "map",
            Value::FnRef(_) => "function",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Null => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Float(x) => *x != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::List(l) => !l.read().is_empty(),
            Value::Map(m) => !m.read().is_empty(),
            Value::FnRef(_) => true,
        }
    }

    pub fn as_num(&self) -> Option<Num> {
        match self {
            Value::Int(i) => Some(Num::Int(*i)),
            Value::Float(x) => Some(Num::Float(*x)),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Snapshot of the elements a `for` loop or `choose` iterates over.
    pub fn iter_items(&self) -> Result<Vec<Value>, RuntimeError> {
        match self {
            Value::List(l) => Ok(l.read().clone()),
            Value::Map(m) => Ok(m.read().keys().map(|k| Value::str(k)).collect()),
            Value::Str(s) => Ok(s.chars().map(|c| Value::str(c.encode_utf8(&mut [0; 4]))).collect()),
            other => Err(RuntimeError::new("NotIterable", format!("{} is not iterable", other.type_name()))),
        }
    }

    /// Ordering for ints, floats and strings; `None` for anything else.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (a, b) => a.as_num()?.as_f64().partial_cmp(&b.as_num()?.as_f64()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => json!(b),
            Value::Int(i) => json!(i),
            Value::Float(x) => json!(x),
            Value::Str(s) => json!(&**s),
            Value::List(l) => serde_json::Value::Array(l.read().iter().map(Value::to_json).collect()),
            Value::Map(m) => {
                serde_json::Value::Object(m.read().iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
            }
            Value::FnRef(name) => json!(&**name),
        }
    }

    /// Integers stay integers; any other JSON number becomes a float.
    pub fn from_json(j: &serde_json::Value) -> Value {
        match j {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
            },
            serde_json::Value::String(s) => Value::str(s),
            serde_json::Value::Array(a) => Value::list(a.iter().map(Value::from_json).collect()),
            serde_json::Value::Object(o) => {
                Value::map(o.iter().map(|(k, v)| (k.clone(), Value::from_json(v))).collect())
            }
        }
    }

    /// Text used by `str()` and string concatenation: strings print raw,
    /// everything else as compact JSON.
    pub fn display(&self) -> String {
        match self {
            Value::Str(s) => s.to_string(),
            other => other.to_json().to_string(),
        }
    }

    pub fn same_cell(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::List(a), Value::List(b)) => Arc::ptr_eq(a, b),
            (Value::Map(a), Value::Map(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Deep structural equality. Floats compare bit-exactly with each other and
/// numerically with ints.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Int(a), Value::Float(b)) | (Value::Float(b), Value::Int(a)) => *a as f64 == *b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::FnRef(a), Value::FnRef(b)) => a == b,
            (Value::List(a), Value::List(b)) => Arc::ptr_eq(a, b) || *a.read() == *b.read(),
            (Value::Map(a), Value::Map(b)) => Arc::ptr_eq(a, b) || *a.read() == *b.read(),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}

fn div_zero() -> RuntimeError {
    RuntimeError::new("DivZero", "division by zero")
}

fn overflow() -> RuntimeError {
    RuntimeError::new("OverflowError", "integer overflow")
}

fn bad_operands(op: &str, a: &Value, b: &Value) -> RuntimeError {
    RuntimeError::type_error(format!("unsupported operands for {op}: {} and {}", a.type_name(), b.type_name()))
}

pub fn add(a: &Value, b: &Value) -> Result<Value, RuntimeError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.checked_add(*y).map(Value::Int).ok_or_else(overflow),
        (Value::Str(x), Value::Str(y)) => Ok(Value::str(&format!("{x}{y}"))),
        (Value::List(x), Value::List(y)) => {
            let mut items = x.read().clone();
            items.extend(y.read().iter().cloned());
            Ok(Value::list(items))
        }
        _ => float_op("+", a, b, |x, y| Ok(x + y)),
    }
}

pub fn sub(a: &Value, b: &Value) -> Result<Value, RuntimeError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.checked_sub(*y).map(Value::Int).ok_or_else(overflow),
        _ => float_op("-", a, b, |x, y| Ok(x - y)),
    }
}

pub fn mul(a: &Value, b: &Value) -> Result<Value, RuntimeError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.checked_mul(*y).map(Value::Int).ok_or_else(overflow),
        _ => float_op("*", a, b, |x, y| Ok(x * y)),
    }
}

/// Integer division floors toward negative infinity.
pub fn div(a: &Value, b: &Value) -> Result<Value, RuntimeError> {
    match (a, b) {
        (Value::Int(_), Value::Int(0)) => Err(div_zero()),
        (Value::Int(x), Value::Int(y)) => {
            let q = x.checked_div(*y).ok_or_else(overflow)?;
            Ok(Value::Int(if (x % y != 0) && ((*x < 0) != (*y < 0)) { q - 1 } else { q }))
        }
        _ => float_op("/", a, b, |x, y| if y == 0.0 { Err(div_zero()) } else { Ok(x / y) }),
    }
}

/// Remainder takes the sign of the divisor.
pub fn rem(a: &Value, b: &Value) -> Result<Value, RuntimeError> {
    match (a, b) {
        (Value::Int(_), Value::Int(0)) => Err(div_zero()),
        (Value::Int(x), Value::Int(y)) => {
            let r = x.checked_rem(*y).ok_or_else(overflow)?;
            Ok(Value::Int(if r != 0 && ((r < 0) != (*y < 0)) { r + y } else { r }))
        }
        _ => float_op("%", a, b, |x, y| {
            if y == 0.0 {
                Err(div_zero())
            } else {
                let r = x % y;
                Ok(if r != 0.0 && ((r < 0.0) != (y < 0.0)) { r + y } else { r })
            }
        }),
    }
}

fn float_op(
    op: &str,
    a: &Value,
    b: &Value,
    f: impl Fn(f64, f64) -> Result<f64, RuntimeError>,
) -> Result<Value, RuntimeError> {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => f(x.as_f64(), y.as_f64()).map(Value::Float),
        _ => Err(bad_operands(op, a, b)),
    }
}

pub fn neg(a: &Value) -> Result<Value, RuntimeError> {
    match a {
        Value::Int(i) => i.checked_neg().map(Value::Int).ok_or_else(overflow),
        Value::Float(x) => Ok(Value::Float(-x)),
        other => Err(RuntimeError::type_error(format!("cannot negate {}", other.type_name()))),
    }
}

pub fn order(op: &str, a: &Value, b: &Value) -> Result<Ordering, RuntimeError> {
    a.compare(b).ok_or_else(|| bad_operands(op, a, b))
}

fn list_index(len: usize, idx: &Value) -> Result<usize, RuntimeError> {
    let i = idx
        .as_int()
        .ok_or_else(|| RuntimeError::type_error(format!("list index must be int, not {}", idx.type_name())))?;
    let j = if i < 0 { i + len as i64 } else { i };
    if j < 0 || j >= len as i64 {
        return Err(RuntimeError::new("IndexError", format!("index {i} out of range for length {len}")));
    }
    Ok(j as usize)
}

fn map_key(idx: &Value) -> Result<&str, RuntimeError> {
    match idx {
        Value::Str(s) => Ok(s),
        other => Err(RuntimeError::type_error(format!("map key must be str, not {}", other.type_name()))),
    }
}

pub fn index(base: &Value, idx: &Value) -> Result<Value, RuntimeError> {
    match base {
        Value::List(l) => {
            let l = l.read();
            Ok(l[list_index(l.len(), idx)?].clone())
        }
        Value::Map(m) => {
            let key = map_key(idx)?;
            m.read().get(key).cloned().ok_or_else(|| RuntimeError::new("KeyError", format!("key {key:?} not found")))
        }
        Value::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            Ok(Value::str(chars[list_index(chars.len(), idx)?].encode_utf8(&mut [0; 4])))
        }
        other => Err(RuntimeError::type_error(format!("{} is not indexable", other.type_name()))),
    }
}

pub fn set_index(base: &Value, idx: &Value, v: Value) -> Result<(), RuntimeError> {
    match base {
        Value::List(l) => {
            let mut l = l.write();
            let i = list_index(l.len(), idx)?;
            l[i] = v;
            Ok(())
        }
        Value::Map(m) => {
            let key = map_key(idx)?.to_string();
            m.write().insert(key, v);
            Ok(())
        }
        other => Err(RuntimeError::type_error(format!("{} does not support item assignment", other.type_name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(add(&1.into(), &2.into()).unwrap(), Value::Int(3));
        assert_eq!(div(&Value::Int(-7), &Value::Int(2)).unwrap(), Value::Int(-4));
        assert_eq!(rem(&Value::Int(-7), &Value::Int(2)).unwrap(), Value::Int(1));
        assert_eq!(div(&Value::Int(1), &Value::Int(0)).unwrap_err().tag, "DivZero");
        assert_eq!(add(&Value::Int(i64::MAX), &1.into()).unwrap_err().tag, "OverflowError");
        assert_eq!(add(&"a".into(), &"b".into()).unwrap(), Value::str("ab"));
        assert_eq!(add(&1.into(), &Value::Float(0.5)).unwrap(), Value::Float(1.5));
    }

    #[test]
    fn indexing() {
        let xs = Value::list(vec![1.into(), 2.into(), 3.into()]);
        assert_eq!(index(&xs, &Value::Int(-1)).unwrap(), Value::Int(3));
        assert_eq!(index(&xs, &Value::Int(5)).unwrap_err().tag, "IndexError");
        let m = Value::map(BTreeMap::new());
        assert_eq!(index(&m, &"k".into()).unwrap_err().tag, "KeyError");
        set_index(&m, &"k".into(), 1.into()).unwrap();
        assert_eq!(index(&m, &"k".into()).unwrap(), Value::Int(1));
    }

    #[test]
    fn equality_and_json() {
        let a = Value::list(vec![Value::Float(1.0), Value::str("x")]);
        let b = Value::list(vec![Value::Int(1), Value::str("x")]);
        assert_eq!(a, b);
        assert_ne!(Value::Float(0.0), Value::Float(-0.0));
        let j = serde_json::json!({"a": [1, 2.5, null, true, "s"]});
        assert_eq!(Value::from_json(&j).to_json(), j);
        assert!(matches!(Value::from_json(&serde_json::json!(3)), Value::Int(3)));
        assert!(matches!(Value::from_json(&serde_json::json!(3.0)), Value::Float(_)));
    }
}
