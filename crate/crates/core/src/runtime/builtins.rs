use std::cmp::Ordering;

use super::value::{add, index, order, Value};
use crate::error::RuntimeError;

fn arity(name: &str, args: &[Value], min: usize, max: usize) -> Result<(), RuntimeError> {
    if args.len() < min || args.len() > max {
        let want = if min == max { min.to_string() } else { format!("{min} to {max}") };
        return Err(RuntimeError::type_error(format!("{name}() takes {want} arguments, got {}", args.len())));
    }
    Ok(())
}

fn type_err(name: &str, v: &Value) -> RuntimeError {
    RuntimeError::type_error(format!("{name}() does not accept {}", v.type_name()))
}

fn int_arg(name: &str, v: &Value) -> Result<i64, RuntimeError> {
    v.as_int().ok_or_else(|| type_err(name, v))
}

fn str_arg<'a>(name: &str, v: &'a Value) -> Result<&'a str, RuntimeError> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(type_err(name, other)),
    }
}

fn extreme(name: &str, args: &[Value], want: Ordering) -> Result<Value, RuntimeError> {
    let items = match args {
        [single] => single.iter_items().map_err(|_| type_err(name, single))?,
        many => many.to_vec(),
    };
    let mut it = items.into_iter();
    let mut best = it.next().ok_or_else(|| RuntimeError::new("ValueError", format!("{name}() of empty sequence")))?;
    for v in it {
        if order(name, &v, &best)? == want {
            best = v;
        }
    }
    Ok(best)
}

/// Calls builtin `name`. Callers check [`crate::lang::is_builtin`] first.
pub fn call(name: &str, args: Vec<Value>) -> Result<Value, RuntimeError> {
    let a = &args[..];
    match name {
        "abs" => {
            arity(name, a, 1, 1)?;
            match &a[0] {
                Value::Int(i) => i
                    .checked_abs()
                    .map(Value::Int)
                    .ok_or_else(|| RuntimeError::new("OverflowError", "integer overflow")),
                Value::Float(x) => Ok(Value::Float(x.abs())),
                other => Err(type_err(name, other)),
            }
        }
        "append" => {
            arity(name, a, 2, 2)?;
            add(&a[0], &Value::list(vec![a[1].clone()])).map_err(|_| type_err(name, &a[0]))
        }
        "push" => {
            arity(name, a, 2, 2)?;
            match &a[0] {
                Value::List(l) => {
                    l.write().push(a[1].clone());
                    Ok(Value::Null)
                }
                other => Err(type_err(name, other)),
            }
        }
        "pop" => {
            arity(name, a, 1, 2)?;
            match &a[0] {
                Value::List(l) => {
                    let mut l = l.write();
                    if l.is_empty() {
                        return Err(RuntimeError::new("IndexError", "pop from empty list"));
                    }
                    let i = match a.get(1) {
                        None => l.len() - 1,
                        Some(i) => {
                            let i = int_arg(name, i)?;
                            let j = if i < 0 { i + l.len() as i64 } else { i };
                            if j < 0 || j >= l.len() as i64 {
                                return Err(RuntimeError::new("IndexError", "pop index out of range"));
                            }
                            j as usize
                        }
                    };
                    Ok(l.remove(i))
                }
                other => Err(type_err(name, other)),
            }
        }
        "contains" => {
            arity(name, a, 2, 2)?;
            Ok(Value::Bool(match (&a[0], &a[1]) {
                (Value::List(l), x) => l.read().contains(x),
                (Value::Map(m), Value::Str(k)) => m.read().contains_key(&**k),
                (Value::Str(s), Value::Str(sub)) => s.contains(&**sub),
                (other, _) => return Err(type_err(name, other)),
            }))
        }
        "has" => {
            arity(name, a, 2, 2)?;
            match (&a[0], &a[1]) {
                (Value::Map(m), Value::Str(k)) => Ok(Value::Bool(m.read().contains_key(&**k))),
                (Value::List(l), Value::Int(i)) => {
                    let n = l.read().len() as i64;
                    Ok(Value::Bool(*i >= -n && *i < n))
                }
                (other, _) => Err(type_err(name, other)),
            }
        }
        "get" => {
            arity(name, a, 2, 3)?;
            match index(&a[0], &a[1]) {
                Ok(v) => Ok(v),
                Err(e) if e.tag == "KeyError" || e.tag == "IndexError" => Ok(a.get(2).cloned().unwrap_or(Value::Null)),
                Err(e) => Err(e),
            }
        }
        "float" => {
            arity(name, a, 1, 1)?;
            match &a[0] {
                Value::Int(i) => Ok(Value::Float(*i as f64)),
                Value::Float(x) => Ok(Value::Float(*x)),
                Value::Bool(b) => Ok(Value::Float(f64::from(u8::from(*b)))),
                Value::Str(s) => s
                    .trim()
                    .parse::<f64>()
                    .map(Value::Float)
                    .map_err(|_| RuntimeError::new("ValueError", format!("cannot parse {s:?} as float"))),
                other => Err(type_err(name, other)),
            }
        }
        "int" => {
            arity(name, a, 1, 1)?;
            match &a[0] {
                Value::Int(i) => Ok(Value::Int(*i)),
                Value::Float(x) if x.is_finite() && x.abs() < 9.2e18 => Ok(Value::Int(x.trunc() as i64)),
                Value::Bool(b) => Ok(Value::Int(i64::from(*b))),
                Value::Str(s) => s
                    .trim()
                    .parse::<i64>()
                    .map(Value::Int)
                    .map_err(|_| RuntimeError::new("ValueError", format!("cannot parse {s:?} as int"))),
                other => Err(type_err(name, other)),
            }
        }
        "str" => {
            arity(name, a, 1, 1)?;
            Ok(Value::str(&a[0].display()))
        }
        "join" => {
            arity(name, a, 2, 2)?;
            let sep = str_arg(name, &a[1])?;
            let parts: Vec<String> =
                a[0].iter_items().map_err(|_| type_err(name, &a[0]))?.iter().map(Value::display).collect();
            Ok(Value::str(&parts.join(sep)))
        }
        "split" => {
            arity(name, a, 2, 2)?;
            let s = str_arg(name, &a[0])?;
            let sep = str_arg(name, &a[1])?;
            if sep.is_empty() {
                return Err(RuntimeError::new("ValueError", "empty separator"));
            }
            Ok(Value::list(s.split(sep).map(Value::str).collect()))
        }
        "keys" | "values" => {
            arity(name, a, 1, 1)?;
            match &a[0] {
                Value::Map(m) => {
                    let m = m.read();
                    Ok(Value::list(if name == "keys" {
                        m.keys().map(|k| Value::str(k)).collect()
                    } else {
                        m.values().cloned().collect()
                    }))
                }
                other => Err(type_err(name, other)),
            }
        }
        "len" => {
            arity(name, a, 1, 1)?;
            let n = match &a[0] {
                Value::List(l) => l.read().len(),
                Value::Map(m) => m.read().len(),
                Value::Str(s) => s.chars().count(),
                other => return Err(type_err(name, other)),
            };
            Ok(Value::Int(n as i64))
        }
        "max" => extreme(name, a, Ordering::Greater),
        "min" => extreme(name, a, Ordering::Less),
        "range" => {
            arity(name, a, 1, 3)?;
            let ints: Vec<i64> = a.iter().map(|v| int_arg(name, v)).collect::<Result<_, _>>()?;
            let (start, stop, step) = match ints[..] {
                [stop] => (0, stop, 1),
                [start, stop] => (start, stop, 1),
                [start, stop, step] => (start, stop, step),
                _ => unreachable!(),
            };
            if step == 0 {
                return Err(RuntimeError::new("ValueError", "range() step must not be zero"));
            }
            let span = if step > 0 { stop.saturating_sub(start) } else { start.saturating_sub(stop) };
            if span / step.abs() > 10_000_000 {
                return Err(RuntimeError::new("ValueError", "range() too large"));
            }
            let mut out = Vec::new();
            let mut i = start;
            while (step > 0 && i < stop) || (step < 0 && i > stop) {
                out.push(Value::Int(i));
                i += step;
            }
            Ok(Value::list(out))
        }
        "sorted" => {
            arity(name, a, 1, 1)?;
            let mut items = a[0].iter_items().map_err(|_| type_err(name, &a[0]))?;
            let mut err = None;
            items.sort_by(|x, y| {
                order(name, x, y).unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    Ordering::Equal
                })
            });
            match err {
                Some(e) => Err(e),
                None => Ok(Value::list(items)),
            }
        }
        "sum" => {
            arity(name, a, 1, 1)?;
            let items = a[0].iter_items().map_err(|_| type_err(name, &a[0]))?;
            items.iter().try_fold(Value::Int(0), |acc, v| add(&acc, v).map_err(|_| type_err(name, v)))
        }
        other => Err(RuntimeError::new("NameError", format!("unknown builtin {other}"))),
    }
}
