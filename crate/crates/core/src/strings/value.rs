use std::fmt;

use serde::{Deserialize, Serialize};

/// Runtime value of the string DSL. Strings are byte sequences.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrValue {
    Str(Vec<u8>),
    Int(i64),
    Bool(bool),
    Undefined,
}

impl StrValue {
    pub fn str(s: &str) -> StrValue {
        StrValue::Str(s.as_bytes().to_vec())
    }

    pub fn sort(&self) -> Option<Sort> {
        match self {
            StrValue::Str(_) => Some(Sort::String),
            StrValue::Int(_) => Some(Sort::Int),
            StrValue::Bool(_) => Some(Sort::Bool),
            StrValue::Undefined => None,
        }
    }
}

impl fmt::Debug for StrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrValue::Str(s) => write!(f, "{:?}", String::from_utf8_lossy(s)),
            StrValue::Int(i) => write!(f, "{i}"),
            StrValue::Bool(b) => write!(f, "{b}"),
            StrValue::Undefined => write!(f, "undefined"),
        }
    }
}

impl fmt::Display for StrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrValue::Str(s) => write!(f, "{}", String::from_utf8_lossy(s)),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sort {
    String,
    Int,
    Bool,
}

impl Sort {
    pub fn parse(s: &str) -> Option<Sort> {
        match s {
            "String" | "string" | "S" => Some(Sort::String),
            "Int" | "int" | "I" => Some(Sort::Int),
            "Bool" | "bool" | "B" => Some(Sort::Bool),
            _ => None,
        }
    }

    pub fn smt_name(self) -> &'static str {
        match self {
            Sort::String => "String",
            Sort::Int => "Int",
            Sort::Bool => "Bool",
        }
    }
}

/// DSL operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrOp {
    Replace,
    Concat,
    Substr,
    IteStr,
    IteInt,
    IntToStr,
    At,
    Eq,
    Contains,
    SuffixOf,
    PrefixOf,
    StrToInt,
    Add,
    Sub,
    Length,
    IndexOf,
}

impl StrOp {
    /// Operator for a name in either SyGuS or short spelling, given the sort
    /// of the nonterminal it produces (to tell the two `ite`s apart).
    pub fn from_name(name: &str, result: Sort) -> Option<StrOp> {
        use StrOp::*;
        Some(match name {
            "str.replace" | "replace" => Replace,
            "str.++" | "concat" => Concat,
            "str.substr" | "substr" => Substr,
            "ite" if result == Sort::String => IteStr,
            "ite" if result == Sort::Int => IteInt,
            "int.to.str" | "str.from_int" | "str.from-int" => IntToStr,
            "str.at" | "at" => At,
            "=" => Eq,
            "str.contains" | "contains" => Contains,
            "str.suffixof" | "suffixof" => SuffixOf,
            "str.prefixof" | "prefixof" => PrefixOf,
            "str.to.int" | "str.to_int" | "str.to-int" => StrToInt,
            "+" => Add,
            "-" => Sub,
            "str.len" | "length" => Length,
            "str.indexof" | "indexof" => IndexOf,
            _ => return None,
        })
    }

    pub fn signature(self) -> (&'static [Sort], Sort) {
        use Sort::*;
        use StrOp::*;
        match self {
            Replace => (&[String, String, String], String),
            Concat => (&[String, String], String),
            Substr => (&[String, Int, Int], String),
            IteStr => (&[Bool, String, String], String),
            IteInt => (&[Bool, Int, Int], Int),
            IntToStr => (&[Int], String),
            At => (&[String, Int], String),
            Eq => (&[Int, Int], Bool),
            Contains | SuffixOf | PrefixOf => (&[String, String], Bool),
            StrToInt => (&[String], Int),
            Add | Sub => (&[Int, Int], Int),
            Length => (&[String], Int),
            IndexOf => (&[String, String, Int], Int),
        }
    }

    /// Short spelling used by the built-in union grammar.
    pub fn short_name(self) -> &'static str {
        use StrOp::*;
        match self {
            Replace => "replace",
            Concat => "concat",
            Substr => "substr",
            IteStr | IteInt => "ite",
            IntToStr => "int.to.str",
            At => "at",
            Eq => "=",
            Contains => "contains",
            SuffixOf => "suffixof",
            PrefixOf => "prefixof",
            StrToInt => "str.to.int",
            Add => "+",
            Sub => "-",
            Length => "length",
            IndexOf => "indexof",
        }
    }

    pub const ALL: [StrOp; 16] = {
        use StrOp::*;
        [
            Replace, Concat, Substr, IteStr, IntToStr, At, Eq, Contains, SuffixOf, PrefixOf,
            StrToInt, Add, Sub, Length, IteInt, IndexOf,
        ]
    };

    /// Total evaluation. Wrongly sorted arguments and undefined inputs give
    /// [`StrValue::Undefined`].
    pub fn eval(self, args: &[&StrValue]) -> StrValue {
        use StrValue::{Bool as B, Int as I, Str as S, Undefined as U};
        match (self, args) {
            (StrOp::Replace, [S(s), S(t), S(u)]) => S(replace(s, t, u)),
            (StrOp::Concat, [S(a), S(b)]) => S([a.as_slice(), b.as_slice()].concat()),
            (StrOp::Substr, [S(s), I(i), I(n)]) => S(substr(s, *i, *n)),
            (StrOp::IteStr | StrOp::IteInt, [B(c), a, b]) => {
                let v = if *c { *a } else { *b };
                v.clone()
            }
            (StrOp::IntToStr, [I(n)]) => S(if *n >= 0 { n.to_string().into_bytes() } else { Vec::new() }),
            (StrOp::At, [S(s), I(i)]) => S(substr(s, *i, 1)),
            (StrOp::Eq, [I(a), I(b)]) => B(a == b),
            (StrOp::Contains, [S(s), S(t)]) => B(find(s, t, 0).is_some()),
            (StrOp::SuffixOf, [S(a), S(b)]) => B(b.ends_with(a)),
            (StrOp::PrefixOf, [S(a), S(b)]) => B(b.starts_with(a)),
            (StrOp::StrToInt, [S(s)]) => str_to_int(s),
            (StrOp::Add, [I(a), I(b)]) => a.checked_add(*b).map_or(U, I),
            (StrOp::Sub, [I(a), I(b)]) => a.checked_sub(*b).map_or(U, I),
            (StrOp::Length, [S(s)]) => I(s.len() as i64),
            (StrOp::IndexOf, [S(s), S(t), I(i)]) => I(indexof(s, t, *i)),
            _ => U,
        }
    }
}

fn find(s: &[u8], t: &[u8], from: usize) -> Option<usize> {
    if from > s.len() {
        return None;
    }
    if t.is_empty() {
        return Some(from);
    }
    s[from..].windows(t.len()).position(|w| w == t).map(|p| p + from)
}

fn replace(s: &[u8], t: &[u8], u: &[u8]) -> Vec<u8> {
    match find(s, t, 0) {
        Some(p) => [&s[..p], u, &s[p + t.len()..]].concat(),
        None => s.to_vec(),
    }
}

fn substr(s: &[u8], i: i64, n: i64) -> Vec<u8> {
    let len = s.len() as i64;
    if i < 0 || i >= len || n <= 0 {
        return Vec::new();
    }
    let end = i.saturating_add(n).min(len);
    s[i as usize..end as usize].to_vec()
}

fn indexof(s: &[u8], t: &[u8], i: i64) -> i64 {
    if i < 0 || i > s.len() as i64 {
        return -1;
    }
    find(s, t, i as usize).map_or(-1, |p| p as i64)
}

fn str_to_int(s: &[u8]) -> StrValue {
    if s.is_empty() || !s.iter().all(u8::is_ascii_digit) {
        return StrValue::Int(-1);
    }
    let mut v: i64 = 0;
    for d in s {
        match v.checked_mul(10).and_then(|v| v.checked_add((d - b'0') as i64)) {
            Some(n) => v = n,
            None => return StrValue::Undefined,
        }
    }
    StrValue::Int(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use StrOp::*;

    fn s(x: &str) -> StrValue {
        StrValue::str(x)
    }
    fn i(x: i64) -> StrValue {
        StrValue::Int(x)
    }

    #[test]
    fn worked_cases() {
        assert_eq!(Concat.eval(&[&s("ab"), &s("cd")]), s("abcd"));
        assert_eq!(Substr.eval(&[&s("www.domain.com"), &i(11), &i(3)]), s("com"));
        assert_eq!(IndexOf.eval(&[&s("mail.net"), &s("."), &i(0)]), i(4));
        assert_eq!(IntToStr.eval(&[&i(-5)]), s(""));
    }

    #[test]
    fn edge_conventions() {
        assert_eq!(Substr.eval(&[&s("abc"), &i(3), &i(1)]), s(""));
        assert_eq!(Substr.eval(&[&s("abc"), &i(-1), &i(2)]), s(""));
        assert_eq!(Substr.eval(&[&s("abc"), &i(1), &i(-2)]), s(""));
        assert_eq!(Substr.eval(&[&s("abc"), &i(1), &i(i64::MAX)]), s("bc"));
        assert_eq!(At.eval(&[&s("abc"), &i(2)]), s("c"));
        assert_eq!(IndexOf.eval(&[&s("abc"), &s("z"), &i(0)]), i(-1));
        assert_eq!(IndexOf.eval(&[&s("abc"), &s("a"), &i(4)]), i(-1));
        assert_eq!(IndexOf.eval(&[&s("abc"), &s(""), &i(3)]), i(3));
        assert_eq!(StrToInt.eval(&[&s("12a")]), i(-1));
        assert_eq!(StrToInt.eval(&[&s("")]), i(-1));
        assert_eq!(StrToInt.eval(&[&s("99999999999999999999")]), StrValue::Undefined);
        assert_eq!(Replace.eval(&[&s("abc"), &s(""), &s("x")]), s("xabc"));
        assert_eq!(Replace.eval(&[&s("abab"), &s("b"), &s("")]), s("aab"));
        assert_eq!(Add.eval(&[&i(i64::MAX), &i(1)]), StrValue::Undefined);
        assert_eq!(PrefixOf.eval(&[&s("ab"), &s("abc")]), StrValue::Bool(true));
        assert_eq!(SuffixOf.eval(&[&s("ab"), &s("abc")]), StrValue::Bool(false));
    }

    #[test]
    fn undefined_propagates() {
        let u = StrValue::Undefined;
        for op in StrOp::ALL {
            let (args, _) = op.signature();
            let vals: Vec<StrValue> = args.iter().map(|_| u.clone()).collect();
            let refs: Vec<&StrValue> = vals.iter().collect();
            assert_eq!(op.eval(&refs), StrValue::Undefined, "{op:?}");
        }
    }
}
