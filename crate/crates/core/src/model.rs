//! Named-perspective relational schemas, instances and values.
//!
//! Attribute names carry the global total order realized as byte-wise
//! lexicographic order on their text, so the named and unnamed views of a
//! relation always agree. Values are untyped atoms; labeled nulls live in a
//! namespace of their own, disjoint from the atom domain, and only ever
//! appear in chase outputs and conditional instances, never in ground data.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

macro_rules! interned_name {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: impl AsRef<str>) -> Self {
                Self(Arc::from(s.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self::new(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

interned_name! {
    /// An attribute name, totally ordered byte-wise.
    AttrName
}

interned_name! {
    /// A relation name.
    RelName
}

/// A domain element: an atom identified by its canonical text, or a labeled
/// null. Atoms and nulls never compare equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Atom(Arc<str>),
    Null(u64),
}

impl Value {
    pub fn atom(s: impl AsRef<str>) -> Self {
        Value::Atom(Arc::from(s.as_ref()))
    }

    /// Canonical form of an integer literal.
    pub fn int(n: i128) -> Self {
        Value::atom(n.to_string())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null(_))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            Value::Null(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(s) => {
                if !s.is_empty()
                    && s.bytes().all(|b| b.is_ascii_digit())
                    && (s.len() == 1 || !s.starts_with('0'))
                {
                    write!(f, "{s}")
                } else {
                    write!(f, "\"")?;
                    for c in s.chars() {
                        match c {
                            '"' => write!(f, "\\\"")?,
                            '\\' => write!(f, "\\\\")?,
                            '\n' => write!(f, "\\n")?,
                            c => write!(f, "{c}")?,
                        }
                    }
                    write!(f, "\"")
                }
            }
            Value::Null(k) => write!(f, "_:n{k}"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A deterministic source of labeled nulls. Every chase run allocates from a
/// source seeded past the nulls already present in its input, so replaying a
/// trigger sequence reproduces the same names.
#[derive(Debug, Clone)]
pub struct NullSource {
    next: u64,
}

impl NullSource {
    pub fn new() -> Self {
        NullSource { next: 0 }
    }

    /// A source whose allocations cannot collide with nulls in `values`.
    pub fn past(values: impl Iterator<Item = Value>) -> Self {
        let next = values
            .filter_map(|v| match v {
                Value::Null(k) => Some(k + 1),
                Value::Atom(_) => None,
            })
            .max()
            .unwrap_or(0);
        NullSource { next }
    }

    pub fn fresh(&mut self) -> Value {
        let v = Value::Null(self.next);
        self.next += 1;
        v
    }
}

impl Default for NullSource {
    fn default() -> Self {
        Self::new()
    }
}

/// Yields atoms guaranteed not to occur in `used`, in a deterministic order.
/// Used to freeze dependency bodies with fresh constants.
pub struct FreshAtoms {
    used: BTreeSet<Value>,
    counter: u64,
}

impl FreshAtoms {
    pub fn avoiding(used: BTreeSet<Value>) -> Self {
        FreshAtoms { used, counter: 0 }
    }

    pub fn next(&mut self) -> Value {
        loop {
            let candidate = Value::atom(alloc::format!("f{}", self.counter));
            self.counter += 1;
            if !self.used.contains(&candidate) {
                self.used.insert(candidate.clone());
                return candidate;
            }
        }
    }
}

/// A tuple in the named perspective: a function from attributes to values.
pub type Tuple = BTreeMap<AttrName, Value>;

/// A relational schema: a finite map from relation names to attribute sets,
/// with each attribute list held in the global attribute order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Schema {
    relations: BTreeMap<RelName, Vec<AttrName>>,
}

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    /// Adds a relation. Attributes are sorted into the global order;
    /// duplicates are rejected.
    pub fn add_relation(
        &mut self,
        rel: RelName,
        attrs: impl IntoIterator<Item = AttrName>,
    ) -> Result<()> {
        let mut attrs: Vec<AttrName> = attrs.into_iter().collect();
        attrs.sort();
        if attrs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedExpression(alloc::format!(
                "duplicate attribute in relation {rel}"
            )));
        }
        self.relations.insert(rel, attrs);
        Ok(())
    }

    pub fn relations(&self) -> impl Iterator<Item = (&RelName, &[AttrName])> {
        self.relations.iter().map(|(r, a)| (r, a.as_slice()))
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &RelName> {
        self.relations.keys()
    }

    pub fn attrs(&self, rel: &RelName) -> Option<&[AttrName]> {
        self.relations.get(rel).map(|a| a.as_slice())
    }

    pub fn contains(&self, rel: &RelName) -> bool {
        self.relations.contains_key(rel)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Total attribute count over all relations, used for size bounds.
    pub fn total_attrs(&self) -> usize {
        self.relations.values().map(|a| a.len()).sum()
    }
}

impl fmt::Debug for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "schema {{ ")?;
        for (r, attrs) in &self.relations {
            write!(f, "{r}(")?;
            for (i, a) in attrs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ") ")?;
        }
        write!(f, "}}")
    }
}

/// True iff every relation of `older` is defined in `newer` with at least the
/// same attributes.
pub fn schema_extends(newer: &Schema, older: &Schema) -> bool {
    older
        .relations()
        .all(|(rel, attrs)| match newer.attrs(rel) {
            Some(new_attrs) => {
                let have: BTreeSet<&AttrName> = new_attrs.iter().collect();
                attrs.iter().all(|a| have.contains(a))
            }
            None => false,
        })
}

/// An instance: a set of tuples per relation of its schema.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Instance {
    schema: Schema,
    relations: BTreeMap<RelName, BTreeSet<Tuple>>,
}

impl Instance {
    /// An empty instance of `schema`.
    pub fn empty(schema: Schema) -> Self {
        let relations = schema
            .relation_names()
            .map(|r| (r.clone(), BTreeSet::new()))
            .collect();
        Instance { schema, relations }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Inserts a tuple, validating that it ranges over exactly the relation's
    /// attributes. Returns whether the tuple was new.
    pub fn insert(&mut self, rel: &RelName, tuple: Tuple) -> Result<bool> {
        let attrs = self
            .schema
            .attrs(rel)
            .ok_or_else(|| Error::UnknownRelation(rel.to_string()))?;
        if tuple.len() != attrs.len() || !attrs.iter().all(|a| tuple.contains_key(a)) {
            return Err(Error::MalformedTuple {
                relation: rel.to_string(),
                detail: alloc::format!(
                    "expected attributes ({})",
                    attrs
                        .iter()
                        .map(|a| a.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            });
        }
        Ok(self
            .relations
            .get_mut(rel)
            .expect("validated")
            .insert(tuple))
    }

    pub fn tuples(&self, rel: &RelName) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(rel)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&RelName, &BTreeSet<Tuple>)> {
        self.relations.iter()
    }

    pub fn total_tuples(&self) -> usize {
        self.relations.values().map(|t| t.len()).sum()
    }

    /// All values occurring in any tuple.
    pub fn active_domain(&self) -> BTreeSet<Value> {
        self.relations
            .values()
            .flat_map(|tuples| tuples.iter().flat_map(|t| t.values().cloned()))
            .collect()
    }

    pub fn has_nulls(&self) -> bool {
        self.relations
            .values()
            .any(|ts| ts.iter().any(|t| t.values().any(Value::is_null)))
    }

    /// Set containment at equal schemas: every tuple of `self` is in `other`.
    pub fn subset_of(&self, other: &Instance) -> bool {
        self.relations.iter().all(|(rel, tuples)| {
            other
                .tuples(rel)
                .map(|os| tuples.is_subset(os))
                .unwrap_or(tuples.is_empty())
        })
    }

    /// Union of tuple sets; schemas must be equal.
    pub fn union(&self, other: &Instance) -> Result<Instance> {
        if self.schema != other.schema {
            return Err(Error::SchemaMismatch("union of instances".into()));
        }
        let mut out = self.clone();
        for (rel, tuples) in other.relations() {
            out.relations
                .get_mut(rel)
                .expect("same schema")
                .extend(tuples.iter().cloned());
        }
        Ok(out)
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instance {{")?;
        for (rel, tuples) in &self.relations {
            for t in tuples {
                write!(f, "  {rel}(")?;
                for (i, (a, v)) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}: {v}")?;
                }
                writeln!(f, ")")?;
            }
        }
        write!(f, "}}")
    }
}

/// True iff `newer` extends `older`: the schema extends, and every tuple of
/// `older` has a tuple of `newer` agreeing on all of `older`'s attributes.
///
/// The prose in the source material reads as projection containment in the
/// other direction; the formal clause is the one implemented here.
pub fn instance_extends(newer: &Instance, older: &Instance) -> bool {
    if !schema_extends(newer.schema(), older.schema()) {
        return false;
    }
    older.relations().all(|(rel, tuples)| {
        let new_tuples = match newer.tuples(rel) {
            Some(ts) => ts,
            None => return tuples.is_empty(),
        };
        tuples.iter().all(|t| {
            new_tuples
                .iter()
                .any(|t2| t.iter().all(|(a, v)| t2.get(a) == Some(v)))
        })
    })
}

/// Projection of a relation onto `attrs`, with duplicate elimination.
pub fn project(i: &Instance, rel: &RelName, attrs: &[AttrName]) -> Result<BTreeSet<Tuple>> {
    let schema_attrs = i
        .schema()
        .attrs(rel)
        .ok_or_else(|| Error::UnknownRelation(rel.to_string()))?;
    for a in attrs {
        if !schema_attrs.contains(a) {
            return Err(Error::UnknownAttribute {
                relation: rel.to_string(),
                attribute: a.to_string(),
            });
        }
    }
    Ok(i.tuples(rel)
        .expect("relation validated")
        .iter()
        .map(|t| {
            attrs
                .iter()
                .map(|a| {
                    (
                        a.clone(),
                        t.get(a).expect("schema-conformant tuple").clone(),
                    )
                })
                .collect()
        })
        .collect())
}

/// The unnamed view of a relation: tuples as value lists in attribute order.
/// This is the answer of a total query; answers over schemas of different
/// arities are never equal, which is what pins relation arities under
/// preservation.
pub fn unnamed_tuples(i: &Instance, rel: &RelName) -> Result<BTreeSet<Vec<Value>>> {
    let attrs = i
        .schema()
        .attrs(rel)
        .ok_or_else(|| Error::UnknownRelation(rel.to_string()))?;
    Ok(i.tuples(rel)
        .expect("relation validated")
        .iter()
        .map(|t| attrs.iter().map(|a| t[a].clone()).collect())
        .collect())
}

/// Builds a tuple from attribute/value pairs.
pub fn tuple(pairs: impl IntoIterator<Item = (AttrName, Value)>) -> Tuple {
    pairs.into_iter().collect()
}
